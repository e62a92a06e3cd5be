//! Scalar model: flux, anisotropic diffusion, and the derived quantities.
//!
//! A [`ModelSpec`] bundles `f(u)`, its derivative `a(u) = f'(u)`, the symmetric
//! positive semidefinite matrix `A(u)`, a square-root factor `σ(u)` with
//! `σσᵀ = A`, and the primitives
//!
//! * `β_ik(u) = ∫₀ᵘ σ_ik(v) dv` (the quantities whose gradients carry the
//!   parabolic dissipation), and
//! * `B_ij(u) = ∫₀ᵘ A_ij(v) dv` (the conservative form of the diffusion,
//!   `∇·(A(u)∇u) = Σ_ij ∂²_ij B_ij(u)`).
//!
//! Analytic maps are optional: the speed falls back to central differences,
//! `σ` to the symmetric eigen square root, and the primitives to quadrature.

mod matrix;
mod polynomial;
pub mod presets;
mod primitives;
mod validate;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::quadrature::{self, QuadratureError, QuadratureSettings};

pub use matrix::{Matrix, RawMatrix, RawVector, Vector, MAX_DIM};
pub use polynomial::Polynomial;
pub use primitives::{PrimitiveKind, PrimitiveMap};
pub use validate::{CheckResult, ModelValidationReport};

pub type VectorFn = Arc<dyn Fn(f64) -> RawVector + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(f64) -> RawMatrix + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model `{model}`: non-finite {quantity} at u = {u}")]
    NonFinite {
        model: String,
        quantity: &'static str,
        u: f64,
    },
    #[error("model `{model}`: A(u) is not symmetric at u = {u} (asymmetry {asymmetry:.3e})")]
    Asymmetric { model: String, u: f64, asymmetry: f64 },
    #[error("model `{model}`: A(u) is not positive semidefinite at u = {u} (smallest eigenvalue {eigenvalue:.3e})")]
    NotPsd { model: String, u: f64, eigenvalue: f64 },
    #[error("index ({i}, {j}) out of range for dimension {dim}")]
    Index { i: usize, j: usize, dim: usize },
    #[error("model `{model}`: quadrature of {quantity} up to u = {u} failed: {source}")]
    Quadrature {
        model: String,
        quantity: &'static str,
        u: f64,
        #[source]
        source: QuadratureError,
    },
    #[error("invalid model definition: {0}")]
    Invalid(String),
}

/// Tolerances used by evaluation and validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelTolerances {
    /// Smallest admissible eigenvalue of A is `-psd`.
    pub psd: f64,
    /// Admissible max-entry error of σσᵀ − A.
    pub factor: f64,
    /// Admissible scaled asymmetry of A.
    pub symmetry: f64,
}

impl Default for ModelTolerances {
    fn default() -> Self {
        Self {
            psd: 1e-12,
            factor: 1e-10,
            symmetry: 1e-12,
        }
    }
}

/// Relative step used when the speed is obtained from the flux by central differences.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

pub fn fd_step(u: f64) -> f64 {
    FD_RELATIVE_STEP * u.abs().max(1.0)
}

#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    dimension: usize,
    state_bound: f64,
    flux: VectorFn,
    speed: Option<VectorFn>,
    diffusion: MatrixFn,
    sqrt_factor: Option<MatrixFn>,
    beta: Option<MatrixFn>,
    b_primitive: Option<MatrixFn>,
    tolerances: ModelTolerances,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("state_bound", &self.state_bound)
            .field("analytic_speed", &self.speed.is_some())
            .field("analytic_sqrt_factor", &self.sqrt_factor.is_some())
            .field("analytic_beta", &self.beta.is_some())
            .field("analytic_b_primitive", &self.b_primitive.is_some())
            .finish()
    }
}

pub struct ModelBuilder {
    name: String,
    dimension: usize,
    state_bound: f64,
    flux: Option<VectorFn>,
    speed: Option<VectorFn>,
    diffusion: Option<MatrixFn>,
    sqrt_factor: Option<MatrixFn>,
    beta: Option<MatrixFn>,
    b_primitive: Option<MatrixFn>,
    tolerances: ModelTolerances,
}

impl ModelBuilder {
    pub fn flux(mut self, f: impl Fn(f64) -> RawVector + Send + Sync + 'static) -> Self {
        self.flux = Some(Arc::new(f));
        self
    }

    pub fn speed(mut self, f: impl Fn(f64) -> RawVector + Send + Sync + 'static) -> Self {
        self.speed = Some(Arc::new(f));
        self
    }

    pub fn diffusion(mut self, f: impl Fn(f64) -> RawMatrix + Send + Sync + 'static) -> Self {
        self.diffusion = Some(Arc::new(f));
        self
    }

    pub fn sqrt_factor(mut self, f: impl Fn(f64) -> RawMatrix + Send + Sync + 'static) -> Self {
        self.sqrt_factor = Some(Arc::new(f));
        self
    }

    /// Closed form of `β(u) = ∫₀ᵘ σ`.
    pub fn beta_primitive(mut self, f: impl Fn(f64) -> RawMatrix + Send + Sync + 'static) -> Self {
        self.beta = Some(Arc::new(f));
        self
    }

    /// Closed form of `B(u) = ∫₀ᵘ A`.
    pub fn diffusion_primitive(
        mut self,
        f: impl Fn(f64) -> RawMatrix + Send + Sync + 'static,
    ) -> Self {
        self.b_primitive = Some(Arc::new(f));
        self
    }

    pub fn state_bound(mut self, m: f64) -> Self {
        self.state_bound = m;
        self
    }

    pub fn tolerances(mut self, tolerances: ModelTolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn build(self) -> Result<ModelSpec, ModelError> {
        if !(1..=MAX_DIM).contains(&self.dimension) {
            return Err(ModelError::Invalid(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        if !(self.state_bound.is_finite() && self.state_bound > 0.0) {
            return Err(ModelError::Invalid(format!(
                "state bound must be positive and finite, got {}",
                self.state_bound
            )));
        }
        Ok(ModelSpec {
            name: self.name,
            dimension: self.dimension,
            state_bound: self.state_bound,
            flux: self.flux.unwrap_or_else(|| Arc::new(|_| [0.0; MAX_DIM])),
            speed: self.speed,
            diffusion: self
                .diffusion
                .unwrap_or_else(|| Arc::new(|_| [[0.0; MAX_DIM]; MAX_DIM])),
            sqrt_factor: self.sqrt_factor,
            beta: self.beta,
            b_primitive: self.b_primitive,
            tolerances: self.tolerances,
        })
    }
}

/// Coefficient lists for a polynomial model. `flux[axis]` are the coefficients
/// of `f_axis`; `diffusion_upper` lists `A11, A12, A22` (only `A11` in 1D).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialModel {
    pub dimension: usize,
    pub flux: Vec<Polynomial>,
    pub diffusion_upper: Vec<Polynomial>,
}

impl PolynomialModel {
    fn entry(&self, i: usize, j: usize) -> &Polynomial {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // upper-triangle order: (0,0), (0,1), (1,1)
        let idx = match (i, j) {
            (0, 0) => 0,
            (0, 1) => 1,
            _ => 2,
        };
        &self.diffusion_upper[idx]
    }

    pub fn build(&self, name: &str, state_bound: f64) -> Result<ModelSpec, ModelError> {
        let d = self.dimension;
        let expected = if d == 1 { 1 } else { 3 };
        if !(1..=MAX_DIM).contains(&d) {
            return Err(ModelError::Invalid(format!("dimension must be 1 or 2, got {d}")));
        }
        if self.flux.len() != d || self.diffusion_upper.len() != expected {
            return Err(ModelError::Invalid(format!(
                "polynomial model of dimension {d} needs {d} flux and {expected} diffusion entries"
            )));
        }
        let vec_of = |polys: Vec<Polynomial>| {
            move |u: f64| {
                let mut out = [0.0; MAX_DIM];
                for (o, p) in out.iter_mut().zip(&polys) {
                    *o = p.eval(u);
                }
                out
            }
        };
        let mat_of = |polys: [[Polynomial; MAX_DIM]; MAX_DIM]| {
            move |u: f64| {
                let mut out = [[0.0; MAX_DIM]; MAX_DIM];
                for i in 0..d {
                    for j in 0..d {
                        out[i][j] = polys[i][j].eval(u);
                    }
                }
                out
            }
        };
        let entries = |map: &dyn Fn(&Polynomial) -> Polynomial| {
            let mut out: [[Polynomial; MAX_DIM]; MAX_DIM] = Default::default();
            for (i, row) in out.iter_mut().enumerate().take(d) {
                for (j, cell) in row.iter_mut().enumerate().take(d) {
                    *cell = map(self.entry(i, j));
                }
            }
            out
        };

        let flux = self.flux.clone();
        let speed: Vec<Polynomial> = self.flux.iter().map(Polynomial::derivative).collect();
        ModelSpec::builder(name, d)
            .state_bound(state_bound)
            .flux(vec_of(flux))
            .speed(vec_of(speed))
            .diffusion(mat_of(entries(&|p| p.clone())))
            .diffusion_primitive(mat_of(entries(&Polynomial::antiderivative)))
            .build()
    }
}

impl ModelSpec {
    pub fn builder(name: impl Into<String>, dimension: usize) -> ModelBuilder {
        ModelBuilder {
            name: name.into(),
            dimension,
            state_bound: 1.0,
            flux: None,
            speed: None,
            diffusion: None,
            sqrt_factor: None,
            beta: None,
            b_primitive: None,
            tolerances: ModelTolerances::default(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The bound M of the state interval [−M, M].
    pub fn state_bound(&self) -> f64 {
        self.state_bound
    }

    pub fn tolerances(&self) -> ModelTolerances {
        self.tolerances
    }

    pub fn with_state_bound(&self, m: f64) -> Result<ModelSpec, ModelError> {
        if !(m.is_finite() && m > 0.0) {
            return Err(ModelError::Invalid(format!(
                "state bound must be positive and finite, got {m}"
            )));
        }
        Ok(ModelSpec {
            state_bound: m,
            ..self.clone()
        })
    }

    pub fn with_tolerances(&self, tolerances: ModelTolerances) -> ModelSpec {
        ModelSpec {
            tolerances,
            ..self.clone()
        }
    }

    /// True when the model carries an analytic `B` primitive.
    pub fn has_analytic_diffusion_primitive(&self) -> bool {
        self.b_primitive.is_some()
    }

    pub fn has_analytic_beta(&self) -> bool {
        self.beta.is_some()
    }

    fn non_finite(&self, quantity: &'static str, u: f64) -> ModelError {
        ModelError::NonFinite {
            model: self.name.clone(),
            quantity,
            u,
        }
    }

    fn check_index(&self, i: usize, j: usize) -> Result<(), ModelError> {
        if i < self.dimension && j < self.dimension {
            Ok(())
        } else {
            Err(ModelError::Index {
                i,
                j,
                dim: self.dimension,
            })
        }
    }

    // Unchecked evaluations used in the inner loops of the solver.

    #[inline]
    pub(crate) fn flux_raw(&self, u: f64) -> RawVector {
        (self.flux)(u)
    }

    #[inline]
    pub(crate) fn speed_raw(&self, u: f64) -> RawVector {
        match &self.speed {
            Some(a) => a(u),
            None => self.speed_fd_raw(u),
        }
    }

    #[inline]
    pub(crate) fn diffusion_raw(&self, u: f64) -> RawMatrix {
        (self.diffusion)(u)
    }

    fn speed_fd_raw(&self, u: f64) -> RawVector {
        let h = fd_step(u);
        let fp = (self.flux)(u + h);
        let fm = (self.flux)(u - h);
        let mut out = [0.0; MAX_DIM];
        for k in 0..self.dimension {
            out[k] = (fp[k] - fm[k]) / (2.0 * h);
        }
        out
    }

    /// `f(u)`.
    pub fn flux_eval(&self, u: f64) -> Result<Vector, ModelError> {
        let v = Vector::new(self.dimension, self.flux_raw(u));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.non_finite("flux", u))
        }
    }

    /// `a(u) = f'(u)`: the analytic speed if supplied, otherwise a central
    /// difference of the flux with step `1e-6·max(1, |u|)`.
    pub fn speed_eval(&self, u: f64) -> Result<Vector, ModelError> {
        let v = Vector::new(self.dimension, self.speed_raw(u));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.non_finite("speed", u))
        }
    }

    /// The difference-quotient speed, regardless of whether an analytic one exists.
    pub fn speed_fallback(&self, u: f64) -> Vector {
        Vector::new(self.dimension, self.speed_fd_raw(u))
    }

    /// `A(u)`; rejects non-finite entries and asymmetry beyond round-off.
    pub fn diffusion_eval(&self, u: f64) -> Result<Matrix, ModelError> {
        let a = Matrix::new(self.dimension, self.diffusion_raw(u));
        if !a.is_finite() {
            return Err(self.non_finite("diffusion", u));
        }
        let asymmetry = a.asymmetry();
        if asymmetry > self.tolerances.symmetry {
            return Err(ModelError::Asymmetric {
                model: self.name.clone(),
                u,
                asymmetry,
            });
        }
        Ok(a)
    }

    /// `σ(u)` with `σσᵀ = A(u)`.
    pub fn sqrt_factor_eval(&self, u: f64) -> Result<Matrix, ModelError> {
        if let Some(s) = &self.sqrt_factor {
            let m = Matrix::new(self.dimension, s(u));
            return if m.is_finite() {
                Ok(m)
            } else {
                Err(self.non_finite("square-root factor", u))
            };
        }
        let a = self.diffusion_eval(u)?;
        a.psd_sqrt(self.tolerances.psd)
            .ok_or_else(|| ModelError::NotPsd {
                model: self.name.clone(),
                u,
                eigenvalue: a.min_eigenvalue(),
            })
    }

    /// Integrates one entry of a matrix-valued coefficient from 0 to `u`.
    fn integrate_entry(
        &self,
        quantity: &'static str,
        lower: f64,
        upper: f64,
        settings: &QuadratureSettings,
        entry: impl Fn(f64) -> Result<f64, ModelError>,
    ) -> Result<f64, ModelError> {
        let failure = std::cell::RefCell::new(None);
        let integrand = |v: f64| match entry(v) {
            Ok(x) => x,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let result = quadrature::integrate(integrand, lower, upper, settings);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        result
            .map(|est| est.value)
            .map_err(|source| ModelError::Quadrature {
                model: self.name.clone(),
                quantity,
                u: upper,
                source,
            })
    }

    /// `β_ik(u) = ∫₀ᵘ σ_ik(v) dv` by adaptive quadrature.
    pub fn beta_eval(&self, u: f64, i: usize, k: usize) -> Result<f64, ModelError> {
        self.check_index(i, k)?;
        self.integrate_entry("beta", 0.0, u, &QuadratureSettings::MODEL, |v| {
            self.sqrt_factor_eval(v).map(|s| s.get(i, k))
        })
    }

    /// `B_ij(u) = ∫₀ᵘ A_ij(v) dv` by adaptive quadrature.
    pub fn bprimitive_eval(&self, u: f64, i: usize, j: usize) -> Result<f64, ModelError> {
        self.check_index(i, j)?;
        self.integrate_entry("B primitive", 0.0, u, &QuadratureSettings::MODEL, |v| {
            self.diffusion_eval(v).map(|a| a.get(i, j))
        })
    }

    /// `∫ₗᵘ σ_ik` or `∫ₗᵘ A_ij` over an arbitrary interval.
    pub fn primitive_increment(
        &self,
        kind: PrimitiveKind,
        lower: f64,
        upper: f64,
        i: usize,
        j: usize,
        settings: &QuadratureSettings,
    ) -> Result<f64, ModelError> {
        self.check_index(i, j)?;
        match kind {
            PrimitiveKind::Beta => self.integrate_entry("beta", lower, upper, settings, |v| {
                self.sqrt_factor_eval(v).map(|s| s.get(i, j))
            }),
            PrimitiveKind::Diffusion => {
                self.integrate_entry("B primitive", lower, upper, settings, |v| {
                    self.diffusion_eval(v).map(|a| a.get(i, j))
                })
            }
        }
    }

    /// The closed-form primitive, if the model supplies one.
    pub fn analytic_primitive(&self, kind: PrimitiveKind, u: f64) -> Option<Matrix> {
        let f = match kind {
            PrimitiveKind::Beta => self.beta.as_ref()?,
            PrimitiveKind::Diffusion => self.b_primitive.as_ref()?,
        };
        Some(Matrix::new(self.dimension, f(u)))
    }

    pub(crate) fn analytic_primitive_fn(&self, kind: PrimitiveKind) -> Option<MatrixFn> {
        match kind {
            PrimitiveKind::Beta => self.beta.clone(),
            PrimitiveKind::Diffusion => self.b_primitive.clone(),
        }
    }

    /// Runs every model invariant on a uniform grid of `samples` points in [−M, M].
    pub fn validate(&self, samples: usize) -> ModelValidationReport {
        validate::validate_model(self, samples)
    }

    /// Largest `|a_axis|` and `|A_ij|` over `[lo, hi]`, from the endpoints, zero
    /// (when enclosed) and a uniform grid of 64 interior samples.
    pub(crate) fn coefficient_bounds(&self, lo: f64, hi: f64) -> (RawVector, RawMatrix) {
        let mut speed = [0.0f64; MAX_DIM];
        let mut diff = [[0.0f64; MAX_DIM]; MAX_DIM];
        let mut visit = |u: f64| {
            let a = self.speed_raw(u);
            let m = self.diffusion_raw(u);
            for i in 0..self.dimension {
                speed[i] = speed[i].max(a[i].abs());
                for j in 0..self.dimension {
                    diff[i][j] = diff[i][j].max(m[i][j].abs());
                }
            }
        };
        visit(lo);
        visit(hi);
        if lo < 0.0 && hi > 0.0 {
            visit(0.0);
        }
        const INTERIOR: usize = 64;
        if hi > lo {
            for k in 1..INTERIOR {
                visit(lo + (hi - lo) * k as f64 / INTERIOR as f64);
            }
        }
        (speed, diff)
    }
}

//! Spatial operator: local Lax–Friedrichs fluxes for ∇·f(u) and second
//! differences of the primitive B for the diffusion.

use serde::{Deserialize, Serialize};

use super::{CellField, PeriodicGrid, SolverError};
use crate::model::{ModelSpec, PrimitiveKind, PrimitiveMap, RawMatrix, RawVector, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Euler,
    SspRk2,
}

impl Integrator {
    pub fn as_str(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::SspRk2 => "ssp-rk2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "euler" => Some(Integrator::Euler),
            "ssp-rk2" => Some(Integrator::SspRk2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub cfl: f64,
    pub integrator: Integrator,
    pub t_end: f64,
    /// Diagnostic cadence in simulation time.
    pub output_every: f64,
    pub snapshot_every: Option<f64>,
    /// Extra times at which a diagnostics row is recorded.
    pub checkpoints: Vec<f64>,
}

impl SchemeConfig {
    pub const DEFAULT_CFL: f64 = 0.4;

    pub fn new(t_end: f64, output_every: f64) -> Self {
        Self {
            cfl: Self::DEFAULT_CFL,
            integrator: Integrator::SspRk2,
            t_end,
            output_every,
            snapshot_every: None,
            checkpoints: Vec::new(),
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: &[f64]) -> Self {
        self.checkpoints = checkpoints.to_vec();
        self
    }

    /// Rejects values that make the run meaningless. A CFL number above 1 is
    /// accepted (the scheme is then no longer monotone).
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return bad(format!("cfl must be positive, got {}", self.cfl));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.output_every > 0.0 && self.output_every.is_finite()) {
            return bad(format!("output_every must be positive, got {}", self.output_every));
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("snapshot_every must be positive, got {s}"));
            }
        }
        if let Some(c) = self.checkpoints.iter().find(|c| !(**c >= 0.0 && **c <= self.t_end)) {
            return bad(format!("checkpoint {c} outside [0, t_end]"));
        }
        Ok(())
    }
}

/// F = ½(f(uL) + f(uR)) − ½α(uR − uL) along `axis`.
pub fn numerical_flux_llf(model: &ModelSpec, ul: f64, ur: f64, axis: usize, alpha: f64) -> f64 {
    llf(model.flux_raw(ul)[axis], model.flux_raw(ur)[axis], ul, ur, alpha)
}

#[inline(always)]
fn llf(fl: f64, fr: f64, ul: f64, ur: f64, alpha: f64) -> f64 {
    0.5 * (fl + fr) - 0.5 * alpha * (ur - ul)
}

/// Max |a_i| and max |A_ij| over a value range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds {
    pub alpha: RawVector,
    pub lambda: RawMatrix,
}

impl CoefficientBounds {
    pub fn over(model: &ModelSpec, lo: f64, hi: f64) -> Self {
        let (alpha, lambda) = model.coefficient_bounds(lo, hi);
        Self { alpha, lambda }
    }

    fn diffusion_active(&self, d: usize) -> bool {
        (0..d).any(|i| (0..d).any(|j| self.lambda[i][j] > 0.0))
    }

    fn cross_active(&self, d: usize) -> bool {
        d == 2 && self.lambda[0][1] > 0.0
    }

    /// Σ α_i/h_i + 2 Σ Λ_ij/(h_i h_j)
    pub fn stability_sum(&self, grid: &PeriodicGrid) -> f64 {
        let d = grid.dimension();
        let mut s = 0.0;
        for i in 0..d {
            s += self.alpha[i] / grid.spacing(i);
            for j in 0..d {
                s += 2.0 * self.lambda[i][j] / (grid.spacing(i) * grid.spacing(j));
            }
        }
        s
    }

    /// cfl divided by the stability sum; infinite when nothing moves.
    pub fn stable_dt(&self, grid: &PeriodicGrid, cfl: f64) -> f64 {
        let s = self.stability_sum(grid);
        if s == 0.0 {
            f64::INFINITY
        } else {
            cfl / s
        }
    }
}

/// Largest stable time step for `field`; `f64::INFINITY` when the flux speed
/// and the diffusion both vanish on the field range.
pub fn stable_dt(
    model: &ModelSpec,
    field: &CellField,
    grid: &PeriodicGrid,
    cfl: f64,
) -> Result<f64, SolverError> {
    field.check(grid)?;
    let dt = CoefficientBounds::over(model, field.min(), field.max()).stable_dt(grid, cfl);
    if dt > 0.0 {
        Ok(dt)
    } else {
        Err(SolverError::ZeroTimeStep)
    }
}

/// Discrete ∇·f(u) with α from the field range.
pub fn hyperbolic_div(
    model: &ModelSpec,
    field: &CellField,
    grid: &PeriodicGrid,
) -> Result<Vec<f64>, SolverError> {
    field.check(grid)?;
    let bounds = CoefficientBounds::over(model, field.min(), field.max());
    let mut op = Operator::new(model, grid, None, None);
    let mut out = vec![0.0; grid.len()];
    op.hyperbolic(&field.values, &bounds.alpha, &mut out);
    Ok(out)
}

/// Discrete Σ_ij ∂_i∂_j B_ij(u).
pub fn diffusion_div(
    model: &ModelSpec,
    field: &CellField,
    grid: &PeriodicGrid,
) -> Result<Vec<f64>, SolverError> {
    field.check(grid)?;
    let b = PrimitiveMap::new(model, PrimitiveKind::Diffusion, field.min(), field.max())?;
    let mut op = Operator::new(model, grid, Some(b), None);
    let mut out = vec![0.0; grid.len()];
    op.diffusion(&field.values, true, &mut out);
    Ok(out)
}

/// Evaluates the semi-discrete right-hand side, reusing scratch buffers.
pub(crate) struct Operator<'a> {
    model: &'a ModelSpec,
    grid: &'a PeriodicGrid,
    b: Option<PrimitiveMap>,
    beta: Option<PrimitiveMap>,
    flux: Vec<RawVector>,
    bvals: Vec<[f64; 3]>,
    iface: Vec<f64>,
}

impl<'a> Operator<'a> {
    pub(crate) fn new(
        model: &'a ModelSpec,
        grid: &'a PeriodicGrid,
        b: Option<PrimitiveMap>,
        beta: Option<PrimitiveMap>,
    ) -> Self {
        let n = grid.len();
        Self {
            model,
            grid,
            b,
            beta,
            flux: vec![[0.0; MAX_DIM]; n],
            bvals: vec![[0.0; 3]; n],
            iface: vec![0.0; n],
        }
    }

    /// Builds the primitive maps for values in `lo..=hi`.
    pub(crate) fn for_range(
        model: &'a ModelSpec,
        grid: &'a PeriodicGrid,
        lo: f64,
        hi: f64,
    ) -> Result<Self, SolverError> {
        let b = PrimitiveMap::new(model, PrimitiveKind::Diffusion, lo, hi)?;
        let beta = PrimitiveMap::new(model, PrimitiveKind::Beta, lo, hi)?;
        Ok(Self::new(model, grid, Some(b), Some(beta)))
    }

    /// out = −∇_h·F(u) + Σ ∂∂B(u) with the given bounds.
    pub(crate) fn rhs(&mut self, u: &[f64], bounds: &CoefficientBounds, out: &mut [f64]) {
        self.hyperbolic(u, &bounds.alpha, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
        let d = self.grid.dimension();
        if bounds.diffusion_active(d) {
            self.diffusion(u, bounds.cross_active(d), out);
        }
    }

    /// Writes ∇_h·F(u) into `out` (overwrites).
    pub(crate) fn hyperbolic(&mut self, u: &[f64], alpha: &RawVector, out: &mut [f64]) {
        let model = self.model;
        for (f, &v) in self.flux.iter_mut().zip(u) {
            *f = model.flux_raw(v);
        }
        if self.grid.dimension() == 1 {
            let n = u.len();
            let inv_h = 1.0 / self.grid.spacing(0);
            let a = alpha[0];
            for j in 0..n {
                let r = if j + 1 == n { 0 } else { j + 1 };
                self.iface[j] = llf(self.flux[j][0], self.flux[r][0], u[j], u[r], a);
            }
            for j in 0..n {
                let l = if j == 0 { n - 1 } else { j - 1 };
                out[j] = (self.iface[j] - self.iface[l]) * inv_h;
            }
            return;
        }

        let [n1, n2] = [self.grid.cells()[0], self.grid.cells()[1]];
        let inv_h = [1.0 / self.grid.spacing(0), 1.0 / self.grid.spacing(1)];
        // axis 0: interface between rows i and i+1
        for i in 0..n1 {
            let ip = if i + 1 == n1 { 0 } else { i + 1 };
            for j in 0..n2 {
                let (c, r) = (i * n2 + j, ip * n2 + j);
                self.iface[c] = llf(self.flux[c][0], self.flux[r][0], u[c], u[r], alpha[0]);
            }
        }
        for i in 0..n1 {
            let im = if i == 0 { n1 - 1 } else { i - 1 };
            for j in 0..n2 {
                let (c, l) = (i * n2 + j, im * n2 + j);
                out[c] = (self.iface[c] - self.iface[l]) * inv_h[0];
            }
        }
        // axis 1
        for i in 0..n1 {
            let row = i * n2;
            for j in 0..n2 {
                let jp = if j + 1 == n2 { 0 } else { j + 1 };
                let (c, r) = (row + j, row + jp);
                self.iface[c] = llf(self.flux[c][1], self.flux[r][1], u[c], u[r], alpha[1]);
            }
            for j in 0..n2 {
                let jm = if j == 0 { n2 - 1 } else { j - 1 };
                let (c, l) = (row + j, row + jm);
                out[c] += (self.iface[c] - self.iface[l]) * inv_h[1];
            }
        }
    }

    /// Adds Σ_ij ∂_i∂_j B_ij(u) to `out`.
    pub(crate) fn diffusion(&mut self, u: &[f64], cross: bool, out: &mut [f64]) {
        let Some(b) = &self.b else { return };
        for (bv, &v) in self.bvals.iter_mut().zip(u) {
            let m = b.eval(v);
            *bv = [m[0][0], m[0][1], m[1][1]];
        }
        let bv = &self.bvals;
        if self.grid.dimension() == 1 {
            let n = u.len();
            let inv_h2 = 1.0 / (self.grid.spacing(0) * self.grid.spacing(0));
            for j in 0..n {
                let r = if j + 1 == n { 0 } else { j + 1 };
                self.iface[j] = bv[r][0] - bv[j][0];
            }
            for j in 0..n {
                let l = if j == 0 { n - 1 } else { j - 1 };
                out[j] += (self.iface[j] - self.iface[l]) * inv_h2;
            }
            return;
        }

        let [n1, n2] = [self.grid.cells()[0], self.grid.cells()[1]];
        let (h1, h2) = (self.grid.spacing(0), self.grid.spacing(1));
        let inv = [1.0 / (h1 * h1), 1.0 / (h2 * h2)];
        let cross_scale = 2.0 / (4.0 * h1 * h2);
        for i in 0..n1 {
            let ip = if i + 1 == n1 { 0 } else { i + 1 };
            let im = if i == 0 { n1 - 1 } else { i - 1 };
            for j in 0..n2 {
                let jp = if j + 1 == n2 { 0 } else { j + 1 };
                let jm = if j == 0 { n2 - 1 } else { j - 1 };
                let c = i * n2 + j;
                let mut acc = (bv[ip * n2 + j][0] - 2.0 * bv[c][0] + bv[im * n2 + j][0]) * inv[0]
                    + (bv[i * n2 + jp][2] - 2.0 * bv[c][2] + bv[i * n2 + jm][2]) * inv[1];
                if cross {
                    acc += (bv[ip * n2 + jp][1] - bv[ip * n2 + jm][1] - bv[im * n2 + jp][1]
                        + bv[im * n2 + jm][1])
                        * cross_scale;
                }
                out[c] += acc;
            }
        }
    }

    /// Σ_cells Σ_k (Σ_i D_i β_ik(u))² · Π h_i with centred differences D_i.
    pub(crate) fn parabolic_dissipation(&mut self, u: &[f64]) -> f64 {
        let Some(beta) = &self.beta else { return 0.0 };
        parabolic_dissipation_with(beta, self.grid, u, &mut self.bvals)
    }
}

pub(crate) fn parabolic_dissipation_with(
    beta: &PrimitiveMap,
    grid: &PeriodicGrid,
    u: &[f64],
    scratch: &mut Vec<[f64; 3]>,
) -> f64 {
    let d = grid.dimension();
    scratch.resize(u.len(), [0.0; 3]);
    let mut terms = vec![0.0; u.len()];
    if d == 1 {
        for (s, &v) in scratch.iter_mut().zip(u) {
            s[0] = beta.eval(v)[0][0];
        }
        let n = u.len();
        let scale = 0.5 / grid.spacing(0);
        for j in 0..n {
            let r = if j + 1 == n { 0 } else { j + 1 };
            let l = if j == 0 { n - 1 } else { j - 1 };
            let g = (scratch[r][0] - scratch[l][0]) * scale;
            terms[j] = g * g;
        }
    } else {
        // Full β matrices are needed here, so evaluate per neighbour.
        let vals: Vec<RawMatrix> = u.iter().map(|&v| beta.eval(v)).collect();
        let [n1, n2] = [grid.cells()[0], grid.cells()[1]];
        let scale = [0.5 / grid.spacing(0), 0.5 / grid.spacing(1)];
        for i in 0..n1 {
            let ip = if i + 1 == n1 { 0 } else { i + 1 };
            let im = if i == 0 { n1 - 1 } else { i - 1 };
            for j in 0..n2 {
                let jp = if j + 1 == n2 { 0 } else { j + 1 };
                let jm = if j == 0 { n2 - 1 } else { j - 1 };
                let c = i * n2 + j;
                let mut t = 0.0;
                for k in 0..2 {
                    let g = (vals[ip * n2 + j][0][k] - vals[im * n2 + j][0][k]) * scale[0]
                        + (vals[i * n2 + jp][1][k] - vals[i * n2 + jm][1][k]) * scale[1];
                    t += g * g;
                }
                terms[c] = t;
            }
        }
    }
    crate::sum::pairwise_sum(&terms) * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, Polynomial, PolynomialModel};
    use crate::solver::init_field;
    use std::f64::consts::PI;

    fn heat() -> ModelSpec {
        PolynomialModel {
            dimension: 1,
            flux: vec![Polynomial::zero()],
            diffusion_upper: vec![Polynomial::new(vec![1.0])],
        }
        .build("heat", 1.0)
        .unwrap()
    }

    #[test]
    fn llf_examples() {
        let b = presets::burgers();
        assert_eq!(numerical_flux_llf(&b, 1.0, 1.0, 0, 1.0), 0.5);
        assert_eq!(numerical_flux_llf(&b, 1.0, 0.0, 0, 1.0), 0.75);
        for name in presets::NAMES {
            let m = presets::by_name(name).unwrap();
            assert_eq!(numerical_flux_llf(&m, 0.0, 0.0, 0, 1.0), 0.0);
        }
    }

    #[test]
    fn constant_field_has_zero_divergences() {
        for name in presets::NAMES {
            let m = presets::by_name(name).unwrap();
            let g = if m.dimension() == 1 {
                PeriodicGrid::unit_1d(16).unwrap()
            } else {
                PeriodicGrid::unit_2d(8).unwrap()
            };
            let f = CellField::constant(&g, 0.37);
            assert!(hyperbolic_div(&m, &f, &g).unwrap().iter().all(|&v| v == 0.0));
            assert!(diffusion_div(&m, &f, &g).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn impulse_divergence_sums_to_zero() {
        let m = presets::linear_advection(&[1.0]);
        let g = PeriodicGrid::unit_1d(16).unwrap();
        let mut f = CellField::constant(&g, 0.0);
        f.values[5] = 1.0;
        let div = hyperbolic_div(&m, &f, &g).unwrap();
        assert!(div.iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn burgers_divergence_matches_derivative() {
        // ∂ₓ(u²/2) = 2π sin(2πx) cos(2πx) for u = sin(2πx)
        let m = presets::burgers();
        let err = |n: usize| {
            let g = PeriodicGrid::unit_1d(n).unwrap();
            let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
            let div = hyperbolic_div(&m, &f, &g).unwrap();
            div.iter()
                .enumerate()
                .map(|(k, v)| {
                    let x = g.center(k)[0];
                    (v - PI * (4.0 * PI * x).sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(256), err(512));
        assert!(e1 < 0.2, "{e1}");
        assert!(e1 / e2 > 1.8, "{}", e1 / e2);
    }

    #[test]
    fn heat_diffusion_is_second_order() {
        let m = heat();
        let err = |n: usize| {
            let g = PeriodicGrid::unit_1d(n).unwrap();
            let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
            let div = diffusion_div(&m, &f, &g).unwrap();
            // exact cell averages of −(2π)² sin(2πx)
            let h = 1.0 / n as f64;
            let factor = (PI * h).sin() / (PI * h);
            div.iter()
                .enumerate()
                .map(|(k, v)| {
                    let x = g.center(k)[0];
                    (v + 4.0 * PI * PI * (2.0 * PI * x).sin() * factor).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 < 0.1);
        assert!((e1 / e2 - 4.0).abs() < 0.1, "{}", e1 / e2);
    }

    #[test]
    fn porous_medium_diffusion_is_second_difference_of_square() {
        let m = presets::porous_medium(2.0);
        let g = PeriodicGrid::unit_1d(32).unwrap();
        let f = init_field(&g, |x| 1.5 + (2.0 * PI * x[0]).sin()).unwrap();
        let div = diffusion_div(&m, &f, &g).unwrap();
        let h2 = g.spacing(0).powi(2);
        let u = &f.values;
        for j in 0..32 {
            let (l, r) = ((j + 31) % 32, (j + 1) % 32);
            let direct = (u[r] * u[r] - 2.0 * u[j] * u[j] + u[l] * u[l]) / h2;
            assert!((div[j] - direct).abs() <= 1e-12 * direct.abs().max(1.0) * 1e2);
        }
    }

    #[test]
    fn stable_dt_examples() {
        let g = PeriodicGrid::unit_1d(64).unwrap();
        let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let lin = presets::linear_advection(&[1.0]);
        assert!((stable_dt(&lin, &f, &g, 0.5).unwrap() - 0.0078125).abs() < 1e-15);
        let dt = stable_dt(&heat(), &f, &g, 0.5).unwrap();
        assert!((dt - 0.5 / (2.0 * 64.0 * 64.0)).abs() < 1e-18);
        let zero = PolynomialModel {
            dimension: 1,
            flux: vec![Polynomial::zero()],
            diffusion_upper: vec![Polynomial::zero()],
        }
        .build("zero", 1.0)
        .unwrap();
        assert_eq!(stable_dt(&zero, &f, &g, 0.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn parabolic_dissipation_examples() {
        let g = PeriodicGrid::unit_1d(512).unwrap();
        let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let heat = heat();
        let mut op = Operator::for_range(&heat, &g, -1.0, 1.0).unwrap();
        let p = op.parabolic_dissipation(&f.values);
        assert!((p / (2.0 * PI * PI) - 1.0).abs() < 0.02, "{p}");
        let c = CellField::constant(&g, 0.4);
        assert_eq!(op.parabolic_dissipation(&c.values), 0.0);
        let b = presets::burgers();
        let mut op = Operator::for_range(&b, &g, -1.0, 1.0).unwrap();
        assert_eq!(op.parabolic_dissipation(&f.values), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::new(1.0, 0.1).validate().is_ok());
        assert!(SchemeConfig::new(1.0, 0.1).with_cfl(2.0).validate().is_ok());
        assert!(SchemeConfig::new(1.0, 0.1).with_cfl(0.0).validate().is_err());
        assert!(SchemeConfig::new(1.0, 0.0).validate().is_err());
        assert!(SchemeConfig::new(1.0, 0.1).with_checkpoints(&[2.0]).validate().is_err());
    }
}

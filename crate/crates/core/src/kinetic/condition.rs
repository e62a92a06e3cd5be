//! Numerical evaluation of the nonlinearity-diffusivity condition
//!
//! ```text
//! ω_δ(λ) = sup_{|τ|+|κ| ≥ δ} ∫_{|ξ| ≤ M} λ dξ / (λ + |τ + a(ξ)·κ|² + (κᵀA(ξ)κ)²)  →  0  as λ → 0.
//! ```
//!
//! The supremum runs over an unbounded set, so it is replaced by a maximum
//! over a finite [`SamplingPlan`]; the result is a lower bound of the true
//! supremum. The plan always contains the resonant rays `τ = −a(ξ*)·e`,
//! `κ = e` for sampled states ξ*, because that is where the supremum
//! concentrates when the flux is affine on an interval where `A` degenerates.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::KineticError;
use crate::model::{ModelSpec, Vector, MAX_DIM};
use crate::quadrature::{integrate_with_breaks, QuadratureSettings};

/// A point (τ, κ) of the Fourier dual of (t, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyPoint {
    pub tau: f64,
    pub kappa: Vector,
}

impl FrequencyPoint {
    pub fn new(tau: f64, kappa: &[f64]) -> Self {
        Self {
            tau,
            kappa: Vector::from_slice(kappa),
        }
    }

    /// |τ| + |κ|
    pub fn size(&self) -> f64 {
        self.tau.abs() + self.kappa.norm()
    }

    /// Rescaled so that τ² + |κ|² = 1 (the zero point is returned unchanged).
    pub fn normalized(&self) -> Self {
        let n = (self.tau * self.tau + self.kappa.dot(&self.kappa)).sqrt();
        if n == 0.0 {
            return *self;
        }
        Self {
            tau: self.tau / n,
            kappa: self.kappa.scaled(1.0 / n),
        }
    }

    /// τ + a(ξ)·κ and κᵀA(ξ)κ.
    fn symbol_parts(&self, model: &ModelSpec, xi: f64) -> (f64, f64) {
        let a = model.speed_raw(xi);
        let diff = model.diffusion_raw(xi);
        let d = self.kappa.dim();
        let mut transport = self.tau;
        let mut quad = 0.0;
        for i in 0..d {
            transport += a[i] * self.kappa[i];
            for j in 0..d {
                quad += self.kappa[i] * diff[i][j] * self.kappa[j];
            }
        }
        (transport, quad)
    }
}

/// λ + |τ + a(ξ)·κ|² + (κᵀA(ξ)κ)².
pub fn symbol_denominator(model: &ModelSpec, fp: &FrequencyPoint, xi: f64, lambda: f64) -> f64 {
    let (transport, quad) = fp.symbol_parts(model, xi);
    lambda + transport * transport + quad * quad
}

const BREAK_SCAN: usize = 256;
const MAX_BREAKS: usize = 64;

/// Local minimizers of ξ ↦ |τ + a·κ|² + (κᵀAκ)² on [−M, M]: the places where
/// the integrand of ω peaks. Found on a uniform scan, then refined by
/// golden-section search on the bracketing cells.
fn resonance_breakpoints(model: &ModelSpec, fp: &FrequencyPoint) -> Vec<f64> {
    let m = model.state_bound();
    let g = |xi: f64| symbol_denominator(model, fp, xi, 0.0);
    let h = 2.0 * m / BREAK_SCAN as f64;
    let xs: Vec<f64> = (0..=BREAK_SCAN).map(|k| -m + h * k as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();

    let mut minima = Vec::new();
    for k in 1..BREAK_SCAN {
        if gs[k] < gs[k - 1] && gs[k] <= gs[k + 1] {
            minima.push(k);
        }
    }
    if minima.len() > MAX_BREAKS {
        return Vec::new();
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut breaks: Vec<f64> = minima
        .into_iter()
        .map(|k| {
            let (mut lo, mut hi) = (xs[k - 1], xs[k + 1]);
            let mut c = hi - INV_PHI * (hi - lo);
            let mut d = lo + INV_PHI * (hi - lo);
            let (mut gc, mut gd) = (g(c), g(d));
            for _ in 0..80 {
                if hi - lo <= 1e-14 * m {
                    break;
                }
                if gc <= gd {
                    hi = d;
                    d = c;
                    gd = gc;
                    c = hi - INV_PHI * (hi - lo);
                    gc = g(c);
                } else {
                    lo = c;
                    c = d;
                    gc = gd;
                    d = lo + INV_PHI * (hi - lo);
                    gd = g(d);
                }
            }
            0.5 * (lo + hi)
        })
        .filter(|&x| x > -m && x < m)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

fn omega_with_breaks(
    model: &ModelSpec,
    fp: &FrequencyPoint,
    lambda: f64,
    breaks: &[f64],
) -> Result<f64, KineticError> {
    let m = model.state_bound();
    let mut points = Vec::with_capacity(breaks.len() + 2);
    points.push(-m);
    points.extend_from_slice(breaks);
    points.push(m);
    let integrand = |xi: f64| lambda / symbol_denominator(model, fp, xi, lambda);
    let est = integrate_with_breaks(integrand, &points, &QuadratureSettings::KINETIC).map_err(
        |source| KineticError::Quadrature {
            context: "omega",
            source,
        },
    )?;
    // The integrand lies in [0, 1]; clamp away quadrature overshoot.
    Ok(est.value.clamp(0.0, 2.0 * m))
}

/// ∫_{|ξ| ≤ M} λ / (λ + |τ + a(ξ)·κ|² + (κᵀA(ξ)κ)²) dξ.
pub fn omega_at(model: &ModelSpec, fp: &FrequencyPoint, lambda: f64) -> Result<f64, KineticError> {
    check_lambda(lambda)?;
    check_point(model, fp)?;
    omega_with_breaks(model, fp, lambda, &resonance_breakpoints(model, fp))
}

fn check_lambda(lambda: f64) -> Result<(), KineticError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(KineticError::InvalidInput(format!("lambda must be positive, got {lambda}")))
    }
}

fn check_point(model: &ModelSpec, fp: &FrequencyPoint) -> Result<(), KineticError> {
    if fp.kappa.dim() != model.dimension() {
        return Err(KineticError::InvalidInput(format!(
            "kappa has {} components, model dimension is {}",
            fp.kappa.dim(),
            model.dimension()
        )));
    }
    Ok(())
}

/// Restricts κ to the dual lattice (2π/P_i)ℤ of a periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub periods: Vec<f64>,
    /// Largest |k_i| of κ_i = 2π k_i / P_i.
    pub max_index: i64,
}

/// How the supremum over |τ| + |κ| ≥ δ is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    /// Directions per shell |τ| + |κ| = r.
    pub directions: usize,
    /// Largest shell radius; shells are δ, 2δ, 4δ, … up to this value.
    pub radius_max: f64,
    /// Number of states ξ* in [−M, M] generating resonant rays.
    pub resonant_samples: usize,
    /// Restrict κ to a lattice instead of the continuum.
    pub lattice: Option<LatticeSpec>,
}

impl SamplingPlan {
    pub fn default_for(dimension: usize) -> Self {
        Self {
            directions: if dimension == 1 { 64 } else { 256 },
            radius_max: 1e3,
            resonant_samples: 33,
            lattice: None,
        }
    }

    fn radii(&self, delta: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut r = delta;
        while r < self.radius_max {
            out.push(r);
            r *= 2.0;
        }
        out.push(self.radius_max.max(delta));
        out
    }

    fn resonant_states(&self, m: f64) -> Vec<f64> {
        let n = self.resonant_samples.max(1);
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|k| -m + 2.0 * m * k as f64 / (n - 1) as f64)
            .collect()
    }

    /// The frequency points, in a fixed order (ties in the maximum go to the
    /// first point in this order).
    pub fn points(&self, model: &ModelSpec, delta: f64) -> Result<Vec<FrequencyPoint>, KineticError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(KineticError::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        let points = match &self.lattice {
            None => self.continuum_points(model, delta),
            Some(lattice) => self.lattice_points(model, delta, lattice)?,
        };
        if points.is_empty() {
            return Err(KineticError::EmptyPlan);
        }
        Ok(points)
    }

    fn unit_directions(&self, d: usize) -> Vec<[f64; 1 + MAX_DIM]> {
        let n = self.directions;
        let mut dirs = Vec::with_capacity(n + 2 * (d + 1));
        // Axis points first, so the κ = 0 slice is always present.
        for axis in 0..=d {
            for sign in [1.0, -1.0] {
                let mut p = [0.0; 1 + MAX_DIM];
                p[axis] = sign;
                dirs.push(p);
            }
        }
        if d == 1 {
            for k in 0..n {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                dirs.push([theta.cos(), theta.sin(), 0.0]);
            }
        } else {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for k in 0..n {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                dirs.push([z, rho * phi.cos(), rho * phi.sin()]);
            }
        }
        dirs
    }

    fn continuum_points(&self, model: &ModelSpec, delta: f64) -> Vec<FrequencyPoint> {
        let d = model.dimension();
        let radii = self.radii(delta);
        let mut points = Vec::new();
        for dir in self.unit_directions(d) {
            let kappa = Vector::from_slice(&dir[1..=d]);
            let size = dir[0].abs() + kappa.norm();
            if size == 0.0 {
                continue;
            }
            for &r in &radii {
                let s = r / size;
                points.push(FrequencyPoint {
                    tau: dir[0] * s,
                    kappa: kappa.scaled(s),
                });
            }
        }
        for xi in self.resonant_states(model.state_bound()) {
            let a = model.speed_raw(xi);
            for axis in 0..d {
                let mut e = [0.0; MAX_DIM];
                e[axis] = 1.0;
                let size = a[axis].abs() + 1.0;
                for &r in &radii {
                    let s = r / size;
                    let kappa: Vec<f64> = e[..d].iter().map(|v| v * s).collect();
                    points.push(FrequencyPoint::new(-a[axis] * s, &kappa));
                }
            }
        }
        points
    }

    fn lattice_points(
        &self,
        model: &ModelSpec,
        delta: f64,
        lattice: &LatticeSpec,
    ) -> Result<Vec<FrequencyPoint>, KineticError> {
        let d = model.dimension();
        if lattice.periods.len() != d || lattice.periods.iter().any(|p| !(*p > 0.0)) {
            return Err(KineticError::InvalidInput(format!(
                "lattice needs {d} positive periods, got {:?}",
                lattice.periods
            )));
        }
        let radii = self.radii(delta);
        let states = self.resonant_states(model.state_bound());
        let n = lattice.max_index.max(0);
        let mut kappas = Vec::new();
        for k0 in -n..=n {
            if d == 1 {
                kappas.push(vec![2.0 * std::f64::consts::PI * k0 as f64 / lattice.periods[0]]);
            } else {
                for k1 in -n..=n {
                    kappas.push(vec![
                        2.0 * std::f64::consts::PI * k0 as f64 / lattice.periods[0],
                        2.0 * std::f64::consts::PI * k1 as f64 / lattice.periods[1],
                    ]);
                }
            }
        }
        let mut points = Vec::new();
        for kappa in kappas {
            let kv = Vector::from_slice(&kappa);
            if kv.norm() > self.radius_max {
                continue;
            }
            let mut taus: Vec<f64> = vec![0.0];
            for &r in &radii {
                taus.push(r);
                taus.push(-r);
            }
            if kv.norm() > 0.0 {
                for &xi in &states {
                    let a = Vector::new(d, model.speed_raw(xi));
                    taus.push(-a.dot(&kv));
                }
            }
            for tau in taus {
                let fp = FrequencyPoint { tau, kappa: kv };
                if fp.size() >= delta {
                    points.push(fp);
                }
            }
        }
        Ok(points)
    }
}

/// Largest ω over `points` (first point wins ties).
fn sup_over(
    model: &ModelSpec,
    points: &[(FrequencyPoint, Vec<f64>)],
    lambda: f64,
) -> Result<(f64, FrequencyPoint), KineticError> {
    let values = points
        .par_iter()
        .map(|(fp, breaks)| omega_with_breaks(model, fp, lambda, breaks))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    Ok((values[best], points[best].0))
}

/// The sampled supremum of ω over |τ| + |κ| ≥ δ, with its maximizing point.
pub fn omega_delta(
    model: &ModelSpec,
    delta: f64,
    lambda: f64,
    plan: &SamplingPlan,
) -> Result<(f64, FrequencyPoint), KineticError> {
    check_lambda(lambda)?;
    let points = with_breaks(model, plan.points(model, delta)?);
    sup_over(model, &points, lambda)
}

fn with_breaks(model: &ModelSpec, points: Vec<FrequencyPoint>) -> Vec<(FrequencyPoint, Vec<f64>)> {
    points
        .into_par_iter()
        .map(|fp| {
            let b = resonance_breakpoints(model, &fp);
            (fp, b)
        })
        .collect()
}

/// Lebesgue measure of {ξ ∈ [−M, M] : |τ + a(ξ)·κ| ≤ tol and κᵀA(ξ)κ ≤ tol}
/// after normalizing τ² + |κ|² = 1, estimated from `n_samples` cell midpoints.
pub fn degeneracy_set_measure(
    model: &ModelSpec,
    fp: &FrequencyPoint,
    tol: f64,
    n_samples: usize,
) -> f64 {
    let m = model.state_bound();
    let fp = fp.normalized();
    let n = n_samples.max(1);
    let h = 2.0 * m / n as f64;
    let hits = (0..n)
        .filter(|&k| {
            let xi = -m + (k as f64 + 0.5) * h;
            let (transport, quad) = fp.symbol_parts(model, xi);
            transport.abs() <= tol && quad <= tol
        })
        .count();
    hits as f64 * h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Small at the finest λ but not monotone along the ladder.
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 3,
            Verdict::Inconclusive => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Fraction of 2M below which ω at the finest λ counts as "tending to zero".
pub const PASS_FRACTION: f64 = 0.05;
/// Allowed relative increase between consecutive λ before the trend is non-monotone.
pub const MONOTONE_SLACK: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub model: String,
    pub state_bound: f64,
    pub delta: f64,
    pub lambdas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub witnesses: Vec<FrequencyPoint>,
    pub verdict: Verdict,
    /// ω at the smallest λ divided by ω at the largest.
    pub trend_ratio: f64,
    pub pass_threshold: f64,
    pub points_sampled: usize,
    pub lattice: bool,
}

impl ConditionReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.witnesses.first().map_or(1, |fp| fp.kappa.dim());
        if d == 1 {
            writeln!(w, "lambda,omega,tau_witness,kappa_witness")?;
        } else {
            writeln!(w, "lambda,omega,tau_witness,kappa_witness_1,kappa_witness_2")?;
        }
        for ((lambda, omega), fp) in self.lambdas.iter().zip(&self.omegas).zip(&self.witnesses) {
            write!(w, "{lambda:.16e},{omega:.16e},{:.16e}", fp.tau)?;
            for k in fp.kappa.as_slice() {
                write!(w, ",{k:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn summary_line(&self) -> String {
        format!(
            "condition {}: model={} delta={} omega(lambda={:e})={:.6e} threshold={:.6e} trend_ratio={:.4e} (sampled lower bound over {} points{})",
            self.verdict.as_str(),
            self.model,
            self.delta,
            self.lambdas.last().copied().unwrap_or(f64::NAN),
            self.omegas.last().copied().unwrap_or(f64::NAN),
            self.pass_threshold,
            self.trend_ratio,
            self.points_sampled,
            if self.lattice { ", lattice" } else { "" }
        )
    }
}

/// ω_δ(λ) along a strictly decreasing λ ladder, with a thresholded-trend verdict.
pub fn check_condition(
    model: &ModelSpec,
    delta: f64,
    lambdas: &[f64],
    plan: &SamplingPlan,
) -> Result<ConditionReport, KineticError> {
    if lambdas.is_empty() {
        return Err(KineticError::InvalidInput("empty lambda ladder".into()));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(KineticError::InvalidInput(
            "lambdas must be strictly decreasing".into(),
        ));
    }
    let points = with_breaks(model, plan.points(model, delta)?);
    let mut omegas = Vec::with_capacity(lambdas.len());
    let mut witnesses = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let (omega, fp) = sup_over(model, &points, lambda)?;
        omegas.push(omega);
        witnesses.push(fp);
    }

    let m = model.state_bound();
    let pass_threshold = PASS_FRACTION * 2.0 * m;
    let last = *omegas.last().expect("non-empty");
    let monotone = omegas
        .windows(2)
        .all(|w| w[1] <= (1.0 + MONOTONE_SLACK) * w[0]);
    let verdict = if !(last < pass_threshold) {
        Verdict::Fail
    } else if !monotone {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let trend_ratio = if omegas[0] > 0.0 { last / omegas[0] } else { 0.0 };

    Ok(ConditionReport {
        model: model.name().to_string(),
        state_bound: m,
        delta,
        lambdas: lambdas.to_vec(),
        omegas,
        witnesses,
        verdict,
        trend_ratio,
        pass_threshold,
        points_sampled: points.len(),
        lattice: plan.lattice.is_some(),
    })
}

/// The default λ ladder 10⁻¹, …, 10⁻⁶.
pub fn default_lambdas() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).collect()
}

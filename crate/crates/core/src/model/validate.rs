use serde::Serialize;

use super::{fd_step, ModelSpec, PrimitiveKind};
use crate::quadrature::QuadratureSettings;

/// Outcome of one model check over the validation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub worst_residual: f64,
    /// Sample at which the worst residual occurred.
    pub worst_at: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            worst_residual: 0.0,
            worst_at: f64::NAN,
            tolerance,
            passed: true,
        }
    }

    fn record(&mut self, residual: f64, at: f64) {
        // NaN residuals count as failures.
        if !(residual <= self.worst_residual) {
            self.worst_residual = if residual.is_nan() { f64::INFINITY } else { residual };
            self.worst_at = at;
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.worst_residual <= self.tolerance;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelValidationReport {
    pub model: String,
    pub samples: usize,
    pub symmetry: CheckResult,
    pub psd: CheckResult,
    pub factorization: CheckResult,
    pub primitive_consistency: CheckResult,
    pub chain_rule: CheckResult,
}

impl ModelValidationReport {
    pub fn checks(&self) -> [&CheckResult; 5] {
        [
            &self.symmetry,
            &self.psd,
            &self.factorization,
            &self.primitive_consistency,
            &self.chain_rule,
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }

    pub fn worst_residual(&self) -> f64 {
        self.checks()
            .iter()
            .map(|c| c.worst_residual)
            .fold(0.0, f64::max)
    }

    pub fn text(&self) -> String {
        let mut s = format!("model `{}`, {} samples\n", self.model, self.samples);
        for c in self.checks() {
            s += &format!(
                "  {:<22} {} worst {:.3e} (tol {:.1e}) at u = {}\n",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.worst_residual,
                c.tolerance,
                c.worst_at
            );
        }
        s += if self.passed() { "validation: pass\n" } else { "validation: FAIL\n" };
        s
    }
}

/// The smooth nonnegative weight used by the chain-rule spot check.
fn chain_rule_weight(u: f64) -> f64 {
    1.0 / (1.0 + u * u)
}

pub(super) fn validate_model(model: &ModelSpec, samples: usize) -> ModelValidationReport {
    let samples = samples.max(2);
    let tol = model.tolerances();
    let m = model.state_bound();
    let d = model.dimension();
    let grid: Vec<f64> = (0..samples)
        .map(|k| -m + 2.0 * m * k as f64 / (samples - 1) as f64)
        .collect();
    let settings = QuadratureSettings::MODEL;

    let mut symmetry = CheckResult::new("symmetry", tol.symmetry);
    let mut psd = CheckResult::new("psd", tol.psd);
    let mut factorization = CheckResult::new("factorization", tol.factor);
    // Primitive increments between neighbouring samples must equal the
    // integral of the coefficient over that cell (weak form of β' = σ, B' = A).
    let mut primitive = CheckResult::new("primitive-consistency", 10.0 * settings.abs_tol);
    // (β^ψ)' = √ψ β' on windows of half-width h_fd around every sample.
    let mut chain = CheckResult::new("chain-rule", 1e-10);

    for &u in &grid {
        let a = super::Matrix::new(d, model.diffusion_raw(u));
        if !a.is_finite() {
            for c in [&mut symmetry, &mut psd, &mut factorization] {
                c.record(f64::INFINITY, u);
            }
            continue;
        }
        symmetry.record(a.asymmetry(), u);
        psd.record((-a.min_eigenvalue()).max(0.0), u);
        match model.sqrt_factor_eval(u) {
            Ok(s) => factorization.record(s.gram().max_abs_diff(&a), u),
            Err(_) => factorization.record(f64::INFINITY, u),
        }
    }

    let fails_hard = !(symmetry.worst_residual <= tol.symmetry && psd.worst_residual <= tol.psd);
    if fails_hard {
        // σ and its primitives are undefined; the derived checks cannot run.
        primitive.record(f64::INFINITY, f64::NAN);
        chain.record(f64::INFINITY, f64::NAN);
    } else {
        for kind in [PrimitiveKind::Beta, PrimitiveKind::Diffusion] {
            let primitive_at = |u: f64, i: usize, j: usize| -> Option<f64> {
                match model.analytic_primitive(kind, u) {
                    Some(p) => Some(p.get(i, j)),
                    None => model.primitive_increment(kind, 0.0, u, i, j, &settings).ok(),
                }
            };
            for i in 0..d {
                for j in 0..d {
                    for w in grid.windows(2) {
                        let (lo, hi) = (w[0], w[1]);
                        let residual = match (
                            primitive_at(lo, i, j),
                            primitive_at(hi, i, j),
                            model.primitive_increment(kind, lo, hi, i, j, &settings).ok(),
                        ) {
                            (Some(p0), Some(p1), Some(inc)) => ((p1 - p0) - inc).abs(),
                            _ => f64::INFINITY,
                        };
                        primitive.record(residual, hi);
                    }
                }
            }
        }

        for &u in &grid {
            let h = fd_step(u);
            let window = settings.with_abs_tol(settings.abs_tol * 2.0 * h);
            let sqrt_psi = chain_rule_weight(u).sqrt();
            for i in 0..d {
                for k in 0..d {
                    let entry = |v: f64| {
                        model
                            .sqrt_factor_eval(v)
                            .map(|s| s.get(i, k))
                            .unwrap_or(f64::NAN)
                    };
                    let weighted = crate::quadrature::integrate(
                        |v| chain_rule_weight(v).sqrt() * entry(v),
                        u - h,
                        u + h,
                        &window,
                    );
                    let plain = crate::quadrature::integrate(entry, u - h, u + h, &window);
                    let residual = match (weighted, plain) {
                        (Ok(wt), Ok(pl)) => ((wt.value - sqrt_psi * pl.value) / (2.0 * h)).abs(),
                        _ => f64::INFINITY,
                    };
                    chain.record(residual, u);
                }
            }
        }
    }

    ModelValidationReport {
        model: model.name().to_string(),
        samples,
        symmetry: symmetry.finish(),
        psd: psd.finish(),
        factorization: factorization.finish(),
        primitive_consistency: primitive.finish(),
        chain_rule: chain.finish(),
    }
}

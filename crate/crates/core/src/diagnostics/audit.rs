use serde::Serialize;

use super::DiagnosticsError;
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditTolerances {
    pub max_principle: f64,
    pub energy: f64,
    pub contraction: f64,
    pub mean_drift: f64,
    /// tol_budget = budget_relative · |T_P| · M²
    pub budget_relative: f64,
    /// Allowed error of the telescoping identity and the global bound.
    pub telescoping: f64,
    /// Fraction θ used for the decay verdict.
    pub decay_threshold: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        Self {
            max_principle: 1e-10,
            energy: 1e-12,
            contraction: 1e-12,
            mean_drift: 1e-12,
            budget_relative: 1e-8,
            telescoping: 1e-12,
            decay_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayStatus {
    pub threshold: f64,
    pub achieved: bool,
    /// First row time with l1_to_mean ≤ θ · initial.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub model: String,
    pub max_principle_violation: f64,
    /// Largest positive jump of I between consecutive steps or rows.
    pub energy_monotonicity_violation: f64,
    /// Largest positive jump of ‖u − v‖_{L¹} over the tested constants.
    pub contraction_violation: f64,
    pub contraction_constants: Vec<f64>,
    pub contraction_by_constant: Vec<f64>,
    pub mean_drift: f64,
    pub budget_tolerance: f64,
    /// Windows where resolved dissipation exceeds budget + tolerance.
    pub budget_violations: usize,
    pub cumulative_budget: f64,
    /// |Σ budget − ½(I(0) − I(t_end))|
    pub telescoping_error: f64,
    /// ½ |T_P| ‖u₀‖²_{L∞}
    pub global_budget_bound: f64,
    pub decay: DecayStatus,
    pub tolerances: AuditTolerances,
    pub passed: bool,
}

impl AuditReport {
    pub fn text(&self) -> String {
        let flag = |ok: bool| if ok { "ok" } else { "VIOLATED" };
        let t = &self.tolerances;
        let mut s = format!("audit {} for {}\n", if self.passed { "PASS" } else { "FAIL" }, self.model);
        s += &format!(
            "  max principle violation  {:.3e}  ({})\n",
            self.max_principle_violation,
            flag(self.max_principle_violation <= t.max_principle)
        );
        s += &format!(
            "  energy increase          {:.3e}  ({})\n",
            self.energy_monotonicity_violation,
            flag(self.energy_monotonicity_violation <= t.energy)
        );
        s += &format!(
            "  L1 contraction increase  {:.3e}  ({})\n",
            self.contraction_violation,
            flag(self.contraction_violation <= t.contraction)
        );
        s += &format!(
            "  mean drift               {:.3e}  ({})\n",
            self.mean_drift,
            flag(self.mean_drift <= t.mean_drift)
        );
        s += &format!(
            "  budget windows violated  {}  (tolerance {:.3e})\n",
            self.budget_violations, self.budget_tolerance
        );
        s += &format!(
            "  cumulative budget        {:.6e}  (bound {:.6e}, telescoping error {:.3e})\n",
            self.cumulative_budget, self.global_budget_bound, self.telescoping_error
        );
        match self.decay.time {
            Some(time) => {
                s += &format!("  decay to {} of initial  reached at t = {time:.6e}\n", self.decay.threshold)
            }
            None => s += &format!("  decay to {} of initial  not reached\n", self.decay.threshold),
        }
        s
    }
}

/// Checks the discrete maximum principle, energy monotonicity, L¹
/// contraction to constants, conservation and the dissipation budget.
/// The decay verdict is reported but does not affect `passed`.
pub fn audit(
    trajectory: &Trajectory,
    state_bound: f64,
    tolerances: &AuditTolerances,
) -> Result<AuditReport, DiagnosticsError> {
    let rows = &trajectory.rows;
    if rows.len() < 2 {
        return Err(DiagnosticsError::TooShort(rows.len()));
    }
    let steps = &trajectory.steps;
    let measure = trajectory.grid.measure();

    let row_energy_jump = rows
        .windows(2)
        .map(|w| w[1].l2_energy - w[0].l2_energy)
        .fold(0.0, f64::max);
    let energy_violation = steps.max_energy_increase.max(row_energy_jump).max(0.0);

    let row_drift = rows
        .iter()
        .map(|r| (r.mean - rows[0].mean).abs())
        .fold(0.0, f64::max);
    let mean_drift = steps.max_mean_drift.max(row_drift);

    let budget_tolerance = tolerances.budget_relative * measure * state_bound * state_bound;
    let budget_violations = rows[1..]
        .iter()
        .filter(|r| !(r.dissipation_resolved <= r.dissipation_budget + budget_tolerance))
        .count();
    let cumulative_budget = crate::sum::pairwise_sum(
        &rows.iter().map(|r| r.dissipation_budget).collect::<Vec<_>>(),
    );
    let expected = 0.5 * (rows[0].l2_energy - rows[rows.len() - 1].l2_energy);
    let telescoping_error = (cumulative_budget - expected).abs();
    let global_budget_bound = 0.5 * measure * trajectory.initial_linf * trajectory.initial_linf;

    let initial = rows[0].l1_to_mean;
    let theta = tolerances.decay_threshold;
    let time = rows
        .iter()
        .find(|r| r.l1_to_mean <= theta * initial)
        .map(|r| r.t);

    let passed = steps.max_principle_violation() <= tolerances.max_principle
        && energy_violation <= tolerances.energy
        && steps.max_contraction_violation() <= tolerances.contraction
        && mean_drift <= tolerances.mean_drift
        && budget_violations == 0
        && telescoping_error <= tolerances.telescoping
        && cumulative_budget <= global_budget_bound + tolerances.telescoping;

    Ok(AuditReport {
        model: trajectory.model.clone(),
        max_principle_violation: steps.max_principle_violation(),
        energy_monotonicity_violation: energy_violation,
        contraction_violation: steps.max_contraction_violation(),
        contraction_constants: steps.constants.clone(),
        contraction_by_constant: steps.max_contraction_increase.clone(),
        mean_drift,
        budget_tolerance,
        budget_violations,
        cumulative_budget,
        telescoping_error,
        global_budget_bound,
        decay: DecayStatus {
            threshold: theta,
            achieved: time.is_some(),
            time,
        },
        tolerances: *tolerances,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::solver::{init_field, run, CellField, PeriodicGrid, SchemeConfig};
    use std::f64::consts::PI;

    #[test]
    fn constant_data_passes_trivially() {
        let g = PeriodicGrid::unit_1d(32).unwrap();
        let tr = run(&presets::burgers(), &g, &CellField::constant(&g, 0.5), &SchemeConfig::new(1.0, 0.5))
            .unwrap();
        let r = audit(&tr, 1.0, &AuditTolerances::default()).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_principle_violation, 0.0);
        assert_eq!(r.energy_monotonicity_violation, 0.0);
        assert_eq!(r.decay.time, Some(0.0));
    }

    #[test]
    fn burgers_positive_control() {
        let g = PeriodicGrid::unit_1d(128).unwrap();
        let u0 = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let tr = run(&presets::burgers(), &g, &u0, &SchemeConfig::new(10.0, 0.5)).unwrap();
        let r = audit(&tr, 1.0, &AuditTolerances::default()).unwrap();
        assert!(r.passed, "{}", r.text());
        assert!(r.decay.achieved);
    }

    #[test]
    fn increasing_energy_is_flagged() {
        let g = PeriodicGrid::unit_1d(32).unwrap();
        let mut tr = run(&presets::burgers(), &g, &CellField::constant(&g, 0.0), &SchemeConfig::new(1.0, 0.5))
            .unwrap();
        tr.rows[1].l2_energy = 1.0;
        tr.rows[2].l2_energy = 2.0;
        let r = audit(&tr, 1.0, &AuditTolerances::default()).unwrap();
        assert!(r.energy_monotonicity_violation > 0.0);
        assert!(!r.passed);
    }

    #[test]
    fn short_trajectory_is_an_error() {
        let g = PeriodicGrid::unit_1d(8).unwrap();
        let mut tr = run(&presets::burgers(), &g, &CellField::constant(&g, 0.0), &SchemeConfig::new(1.0, 0.5))
            .unwrap();
        tr.rows.truncate(1);
        assert!(matches!(
            audit(&tr, 1.0, &AuditTolerances::default()),
            Err(DiagnosticsError::TooShort(1))
        ));
    }
}

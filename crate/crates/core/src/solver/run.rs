use serde::Serialize;

use super::scheme::{CoefficientBounds, Operator};
use super::{CellField, Integrator, PeriodicGrid, SchemeConfig, SolverError};
use crate::diagnostics::{self, DiagnosticsRow};
use crate::model::ModelSpec;

/// Per-step invariant tracking, updated after every time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepAudit {
    pub steps: u64,
    pub min_dt: f64,
    pub max_dt: f64,
    pub initial_min: f64,
    pub initial_max: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    pub initial_mean: f64,
    /// max |mean(uⁿ) − mean(u⁰)|
    pub max_mean_drift: f64,
    /// Largest positive jump I(tₙ₊₁) − I(tₙ) between consecutive steps.
    pub max_energy_increase: f64,
    /// Constants v tested for ‖u − v‖_{L¹} contraction.
    pub constants: Vec<f64>,
    /// Largest positive per-step jump of ‖u − v‖_{L¹}, one entry per constant.
    pub max_contraction_increase: Vec<f64>,
}

impl StepAudit {
    fn new(field: &CellField) -> Self {
        let (lo, hi) = (field.min(), field.max());
        let m = diagnostics::mean(field);
        let mut constants = vec![m];
        for k in 0..5 {
            constants.push(lo + (hi - lo) * k as f64 / 4.0);
        }
        Self {
            steps: 0,
            min_dt: f64::INFINITY,
            max_dt: 0.0,
            initial_min: lo,
            initial_max: hi,
            observed_min: lo,
            observed_max: hi,
            initial_mean: m,
            max_mean_drift: 0.0,
            max_energy_increase: 0.0,
            max_contraction_increase: vec![0.0; constants.len()],
            constants,
        }
    }

    /// How far the run left [min u⁰, max u⁰].
    pub fn max_principle_violation(&self) -> f64 {
        (self.initial_min - self.observed_min)
            .max(self.observed_max - self.initial_max)
            .max(0.0)
    }

    pub fn max_contraction_violation(&self) -> f64 {
        self.max_contraction_increase.iter().copied().fold(0.0, f64::max)
    }
}

/// Output of a run: diagnostics rows at the output cadence, optional
/// snapshots, the final state and the per-step audit.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub model: String,
    pub grid: PeriodicGrid,
    pub scheme: SchemeConfig,
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<CellField>,
    pub final_field: CellField,
    pub steps: StepAudit,
    /// ‖u₀‖_{L∞}
    pub initial_linf: f64,
}

impl Trajectory {
    /// The row recorded at time `t` (exact match), if any.
    pub fn row_at(&self, t: f64) -> Option<&DiagnosticsRow> {
        self.rows.iter().find(|r| r.t == t)
    }

    /// Σ dissipation_budget over all rows.
    pub fn cumulative_budget(&self) -> f64 {
        self.rows.iter().map(|r| r.dissipation_budget).sum()
    }
}

/// ‖uₐ − u_b‖_{L¹} between two ensemble members along the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDistance {
    pub pair: (usize, usize),
    /// Values at the diagnostics times.
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Largest positive per-step jump.
    pub max_step_increase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleRun {
    pub members: Vec<Trajectory>,
    pub pairs: Vec<PairDistance>,
}

struct Member {
    u: Vec<f64>,
    stage: Vec<f64>,
    rhs: Vec<f64>,
    rows: Vec<DiagnosticsRow>,
    snapshots: Vec<CellField>,
    audit: StepAudit,
    energy: f64,
    energy_at_row: f64,
    window_dissipation: f64,
    l1_to_constants: Vec<f64>,
    initial_linf: f64,
}

impl Member {
    fn new(field: &CellField, grid: &PeriodicGrid) -> Self {
        let audit = StepAudit::new(field);
        let l1_to_constants = audit
            .constants
            .iter()
            .map(|&v| diagnostics::l1_to_constant(field, grid, v))
            .collect();
        let energy = diagnostics::l2_energy(field, grid);
        Self {
            u: field.values.clone(),
            stage: vec![0.0; field.len()],
            rhs: vec![0.0; field.len()],
            rows: Vec::new(),
            snapshots: Vec::new(),
            audit,
            energy,
            energy_at_row: energy,
            window_dissipation: 0.0,
            l1_to_constants,
            initial_linf: diagnostics::linf(field),
        }
    }

    fn field(&self, t: f64) -> CellField {
        CellField::new(self.u.clone(), t)
    }

    /// Advances by `dt`; returns the time-integrated resolved dissipation.
    fn advance(
        &mut self,
        op: &mut Operator<'_>,
        bounds: &CoefficientBounds,
        integrator: Integrator,
        dt: f64,
        track_dissipation: bool,
    ) -> f64 {
        let p0 = if track_dissipation {
            op.parabolic_dissipation(&self.u)
        } else {
            0.0
        };
        op.rhs(&self.u, bounds, &mut self.rhs);
        match integrator {
            Integrator::Euler => {
                for (u, k) in self.u.iter_mut().zip(&self.rhs) {
                    *u += dt * k;
                }
                dt * p0
            }
            Integrator::SspRk2 => {
                for ((s, u), k) in self.stage.iter_mut().zip(&self.u).zip(&self.rhs) {
                    *s = u + dt * k;
                }
                let p1 = if track_dissipation {
                    op.parabolic_dissipation(&self.stage)
                } else {
                    0.0
                };
                op.rhs(&self.stage, bounds, &mut self.rhs);
                for ((u, s), k) in self.u.iter_mut().zip(&self.stage).zip(&self.rhs) {
                    *u = 0.5 * *u + 0.5 * (s + dt * k);
                }
                dt * 0.5 * (p0 + p1)
            }
        }
    }

    fn after_step(&mut self, grid: &PeriodicGrid, t: f64, dt: f64) {
        let field = CellField::new(std::mem::take(&mut self.u), t);
        let a = &mut self.audit;
        a.steps += 1;
        a.min_dt = a.min_dt.min(dt);
        a.max_dt = a.max_dt.max(dt);
        a.observed_min = a.observed_min.min(field.min());
        a.observed_max = a.observed_max.max(field.max());
        a.max_mean_drift = a
            .max_mean_drift
            .max((diagnostics::mean(&field) - a.initial_mean).abs());
        let energy = diagnostics::l2_energy(&field, grid);
        a.max_energy_increase = a.max_energy_increase.max(energy - self.energy);
        self.energy = energy;
        for (k, &v) in a.constants.iter().enumerate() {
            let d = diagnostics::l1_to_constant(&field, grid, v);
            a.max_contraction_increase[k] =
                a.max_contraction_increase[k].max(d - self.l1_to_constants[k]);
            self.l1_to_constants[k] = d;
        }
        self.u = field.values;
    }

    fn record_row(&mut self, grid: &PeriodicGrid, t: f64) {
        let field = CellField::new(std::mem::take(&mut self.u), t);
        let mut row = diagnostics::measure_row(&field, grid);
        self.u = field.values;
        if !self.rows.is_empty() {
            row.dissipation_resolved = self.window_dissipation;
            row.dissipation_budget = 0.5 * (self.energy_at_row - row.l2_energy);
        }
        self.window_dissipation = 0.0;
        self.energy_at_row = row.l2_energy;
        self.rows.push(row);
    }

    fn into_trajectory(
        self,
        model: &ModelSpec,
        grid: &PeriodicGrid,
        scheme: &SchemeConfig,
        t: f64,
    ) -> Trajectory {
        Trajectory {
            model: model.name().to_string(),
            grid: grid.clone(),
            scheme: scheme.clone(),
            rows: self.rows,
            snapshots: self.snapshots,
            final_field: CellField::new(self.u, t),
            steps: self.audit,
            initial_linf: self.initial_linf,
        }
    }
}

/// Sorted event times k·every ≤ t_end, plus `extra`, merged within round-off.
fn event_times(every: f64, t_end: f64, extra: &[f64]) -> Vec<f64> {
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * every;
        if t > t_end * (1.0 + 1e-12) {
            break;
        }
        times.push(t.min(t_end));
        k += 1;
    }
    times.push(t_end);
    times.extend_from_slice(extra);
    times.sort_by(f64::total_cmp);
    let eps = 1e-12 * t_end.max(1.0);
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last_mut() {
            Some(last) if (t - *last).abs() <= eps => {
                // keep exact t_end when merging into it
                if t == t_end {
                    *last = t;
                }
            }
            _ => out.push(t),
        }
    }
    out
}

/// Runs one initial field to `scheme.t_end`.
pub fn run(
    model: &ModelSpec,
    grid: &PeriodicGrid,
    initial: &CellField,
    scheme: &SchemeConfig,
) -> Result<Trajectory, SolverError> {
    run_observed(model, grid, initial, scheme, &mut |_| {})
}

/// Like [`run`], calling `observer` on every diagnostics row as it is recorded.
pub fn run_observed(
    model: &ModelSpec,
    grid: &PeriodicGrid,
    initial: &CellField,
    scheme: &SchemeConfig,
    observer: &mut dyn FnMut(&DiagnosticsRow),
) -> Result<Trajectory, SolverError> {
    let mut out = run_members(model, grid, std::slice::from_ref(initial), scheme, observer)?;
    Ok(out.members.pop().expect("one member"))
}

/// Runs several initial fields in lockstep: every member takes the same time
/// steps with the same α and stability bound, computed from the union of
/// their value ranges. This makes the discrete L¹ contraction between
/// members hold step by step.
pub fn run_ensemble(
    model: &ModelSpec,
    grid: &PeriodicGrid,
    initials: &[CellField],
    scheme: &SchemeConfig,
) -> Result<EnsembleRun, SolverError> {
    run_members(model, grid, initials, scheme, &mut |_| {})
}

fn run_members(
    model: &ModelSpec,
    grid: &PeriodicGrid,
    initials: &[CellField],
    scheme: &SchemeConfig,
    observer: &mut dyn FnMut(&DiagnosticsRow),
) -> Result<EnsembleRun, SolverError> {
    scheme.validate()?;
    if initials.is_empty() {
        return Err(SolverError::InvalidConfig("no initial fields".into()));
    }
    if grid.dimension() != model.dimension() {
        return Err(SolverError::InvalidConfig(format!(
            "grid dimension {} does not match model dimension {}",
            grid.dimension(),
            model.dimension()
        )));
    }
    for f in initials {
        f.check(grid)?;
    }

    let lo = initials.iter().map(CellField::min).fold(f64::INFINITY, f64::min);
    let hi = initials.iter().map(CellField::max).fold(f64::NEG_INFINITY, f64::max);
    let mut op = Operator::for_range(model, grid, lo, hi)?;
    let mut members: Vec<Member> = initials.iter().map(|f| Member::new(f, grid)).collect();

    let mut pairs = Vec::new();
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            pairs.push(PairDistance {
                pair: (a, b),
                times: Vec::new(),
                distances: Vec::new(),
                max_step_increase: 0.0,
            });
        }
    }
    let mut pair_now: Vec<f64> = pairs
        .iter()
        .map(|p| l1_between(&members[p.pair.0].u, &members[p.pair.1].u, grid))
        .collect();

    let row_times = event_times(scheme.output_every, scheme.t_end, &scheme.checkpoints);
    let snap_times = scheme
        .snapshot_every
        .map(|s| event_times(s, scheme.t_end, &[]))
        .unwrap_or_default();
    let (mut next_row, mut next_snap) = (0usize, 0usize);

    let mut t = 0.0;
    let record = |members: &mut Vec<Member>,
                      pairs: &mut Vec<PairDistance>,
                      pair_now: &[f64],
                      t: f64,
                      next_row: &mut usize,
                      next_snap: &mut usize,
                      observer: &mut dyn FnMut(&DiagnosticsRow)| {
        if row_times.get(*next_row) == Some(&t) {
            for (k, m) in members.iter_mut().enumerate() {
                m.record_row(grid, t);
                if k == 0 {
                    observer(m.rows.last().expect("row"));
                }
            }
            for (p, &d) in pairs.iter_mut().zip(pair_now) {
                p.times.push(t);
                p.distances.push(d);
            }
            *next_row += 1;
        }
        if snap_times.get(*next_snap) == Some(&t) {
            for m in members.iter_mut() {
                let f = m.field(t);
                m.snapshots.push(f);
            }
            *next_snap += 1;
        }
    };
    record(&mut members, &mut pairs, &pair_now, t, &mut next_row, &mut next_snap, observer);

    while t < scheme.t_end {
        let target = row_times
            .get(next_row)
            .copied()
            .unwrap_or(scheme.t_end)
            .min(snap_times.get(next_snap).copied().unwrap_or(f64::INFINITY));
        let lo = members.iter().map(|m| min_of(&m.u)).fold(f64::INFINITY, f64::min);
        let hi = members.iter().map(|m| max_of(&m.u)).fold(f64::NEG_INFINITY, f64::max);
        let bounds = CoefficientBounds::over(model, lo, hi);
        let stable = bounds.stable_dt(grid, scheme.cfl);
        let remaining = target - t;
        let (dt, t_new) = if stable >= remaining {
            (remaining, target)
        } else {
            (stable, t + stable)
        };
        if !(dt > 0.0) || t_new <= t {
            let partial = members.swap_remove(0).into_trajectory(model, grid, scheme, t);
            return Err(SolverError::BlowUp {
                time: t,
                max_abs: lo.abs().max(hi.abs()),
                partial: Box::new(partial),
            });
        }
        let track = (0..grid.dimension()).any(|i| bounds.lambda[i][i] > 0.0);
        for m in members.iter_mut() {
            m.window_dissipation += m.advance(&mut op, &bounds, scheme.integrator, dt, track);
        }
        if members.iter().any(|m| m.u.iter().any(|v| !v.is_finite())) {
            // final_field holds the non-finite state
            let partial = members.swap_remove(0).into_trajectory(model, grid, scheme, t_new);
            return Err(SolverError::BlowUp {
                time: t_new,
                max_abs: lo.abs().max(hi.abs()),
                partial: Box::new(partial),
            });
        }
        t = t_new;
        for m in members.iter_mut() {
            m.after_step(grid, t, dt);
        }
        for (p, now) in pairs.iter_mut().zip(pair_now.iter_mut()) {
            let d = l1_between(&members[p.pair.0].u, &members[p.pair.1].u, grid);
            p.max_step_increase = p.max_step_increase.max(d - *now);
            *now = d;
        }
        record(&mut members, &mut pairs, &pair_now, t, &mut next_row, &mut next_snap, observer);
    }

    let members = members
        .into_iter()
        .map(|m| m.into_trajectory(model, grid, scheme, t))
        .collect();
    Ok(EnsembleRun { members, pairs })
}

fn min_of(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn l1_between(a: &[f64], b: &[f64], grid: &PeriodicGrid) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    crate::sum::pairwise_sum(&diff) * grid.cell_volume()
}

/// One time step of size min(stable dt, output_every).
pub fn step(
    state: &CellField,
    model: &ModelSpec,
    grid: &PeriodicGrid,
    config: &SchemeConfig,
) -> Result<CellField, SolverError> {
    config.validate()?;
    state.check(grid)?;
    let (lo, hi) = (state.min(), state.max());
    let mut op = Operator::for_range(model, grid, lo, hi)?;
    let bounds = CoefficientBounds::over(model, lo, hi);
    let dt = bounds.stable_dt(grid, config.cfl).min(config.output_every);
    let mut m = Member::new(state, grid);
    m.advance(&mut op, &bounds, config.integrator, dt, false);
    let out = CellField::new(m.u, state.time + dt);
    if !out.is_finite() {
        return Err(SolverError::BlowUp {
            time: out.time,
            max_abs: lo.abs().max(hi.abs()),
            partial: Box::new(Member::new(state, grid).into_trajectory(model, grid, config, state.time)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::solver::init_field;
    use std::f64::consts::PI;

    fn sine(grid: &PeriodicGrid) -> CellField {
        init_field(grid, |x| (2.0 * PI * x[0]).sin()).unwrap()
    }

    #[test]
    fn event_times_include_end_and_checkpoints() {
        assert_eq!(event_times(0.25, 1.0, &[]), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(event_times(0.3, 0.7, &[0.65]), vec![0.0, 0.3, 0.6, 0.65, 0.7]);
        assert_eq!(event_times(0.1, 0.3, &[0.3]), vec![0.0, 0.1, 0.2, 0.3]);
    }

    #[test]
    fn constant_state_is_unchanged() {
        let g = PeriodicGrid::unit_1d(32).unwrap();
        let c = CellField::constant(&g, 0.6);
        for name in ["burgers", "burgers-degenerate", "porous-medium"] {
            let m = presets::by_name(name).unwrap();
            let tr = run(&m, &g, &c, &SchemeConfig::new(0.5, 0.1)).unwrap();
            assert!(tr.final_field.values.iter().all(|&v| v == 0.6));
            assert_eq!(tr.final_field.time, 0.5);
        }
    }

    #[test]
    fn zero_data_gives_zero_diagnostics() {
        let g = PeriodicGrid::unit_1d(16).unwrap();
        let z = CellField::constant(&g, 0.0);
        let tr = run(&presets::burgers_degenerate(), &g, &z, &SchemeConfig::new(1.0, 0.25)).unwrap();
        assert_eq!(tr.rows.len(), 5);
        for r in &tr.rows {
            assert_eq!(
                [r.mean, r.l1_to_mean, r.l2_energy, r.linf, r.dissipation_resolved, r.dissipation_budget],
                [0.0; 6]
            );
        }
    }

    #[test]
    fn mean_is_conserved_each_step() {
        let g = PeriodicGrid::unit_1d(64).unwrap();
        for name in ["linear-advection", "burgers", "burgers-degenerate", "porous-medium"] {
            let m = presets::by_name(name).unwrap();
            let tr = run(&m, &g, &sine(&g), &SchemeConfig::new(0.2, 0.05)).unwrap();
            assert!(tr.steps.max_mean_drift < 1e-13, "{name}: {}", tr.steps.max_mean_drift);
            assert!(tr.steps.max_principle_violation() < 1e-12);
            assert!(tr.steps.max_energy_increase <= 1e-12);
        }
    }

    #[test]
    fn rows_hit_output_times_exactly() {
        let g = PeriodicGrid::unit_1d(32).unwrap();
        let scheme = SchemeConfig::new(0.3, 0.1).with_checkpoints(&[0.05]);
        let tr = run(&presets::burgers(), &g, &sine(&g), &scheme).unwrap();
        let times: Vec<f64> = tr.rows.iter().map(|r| r.t).collect();
        assert_eq!(times, vec![0.0, 0.05, 0.1, 0.2, 0.3]);
        assert_eq!(tr.final_field.time, 0.3);
    }

    #[test]
    fn budget_telescopes() {
        let g = PeriodicGrid::unit_1d(64).unwrap();
        let tr = run(&presets::burgers_degenerate(), &g, &sine(&g), &SchemeConfig::new(0.5, 0.05)).unwrap();
        let first = tr.rows.first().unwrap().l2_energy;
        let last = tr.rows.last().unwrap().l2_energy;
        assert!((tr.cumulative_budget() - 0.5 * (first - last)).abs() < 1e-12);
        for r in &tr.rows[1..] {
            assert!(r.dissipation_resolved > 0.0);
            assert!(r.dissipation_resolved <= r.dissipation_budget + 1e-12);
        }
    }

    #[test]
    fn large_cfl_blows_up() {
        let g = PeriodicGrid::unit_1d(64).unwrap();
        let scheme = SchemeConfig::new(10.0, 1.0).with_cfl(2.0);
        match run(&presets::burgers(), &g, &sine(&g), &scheme) {
            Err(SolverError::BlowUp { time, partial, .. }) => {
                assert!(time > 0.0 && time < 10.0);
                assert!(!partial.rows.is_empty());
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn ensemble_contracts() {
        let g = PeriodicGrid::unit_1d(64).unwrap();
        let u = sine(&g);
        let v = init_field(&g, |x| {
            (2.0 * PI * x[0]).sin() + 0.3 * (-(x[0] - 0.3f64).powi(2) / 0.005).exp()
        })
        .unwrap();
        let out = run_ensemble(&presets::burgers_degenerate(), &g, &[u, v], &SchemeConfig::new(1.0, 0.1))
            .unwrap();
        assert_eq!(out.pairs.len(), 1);
        assert!(out.pairs[0].max_step_increase <= 1e-14);
        assert!(out.pairs[0].distances.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }

    #[test]
    fn single_step_advances_time() {
        let g = PeriodicGrid::unit_1d(64).unwrap();
        let next = step(&sine(&g), &presets::linear_advection(&[1.0]), &g, &SchemeConfig::new(1.0, 1.0).with_cfl(0.5))
            .unwrap();
        assert_eq!(next.time, 0.5 / 64.0);
    }
}

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig};
use super::profiles::initial_field;
use crate::diagnostics::{
    audit, decay_summary, richardson, AuditReport, AuditTolerances, Checkpoint, DecaySummary,
    DiagnosticsError, GridResult, RefinementTable, DEFAULT_THRESHOLDS,
};
use crate::kinetic::{check_condition, ConditionReport, KineticError, Verdict};
use crate::model::ModelError;
use crate::solver::{run, write_diagnostics_csv, write_snapshot_csv, SolverError, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_AUDIT_FAILED: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// Standard output unless quiet. Verdict lines bypass it.
#[derive(Debug, Clone, Copy)]
pub struct Console {
    pub quiet: bool,
}

impl Console {
    pub fn info(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `path` through `body`, creating parent directories.
fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// The only line in an artifact that changes between identical runs.
fn stamp_line(w: &mut impl Write) -> io::Result<()> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    writeln!(w, "# aniso {} created unix={secs}", env!("CARGO_PKG_VERSION"))
}

fn json_line<T: serde::Serialize>(w: &mut impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    writeln!(w)
}

/// Result of one simulation, with everything the sweep table needs.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub audit: Option<AuditReport>,
    pub decay: Option<DecaySummary>,
    pub steps: u64,
    /// l1_to_mean at the scheme checkpoints, or at t_end when none are set.
    pub checkpoint_l1: Vec<f64>,
    /// Set when the run stopped early.
    pub failure: Option<String>,
}

fn write_trajectory(dir: &Path, tr: &Trajectory) -> Result<(), CliError> {
    write_file(&dir.join("diagnostics.csv"), |w| {
        stamp_line(w)?;
        write_diagnostics_csv(w, &tr.rows)
    })?;
    write_file(&dir.join("final.csv"), |w| {
        write_snapshot_csv(w, &tr.grid, &tr.final_field)
    })?;
    for (k, snap) in tr.snapshots.iter().enumerate() {
        write_file(&dir.join(format!("snapshots/snapshot_{k:04}.csv")), |w| {
            write_snapshot_csv(w, &tr.grid, snap)
        })?;
    }
    Ok(())
}

/// Runs, audits and summarizes one experiment, writing its artifacts to
/// `config.output.dir`. A blow-up is an outcome with exit code 1, not an error.
pub fn execute_run(config: &ExperimentConfig, console: Console) -> Result<RunOutcome, CliError> {
    let model = config.model.build()?;
    let grid = config.grid.build()?;
    if model.dimension() != grid.dimension() {
        return Err(CliError::Usage(format!(
            "model `{}` is {}-dimensional but the grid has {} axes",
            model.name(),
            model.dimension(),
            grid.dimension()
        )));
    }
    if config.scheme.cfl > 1.0 {
        eprintln!(
            "warning: cfl = {} exceeds 1; the scheme is not monotone and may blow up",
            config.scheme.cfl
        );
    }
    let dir = &config.output.dir;
    write_file(&dir.join("config.ini"), |w| {
        stamp_line(w)?;
        w.write_all(config.serialize().as_bytes())
    })?;

    let u0 = initial_field(&config.initial, &grid)?;
    let tr = match run(&model, &grid, &u0, &config.scheme) {
        Ok(tr) => tr,
        Err(SolverError::BlowUp { time, max_abs, partial }) => {
            write_trajectory(dir, &partial)?;
            let msg = format!(
                "blow-up at t = {time:.6e} (max |u| before the failing step {max_abs:.6e})"
            );
            return Ok(RunOutcome {
                exit_code: EXIT_RUNTIME,
                audit: None,
                decay: None,
                steps: partial.steps.steps,
                checkpoint_l1: Vec::new(),
                failure: Some(msg),
            });
        }
        Err(e) => return Err(e.into()),
    };
    write_trajectory(dir, &tr)?;

    let bound = model.state_bound().max(tr.initial_linf);
    let report = audit(&tr, bound, &AuditTolerances::default())?;
    let decay = decay_summary(&tr.rows, &DEFAULT_THRESHOLDS);
    write_file(&dir.join("audit.jsonl"), |w| json_line(w, &report))?;
    write_file(&dir.join("decay.jsonl"), |w| json_line(w, &decay))?;
    console.info(&report.text());
    console.info(&decay.text());

    let times = if config.scheme.checkpoints.is_empty() {
        vec![config.scheme.t_end]
    } else {
        config.scheme.checkpoints.clone()
    };
    let checkpoint_l1 = times
        .iter()
        .map(|&t| {
            tr.row_at(t)
                .map(|r| r.l1_to_mean)
                .ok_or(DiagnosticsError::MissingCheckpoint(t))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(RunOutcome {
        exit_code: if report.passed { EXIT_OK } else { EXIT_AUDIT_FAILED },
        steps: tr.steps.steps,
        audit: Some(report),
        decay: Some(decay),
        checkpoint_l1,
        failure: None,
    })
}

/// `run`: 0 when the audit passes, 2 when it fails, 1 on a runtime error.
pub fn cmd_run(config: &ExperimentConfig, console: Console) -> Result<i32, CliError> {
    let out = execute_run(config, console)?;
    match (&out.failure, &out.audit) {
        (Some(msg), _) => eprintln!("error: {msg}"),
        (None, Some(a)) => println!(
            "run {}: audit {} after {} steps, artifacts in {}",
            a.model,
            if a.passed { "pass" } else { "FAIL" },
            out.steps,
            config.output.dir.display()
        ),
        (None, None) => {}
    }
    Ok(out.exit_code)
}

fn condition_report(config: &ExperimentConfig, lambdas: &[f64]) -> Result<ConditionReport, CliError> {
    let model = config.model.build()?;
    let plan = config.condition.plan(&config.grid.periods);
    Ok(check_condition(&model, config.condition.delta, lambdas, &plan)?)
}

fn write_condition_csv(path: &Path, report: &ConditionReport) -> Result<(), CliError> {
    write_file(path, |w| {
        stamp_line(w)?;
        report.write_csv(w)
    })
}

/// `check-condition`: 0 pass, 3 fail, 4 inconclusive.
pub fn cmd_check_condition(config: &ExperimentConfig, console: Console) -> Result<i32, CliError> {
    let report = condition_report(config, &config.condition.lambdas)?;
    let path = config.output.dir.join("condition.csv");
    write_condition_csv(&path, &report)?;
    console.info(&format!("{} sampled frequency points, table in {}", report.points_sampled, path.display()));
    println!("{}", report.summary_line());
    Ok(report.verdict.exit_code())
}

/// `validate-model`: 0 when every check passes, 2 otherwise.
pub fn cmd_validate_model(
    config: &ExperimentConfig,
    samples: usize,
    console: Console,
) -> Result<i32, CliError> {
    if samples < 2 {
        return Err(CliError::Usage(format!("--samples must be at least 2, got {samples}")));
    }
    let model = config.model.build()?;
    let report = model.validate(samples);
    write_file(&config.output.dir.join("validation.jsonl"), |w| {
        json_line(w, &report)
    })?;
    console.info(&report.text());
    println!(
        "validate-model {}: {} (worst residual {:.3e})",
        report.model,
        if report.passed() { "pass" } else { "FAIL" },
        report.worst_residual()
    );
    Ok(if report.passed() { EXIT_OK } else { EXIT_AUDIT_FAILED })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Cells,
    Cfl,
    Amplitude,
    LambdaFloor,
}

impl SweepAxis {
    pub const NAMES: [&'static str; 4] = ["cells", "cfl", "amplitude", "lambda_floor"];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cells" => Some(Self::Cells),
            "cfl" => Some(Self::Cfl),
            "amplitude" => Some(Self::Amplitude),
            "lambda_floor" => Some(Self::LambdaFloor),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

/// The λ ladder 10⁻¹, 10⁻², … above `floor`, ending at `floor`.
pub fn ladder_to(floor: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (1..)
        .map(|k| 10f64.powi(-k))
        .take_while(|&l| l > floor * (1.0 + 1e-12))
        .collect();
    out.push(floor);
    out
}

/// Applies one swept value to a copy of the configuration.
fn with_value(config: &ExperimentConfig, axis: SweepAxis, raw: &str) -> Result<ExperimentConfig, CliError> {
    let bad = |what: &str| CliError::Usage(format!("sweep value `{raw}` for {}: {what}", axis.as_str()));
    let mut c = config.clone();
    match axis {
        SweepAxis::Cells => {
            let n: usize = raw.parse().map_err(|_| bad("expected a positive integer"))?;
            if n < crate::solver::MIN_CELLS {
                return Err(bad(&format!("need at least {} cells", crate::solver::MIN_CELLS)));
            }
            c.grid.cells = vec![n; c.grid.cells.len()];
        }
        SweepAxis::Cfl | SweepAxis::Amplitude | SweepAxis::LambdaFloor => {
            let x: f64 = raw.parse().map_err(|_| bad("malformed number"))?;
            if !x.is_finite() || (axis != SweepAxis::Amplitude && x <= 0.0) {
                return Err(bad("out of range"));
            }
            match axis {
                SweepAxis::Cfl => c.scheme.cfl = x,
                SweepAxis::Amplitude => c.initial.amplitude = x,
                _ => c.condition.lambdas = ladder_to(x),
            }
        }
    }
    c.output.dir = config.output.dir.join(format!("{}={raw}", axis.as_str()));
    Ok(c)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.16e}"))
}

/// `sweep`: one experiment per value, run concurrently, tabulated in the
/// order given. Simulation axes exit like `run` (worst case wins), the λ
/// floor axis like `check-condition`.
pub fn cmd_sweep(
    config: &ExperimentConfig,
    axis: &str,
    values: &[String],
    console: Console,
) -> Result<i32, CliError> {
    let axis = SweepAxis::parse(axis).ok_or_else(|| {
        CliError::Usage(format!(
            "`{axis}` is not sweepable (expected one of {})",
            SweepAxis::NAMES.join(", ")
        ))
    })?;
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| with_value(config, axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    let table = config.output.dir.join(format!("sweep_{}.csv", axis.as_str()));
    let quiet = Console { quiet: true };

    if axis == SweepAxis::LambdaFloor {
        let reports = configs
            .par_iter()
            .map(|c| {
                let r = condition_report(c, &c.condition.lambdas)?;
                write_condition_csv(&c.output.dir.join("condition.csv"), &r)?;
                Ok(r)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        write_file(&table, |w| {
            stamp_line(w)?;
            writeln!(w, "lambda_floor,verdict,exit_code,omega_floor,trend_ratio")?;
            for (v, r) in values.iter().zip(&reports) {
                writeln!(
                    w,
                    "{v},{},{},{:.16e},{:.16e}",
                    r.verdict.as_str(),
                    r.verdict.exit_code(),
                    r.omegas.last().copied().unwrap_or(f64::NAN),
                    r.trend_ratio
                )?;
            }
            Ok(())
        })?;
        for (v, r) in values.iter().zip(&reports) {
            console.info(&format!("lambda_floor = {v}: {}", r.summary_line()));
        }
        let verdicts: Vec<Verdict> = reports.iter().map(|r| r.verdict).collect();
        let code = if verdicts.contains(&Verdict::Fail) {
            Verdict::Fail.exit_code()
        } else if verdicts.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive.exit_code()
        } else {
            EXIT_OK
        };
        println!("sweep lambda_floor: {} values, table in {}", values.len(), table.display());
        return Ok(code);
    }

    let outcomes: Vec<Result<RunOutcome, CliError>> =
        configs.par_iter().map(|c| execute_run(c, quiet)).collect();
    write_file(&table, |w| {
        stamp_line(w)?;
        writeln!(
            w,
            "{},exit_code,steps,initial_l1,final_l1,decay_time,max_principle_violation,\
             energy_violation,contraction_violation,mean_drift",
            axis.as_str()
        )?;
        for (v, o) in values.iter().zip(&outcomes) {
            match o {
                Ok(o) => {
                    let a = o.audit.as_ref();
                    let d = o.decay.as_ref();
                    writeln!(
                        w,
                        "{v},{},{},{},{},{},{},{},{},{}",
                        o.exit_code,
                        o.steps,
                        opt(d.map(|d| d.initial_l1)),
                        opt(d.map(|d| d.final_l1)),
                        opt(a.and_then(|a| a.decay.time)),
                        opt(a.map(|a| a.max_principle_violation)),
                        opt(a.map(|a| a.energy_monotonicity_violation)),
                        opt(a.map(|a| a.contraction_violation)),
                        opt(a.map(|a| a.mean_drift)),
                    )?;
                }
                Err(_) => writeln!(w, "{v},{EXIT_RUNTIME},,,,,,,,")?,
            }
        }
        Ok(())
    })?;

    let mut code = EXIT_OK;
    for (v, o) in values.iter().zip(&outcomes) {
        match o {
            Ok(o) => {
                let status = match (&o.failure, &o.audit) {
                    (Some(msg), _) => msg.clone(),
                    (None, Some(a)) if a.passed => "audit pass".into(),
                    _ => "audit FAIL".into(),
                };
                console.info(&format!("{} = {v}: {status}", axis.as_str()));
                code = code.max(o.exit_code);
            }
            Err(e) => {
                eprintln!("error: {} = {v}: {e}", axis.as_str());
                code = EXIT_RUNTIME;
            }
        }
    }
    // Runtime errors outrank audit failures.
    if outcomes.iter().any(|o| o.as_ref().map_or(true, |o| o.exit_code == EXIT_RUNTIME)) {
        code = EXIT_RUNTIME;
    }

    if axis == SweepAxis::Cells && values.len() >= 2 {
        if let Some(t) = refinement_table(config, &configs, &outcomes) {
            let path = config.output.dir.join("refinement.csv");
            write_file(&path, |w| {
                stamp_line(w)?;
                t.write_csv(w)
            })?;
            console.info(&format!("refinement table in {}", path.display()));
        }
    }
    println!(
        "sweep {}: {} values, table in {}",
        axis.as_str(),
        values.len(),
        table.display()
    );
    Ok(code)
}

/// Richardson table over a cells sweep; `None` unless every run finished.
fn refinement_table(
    base: &ExperimentConfig,
    configs: &[ExperimentConfig],
    outcomes: &[Result<RunOutcome, CliError>],
) -> Option<RefinementTable> {
    let grids: Vec<GridResult> = configs
        .iter()
        .zip(outcomes)
        .map(|(c, o)| {
            let o = o.as_ref().ok().filter(|o| o.failure.is_none())?;
            Some(GridResult {
                cells: c.grid.cells.clone(),
                values: o.checkpoint_l1.clone(),
            })
        })
        .collect::<Option<_>>()?;
    let n = grids.len();
    let ratio = grids[n - 1].cells[0] as f64 / grids[n - 2].cells[0] as f64;
    let times = if base.scheme.checkpoints.is_empty() {
        vec![base.scheme.t_end]
    } else {
        base.scheme.checkpoints.clone()
    };
    let checkpoints = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let series: Vec<f64> = grids.iter().map(|g| g.values[k]).collect();
            let (extrapolated, order, order_assumed) = richardson(&series, ratio);
            Checkpoint {
                t,
                order,
                order_assumed,
                extrapolated,
            }
        })
        .collect();
    Some(RefinementTable { grids, checkpoints })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_ladders() {
        assert_eq!(ladder_to(1e-3), vec![1e-1, 1e-2, 1e-3]);
        assert_eq!(ladder_to(5e-3), vec![1e-1, 1e-2, 5e-3]);
        assert_eq!(ladder_to(0.5), vec![0.5]);
    }

    #[test]
    fn axis_names() {
        for name in SweepAxis::NAMES {
            assert_eq!(SweepAxis::parse(name).unwrap().as_str(), name);
        }
        assert_eq!(SweepAxis::parse("t_end"), None);
    }
}

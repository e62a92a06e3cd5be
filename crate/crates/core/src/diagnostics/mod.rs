//! Energy, L¹ distances and dissipation of cell fields, plus audits and decay
//! summaries over whole trajectories.

mod audit;
mod decay;
mod refinement;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelSpec, PrimitiveKind, PrimitiveMap};
use crate::solver::{CellField, PeriodicGrid, SolverError};
use crate::sum::{pairwise_sum, pairwise_sum_by};

pub use audit::{audit, AuditReport, AuditTolerances, DecayStatus};
pub use decay::{decay_summary, DecaySummary, ThresholdTime, DEFAULT_THRESHOLDS};
pub(crate) use refinement::richardson;
pub use refinement::{refinement_study, Checkpoint, GridResult, RefinementTable};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trajectory has {0} rows, at least 2 are needed")]
    TooShort(usize),
    #[error("refinement study needs at least 2 grids, got {0}")]
    TooFewGrids(usize),
    #[error("checkpoint t = {0} was not recorded")]
    MissingCheckpoint(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One line of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mean: f64,
    pub l1_to_mean: f64,
    pub l2_energy: f64,
    pub linf: f64,
    /// Time-integrated parabolic dissipation since the previous row.
    pub dissipation_resolved: f64,
    /// ½(I(t_prev) − I(t)).
    pub dissipation_budget: f64,
}

pub const CSV_HEADER: &str = "t,mean,l1_to_mean,l2_energy,linf,dissipation_resolved,dissipation_budget";

impl DiagnosticsRow {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.mean,
            self.l1_to_mean,
            self.l2_energy,
            self.linf,
            self.dissipation_resolved,
            self.dissipation_budget
        )
    }
}

/// Σ u_j / Π N_i, clamped to [min u, max u] so constant fields are exact.
pub fn mean(field: &CellField) -> f64 {
    if field.values.is_empty() {
        return 0.0;
    }
    let m = pairwise_sum(&field.values) / field.values.len() as f64;
    m.clamp(field.min(), field.max())
}

/// Σ |u_j − v| · Π h_i
pub fn l1_to_constant(field: &CellField, grid: &PeriodicGrid, v: f64) -> f64 {
    pairwise_sum_by(&field.values, |u| (u - v).abs()) * grid.cell_volume()
}

/// I = Σ u_j² · Π h_i
pub fn l2_energy(field: &CellField, grid: &PeriodicGrid) -> f64 {
    pairwise_sum_by(&field.values, |u| u * u) * grid.cell_volume()
}

pub fn linf(field: &CellField) -> f64 {
    field.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Σ_cells Σ_k (Σ_i D_i β_ik(u))² · Π h_i, with D_i the centred difference
/// along axis i.
pub fn parabolic_dissipation(
    model: &ModelSpec,
    field: &CellField,
    grid: &PeriodicGrid,
) -> Result<f64, SolverError> {
    field.check(grid)?;
    let beta = PrimitiveMap::new(model, PrimitiveKind::Beta, field.min(), field.max())?;
    let mut scratch = Vec::new();
    Ok(crate::solver::parabolic_dissipation_with(
        &beta,
        grid,
        &field.values,
        &mut scratch,
    ))
}

/// Row at `t` without dissipation columns.
pub(crate) fn measure_row(field: &CellField, grid: &PeriodicGrid) -> DiagnosticsRow {
    let m = mean(field);
    DiagnosticsRow {
        t: field.time,
        mean: m,
        l1_to_mean: l1_to_constant(field, grid, m),
        l2_energy: l2_energy(field, grid),
        linf: linf(field),
        dissipation_resolved: 0.0,
        dissipation_budget: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, Polynomial, PolynomialModel};
    use crate::solver::init_field;
    use std::f64::consts::PI;

    #[test]
    fn mean_examples() {
        let g = PeriodicGrid::unit_1d(4).unwrap();
        assert_eq!(mean(&CellField::new(vec![1.0, 2.0, 3.0, 4.0], 0.0)), 2.5);
        assert_eq!(mean(&CellField::constant(&g, 0.7)), 0.7);
        let g64 = PeriodicGrid::unit_1d(64).unwrap();
        assert_eq!(mean(&CellField::constant(&g64, 0.4)), 0.4);
        let g = PeriodicGrid::unit_1d(128).unwrap();
        let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        assert!(mean(&f).abs() <= 1e-15);
    }

    #[test]
    fn l1_examples() {
        // A 2-cell grid is below the stencil minimum; scale the 4-cell case instead.
        let g = PeriodicGrid::unit_1d(4).unwrap();
        let f = CellField::new(vec![1.0, 1.0, -1.0, -1.0], 0.0);
        assert_eq!(l1_to_constant(&f, &g, 0.0), 1.0);
        assert_eq!(l1_to_constant(&CellField::constant(&g, 0.3), &g, 0.3), 0.0);
        let g = PeriodicGrid::unit_1d(4096).unwrap();
        let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        assert!((l1_to_constant(&f, &g, 0.0) - 2.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn energy_examples() {
        let g = PeriodicGrid::new(&[2.0], &[8]).unwrap();
        assert_eq!(l2_energy(&CellField::constant(&g, 0.0), &g), 0.0);
        assert_eq!(l2_energy(&CellField::constant(&g, 3.0), &g), 18.0);
        let g = PeriodicGrid::unit_1d(4096).unwrap();
        let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        assert!((l2_energy(&f, &g) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn dissipation_examples() {
        let heat = PolynomialModel {
            dimension: 1,
            flux: vec![Polynomial::zero()],
            diffusion_upper: vec![Polynomial::new(vec![1.0])],
        }
        .build("heat", 1.0)
        .unwrap();
        let g = PeriodicGrid::unit_1d(1024).unwrap();
        let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let p = parabolic_dissipation(&heat, &f, &g).unwrap();
        assert!((p - 2.0 * PI * PI).abs() < 0.02 * 2.0 * PI * PI);
        assert_eq!(parabolic_dissipation(&presets::burgers(), &f, &g).unwrap(), 0.0);
        let c = CellField::constant(&g, 0.5);
        assert_eq!(parabolic_dissipation(&heat, &c, &g).unwrap(), 0.0);
    }

    #[test]
    fn csv_row_format() {
        let row = DiagnosticsRow {
            t: 0.5,
            mean: 0.0,
            l1_to_mean: 1.0,
            l2_energy: 2.0,
            linf: 1.0,
            dissipation_resolved: 0.0,
            dissipation_budget: 0.25,
        };
        let mut buf = Vec::new();
        row.write_csv(&mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.trim_end().split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.starts_with("5.0000000000000000e-1,"));
    }
}

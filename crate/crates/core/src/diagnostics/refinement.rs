use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::DiagnosticsError;
use crate::model::ModelSpec;
use crate::solver::{init_field, run, PeriodicGrid, SchemeConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub cells: Vec<usize>,
    /// l1_to_mean at each checkpoint.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: f64,
    /// Observed order p used in the extrapolation.
    pub order: f64,
    /// True when p could not be estimated and p = 1 was assumed.
    pub order_assumed: bool,
    /// Richardson-extrapolated h → 0 value.
    pub extrapolated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementTable {
    pub grids: Vec<GridResult>,
    pub checkpoints: Vec<Checkpoint>,
}

impl RefinementTable {
    /// `t,extrapolated,order,<one column per grid>`
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t,extrapolated,order")?;
        for g in &self.grids {
            let cells: Vec<String> = g.cells.iter().map(usize::to_string).collect();
            write!(w, ",n{}", cells.join("x"))?;
        }
        writeln!(w)?;
        for (k, c) in self.checkpoints.iter().enumerate() {
            write!(w, "{:.16e},{:.16e},{:.16e}", c.t, c.extrapolated, c.order)?;
            for g in &self.grids {
                write!(w, ",{:.16e}", g.values[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Extrapolates `values` (coarse to fine, refined by `ratio` between the last
/// grids). Returns (value, order, order_assumed).
pub(crate) fn richardson(values: &[f64], ratio: f64) -> (f64, f64, bool) {
    let n = values.len();
    let (q2, q3) = (values[n - 2], values[n - 1]);
    let mut order = 1.0;
    let mut assumed = true;
    if n >= 3 {
        let q1 = values[n - 3];
        let p = ((q1 - q2) / (q2 - q3)).ln() / ratio.ln();
        if p.is_finite() && p > 0.0 {
            order = p;
            assumed = false;
        }
    }
    (q3 + (q3 - q2) / (ratio.powf(order) - 1.0), order, assumed)
}

/// Runs `profile` on every grid of the ladder (coarse to fine) and records
/// l1_to_mean at the checkpoint times (`scheme.checkpoints`, or t_end when
/// none are given).
pub fn refinement_study(
    model: &ModelSpec,
    profile: &(dyn Fn(&[f64]) -> f64 + Sync),
    scheme: &SchemeConfig,
    grids: &[PeriodicGrid],
) -> Result<RefinementTable, DiagnosticsError> {
    if grids.len() < 2 {
        return Err(DiagnosticsError::TooFewGrids(grids.len()));
    }
    let checkpoints = if scheme.checkpoints.is_empty() {
        vec![scheme.t_end]
    } else {
        scheme.checkpoints.clone()
    };
    let scheme = scheme.clone().with_checkpoints(&checkpoints);

    let results = grids
        .par_iter()
        .map(|grid| -> Result<GridResult, DiagnosticsError> {
            let u0 = init_field(grid, profile)?;
            let tr = run(model, grid, &u0, &scheme)?;
            let values = checkpoints
                .iter()
                .map(|&t| {
                    tr.row_at(t)
                        .map(|r| r.l1_to_mean)
                        .ok_or(DiagnosticsError::MissingCheckpoint(t))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GridResult {
                cells: grid.cells().to_vec(),
                values,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let n = grids.len();
    let ratio = grids[n - 1].cells()[0] as f64 / grids[n - 2].cells()[0] as f64;
    let checkpoints = checkpoints
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let series: Vec<f64> = results.iter().map(|g| g.values[k]).collect();
            let (extrapolated, order, order_assumed) = richardson(&series, ratio);
            Checkpoint {
                t,
                order,
                order_assumed,
                extrapolated,
            }
        })
        .collect();

    Ok(RefinementTable {
        grids: results,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Polynomial, PolynomialModel};
    use std::f64::consts::PI;

    #[test]
    fn richardson_recovers_first_order_limit() {
        // q(h) = 1 + 3h
        let q: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|h| 1.0 + 3.0 * h).collect();
        let (v, p, assumed) = richardson(&q, 2.0);
        assert!((v - 1.0).abs() < 1e-12 && (p - 1.0).abs() < 1e-9 && !assumed);
        let (v, p, assumed) = richardson(&q[1..], 2.0);
        assert!((v - 1.0).abs() < 1e-12 && p == 1.0 && assumed);
    }

    #[test]
    fn heat_checkpoints_are_grid_independent() {
        let heat = PolynomialModel {
            dimension: 1,
            flux: vec![Polynomial::zero()],
            diffusion_upper: vec![Polynomial::new(vec![1.0])],
        }
        .build("heat", 1.0)
        .unwrap();
        let grids = [64, 128].map(|n| PeriodicGrid::unit_1d(n).unwrap());
        let scheme = SchemeConfig::new(0.05, 0.05).with_checkpoints(&[0.025, 0.05]);
        let table =
            refinement_study(&heat, &|x| (2.0 * PI * x[0]).sin(), &scheme, &grids).unwrap();
        let exact = (-4.0 * PI * PI * 0.05f64).exp() * 2.0 / PI;
        assert_eq!(table.checkpoints.len(), 2);
        for g in &table.grids {
            assert!((g.values[1] - exact).abs() < 1e-3, "{:?}", g.values);
        }
        assert!(refinement_study(&heat, &|_| 0.0, &scheme, &grids[..1]).is_err());
    }
}

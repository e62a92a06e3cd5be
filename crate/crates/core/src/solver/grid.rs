use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::model::MAX_DIM;
use crate::quadrature::{GAUSS3_NODES, GAUSS3_WEIGHTS};

/// Smallest number of cells per direction (stencil width).
pub const MIN_CELLS: usize = 4;

/// Uniform cell-centred grid on the torus Π[0, P_i).
///
/// Cells are stored row-major: in 2-D the flat index of cell (i, j) is
/// `i·N₂ + j`, so the second axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    dimension: usize,
    periods: [f64; MAX_DIM],
    cells: [usize; MAX_DIM],
}

impl PeriodicGrid {
    pub fn new(periods: &[f64], cells: &[usize]) -> Result<Self, SolverError> {
        let d = periods.len();
        if !(1..=MAX_DIM).contains(&d) || cells.len() != d {
            return Err(SolverError::InvalidGrid(format!(
                "need 1 or 2 periods and matching cell counts, got {} and {}",
                periods.len(),
                cells.len()
            )));
        }
        let mut p = [1.0; MAX_DIM];
        let mut n = [1; MAX_DIM];
        for axis in 0..d {
            if !(periods[axis] > 0.0 && periods[axis].is_finite()) {
                return Err(SolverError::InvalidGrid(format!(
                    "period {} must be positive and finite",
                    periods[axis]
                )));
            }
            if cells[axis] < MIN_CELLS {
                return Err(SolverError::InvalidGrid(format!(
                    "at least {MIN_CELLS} cells per direction required, got {}",
                    cells[axis]
                )));
            }
            p[axis] = periods[axis];
            n[axis] = cells[axis];
        }
        Ok(Self {
            dimension: d,
            periods: p,
            cells: n,
        })
    }

    /// `n` cells on the unit interval.
    pub fn unit_1d(n: usize) -> Result<Self, SolverError> {
        Self::new(&[1.0], &[n])
    }

    /// `n × n` cells on the unit square.
    pub fn unit_2d(n: usize) -> Result<Self, SolverError> {
        Self::new(&[1.0, 1.0], &[n, n])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods[..self.dimension]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dimension]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.cells[axis] as f64
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells[..self.dimension].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Π h_i
    pub fn cell_volume(&self) -> f64 {
        (0..self.dimension).map(|a| self.spacing(a)).product()
    }

    /// |T_P| = Π P_i
    pub fn measure(&self) -> f64 {
        self.periods().iter().product()
    }

    /// Per-axis cell indices of a flat index.
    pub fn unflatten(&self, idx: usize) -> [usize; MAX_DIM] {
        if self.dimension == 1 {
            [idx, 0]
        } else {
            [idx / self.cells[1], idx % self.cells[1]]
        }
    }

    /// Centre of the cell with flat index `idx`.
    pub fn center(&self, idx: usize) -> [f64; MAX_DIM] {
        let ij = self.unflatten(idx);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dimension {
            x[axis] = (ij[axis] as f64 + 0.5) * self.spacing(axis);
        }
        x
    }
}

/// Cell averages at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellField {
    pub values: Vec<f64>,
    pub time: f64,
}

impl CellField {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        Self { values, time }
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self::new(vec![c; grid.len()], 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check(&self, grid: &PeriodicGrid) -> Result<(), SolverError> {
        if self.values.len() != grid.len() {
            return Err(SolverError::InvalidField(format!(
                "field has {} values, grid has {} cells",
                self.values.len(),
                grid.len()
            )));
        }
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::InvalidField(format!(
                "non-finite value {} in cell {k}",
                self.values[k]
            )));
        }
        Ok(())
    }
}

/// Cell averages of `profile`, by the 3-point Gauss rule in each direction.
pub fn init_field(
    grid: &PeriodicGrid,
    profile: impl Fn(&[f64]) -> f64,
) -> Result<CellField, SolverError> {
    let d = grid.dimension();
    let h = [grid.spacing(0), if d > 1 { grid.spacing(1) } else { 0.0 }];
    let mut values = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let c = grid.center(idx);
        let mut acc = 0.0;
        if d == 1 {
            for (node, w) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                let x = c[0] + 0.5 * h[0] * node;
                let v = profile(&[x]);
                if !v.is_finite() {
                    return Err(SolverError::NonFiniteProfile { x: vec![x], value: v });
                }
                acc += w * v;
            }
            values.push(0.5 * acc);
        } else {
            for (nx, wx) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                for (ny, wy) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
                    let x = [c[0] + 0.5 * h[0] * nx, c[1] + 0.5 * h[1] * ny];
                    let v = profile(&x);
                    if !v.is_finite() {
                        return Err(SolverError::NonFiniteProfile { x: x.to_vec(), value: v });
                    }
                    acc += wx * wy * v;
                }
            }
            values.push(0.25 * acc);
        }
    }
    Ok(CellField::new(values, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::unit_1d(3).is_err());
        assert!(PeriodicGrid::new(&[0.0], &[8]).is_err());
        assert!(PeriodicGrid::new(&[1.0, 1.0], &[8]).is_err());
        assert!(PeriodicGrid::new(&[1.0; 3], &[8; 3]).is_err());
        let g = PeriodicGrid::new(&[2.0, 1.0], &[8, 4]).unwrap();
        assert_eq!(g.len(), 32);
        assert_eq!(g.cell_volume(), 0.25 * 0.25);
        assert_eq!(g.measure(), 2.0);
        assert_eq!(g.unflatten(9), [2, 1]);
        assert_eq!(g.center(9), [0.625, 0.375]);
    }

    #[test]
    fn init_examples() {
        let g = PeriodicGrid::unit_1d(64).unwrap();
        let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let mean: f64 = f.values.iter().sum::<f64>() / 64.0;
        assert!(mean.abs() <= 1e-15);
        let c = init_field(&g, |_| 0.3).unwrap();
        assert!(c.values.iter().all(|&v| (v - 0.3).abs() < 1e-16));
        assert!(init_field(&g, |x| if x[0] > 0.5 { f64::NAN } else { 0.0 }).is_err());
    }

    #[test]
    fn cell_average_error_is_second_order() {
        // Exact average of sin(2πx) over a cell of width h centred at c is
        // sin(2πc)·sin(πh)/(πh); compare against the point value.
        let err = |n: usize| {
            let g = PeriodicGrid::unit_1d(n).unwrap();
            let f = init_field(&g, |x| (2.0 * PI * x[0]).sin()).unwrap();
            let h = 1.0 / n as f64;
            let exact_factor = (PI * h).sin() / (PI * h);
            f.values
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let point = (2.0 * PI * g.center(k)[0]).sin();
                    assert!((v - point * exact_factor).abs() < 1e-9);
                    (v - point).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn two_dimensional_average() {
        let g = PeriodicGrid::unit_2d(8).unwrap();
        let f = init_field(&g, |x| x[0] + 2.0 * x[1]).unwrap();
        for (k, v) in f.values.iter().enumerate() {
            let c = g.center(k);
            assert!((v - (c[0] + 2.0 * c[1])).abs() < 1e-14);
        }
    }
}

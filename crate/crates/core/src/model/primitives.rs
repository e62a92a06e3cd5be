//! Fast evaluation of the `β` and `B` primitives inside solver loops.
//!
//! Models with closed forms are used directly. Otherwise the primitive is
//! tabulated once on the value range the solver will visit: node values come
//! from cumulative quadrature and node slopes from the integrand itself, and
//! the table is read back with cubic Hermite interpolation. Arguments outside
//! the tabulated range fall back to direct quadrature.

use super::{MatrixFn, ModelError, ModelSpec, RawMatrix, MAX_DIM};
use crate::quadrature::QuadratureSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    /// `β = ∫ σ`
    Beta,
    /// `B = ∫ A`
    Diffusion,
}

const TABLE_NODES: usize = 2049;

#[derive(Clone)]
enum Inner {
    Analytic(MatrixFn),
    Table(Box<Table>),
}

#[derive(Clone)]
struct Table {
    lo: f64,
    step: f64,
    values: Vec<RawMatrix>,
    slopes: Vec<RawMatrix>,
    active: Vec<(usize, usize)>,
    model: ModelSpec,
    kind: PrimitiveKind,
}

#[derive(Clone)]
pub struct PrimitiveMap {
    dim: usize,
    inner: Inner,
}

impl PrimitiveMap {
    /// Builds the evaluator; `lo..=hi` is the range that must be fast.
    pub fn new(model: &ModelSpec, kind: PrimitiveKind, lo: f64, hi: f64) -> Result<Self, ModelError> {
        let dim = model.dimension();
        if let Some(f) = model.analytic_primitive_fn(kind) {
            return Ok(Self {
                dim,
                inner: Inner::Analytic(f),
            });
        }
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 1e-3 * lo.abs().max(1.0), hi + 1e-3 * hi.abs().max(1.0))
        };
        let step = (hi - lo) / (TABLE_NODES - 1) as f64;
        let nodes: Vec<f64> = (0..TABLE_NODES).map(|k| lo + step * k as f64).collect();

        let integrand = |u: f64| -> Result<RawMatrix, ModelError> {
            match kind {
                PrimitiveKind::Beta => model.sqrt_factor_eval(u).map(|m| m.raw()),
                PrimitiveKind::Diffusion => model.diffusion_eval(u).map(|m| m.raw()),
            }
        };
        let slopes = nodes
            .iter()
            .map(|&u| integrand(u))
            .collect::<Result<Vec<_>, _>>()?;

        // Entries that are identically zero on the nodes and the midpoints are skipped.
        let mut active = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let mut nonzero = slopes.iter().any(|s| s[i][j] != 0.0);
                if !nonzero {
                    for w in nodes.windows(2) {
                        if integrand(0.5 * (w[0] + w[1]))?[i][j] != 0.0 {
                            nonzero = true;
                            break;
                        }
                    }
                }
                if nonzero {
                    active.push((i, j));
                }
            }
        }

        let settings = QuadratureSettings::MODEL;
        let mut values = vec![[[0.0; MAX_DIM]; MAX_DIM]; TABLE_NODES];
        for &(i, j) in &active {
            let mut acc = model.primitive_increment(kind, 0.0, nodes[0], i, j, &settings)?;
            values[0][i][j] = acc;
            for k in 1..TABLE_NODES {
                acc += model.primitive_increment(kind, nodes[k - 1], nodes[k], i, j, &settings)?;
                values[k][i][j] = acc;
            }
        }

        Ok(Self {
            dim,
            inner: Inner::Table(Box::new(Table {
                lo,
                step,
                values,
                slopes,
                active,
                model: model.clone(),
                kind,
            })),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.inner, Inner::Analytic(_))
    }

    #[inline]
    pub fn eval(&self, u: f64) -> RawMatrix {
        match &self.inner {
            Inner::Analytic(f) => f(u),
            Inner::Table(t) => t.eval(u),
        }
    }
}

impl Table {
    fn eval(&self, u: f64) -> RawMatrix {
        let pos = (u - self.lo) / self.step;
        let last = (self.values.len() - 1) as f64;
        if !(0.0..=last).contains(&pos) {
            return self.direct(u);
        }
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let s = pos - k as f64;
        let h = self.step;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        for &(i, j) in &self.active {
            out[i][j] = h00 * self.values[k][i][j]
                + h10 * h * self.slopes[k][i][j]
                + h01 * self.values[k + 1][i][j]
                + h11 * h * self.slopes[k + 1][i][j];
        }
        out
    }

    fn direct(&self, u: f64) -> RawMatrix {
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        for &(i, j) in &self.active {
            out[i][j] = self
                .model
                .primitive_increment(self.kind, 0.0, u, i, j, &QuadratureSettings::MODEL)
                .unwrap_or(f64::NAN);
        }
        out
    }
}

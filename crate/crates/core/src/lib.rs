//! Numerical laboratory for periodic anisotropic degenerate
//! parabolic-hyperbolic equations
//!
//! ```text
//! ∂ₜu + ∇·f(u) = ∇·(A(u)∇u),   x ∈ T_P (periodic box), t ≥ 0.
//! ```
//!
//! * [`model`]: flux, diffusion, square-root factor and primitives, with validation.
//! * [`kinetic`]: the kinetic function χ, entropy reconstruction, and the
//!   nonlinearity-diffusivity condition ω_δ(λ) → 0.
//! * [`solver`]: monotone finite-volume scheme on the periodic grid.
//! * [`diagnostics`]: energy, L¹ distances, dissipation budget, audits, decay summaries.
//! * [`cli`]: configuration format, profiles and the `aniso` subcommands.

// Comparisons are written `!(x <= y)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod diagnostics;
pub mod kinetic;
pub mod model;
pub mod quadrature;
pub mod solver;
mod sum;

pub use model::{ModelError, ModelSpec};

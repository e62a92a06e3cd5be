//! Monotone finite-volume scheme on the periodic grid: local Lax–Friedrichs
//! fluxes, diffusion through second differences of B(u), explicit Euler or
//! SSP-RK2 time stepping under a CFL bound.

mod grid;
mod output;
mod run;
mod scheme;

use thiserror::Error;

use crate::model::ModelError;

pub use grid::{init_field, CellField, PeriodicGrid, MIN_CELLS};
pub use output::{write_diagnostics_csv, write_snapshot_csv};
pub(crate) use scheme::parabolic_dissipation_with;
pub use run::{run, run_ensemble, run_observed, step, EnsembleRun, PairDistance, StepAudit, Trajectory};
pub use scheme::{
    diffusion_div, hyperbolic_div, numerical_flux_llf, stable_dt, CoefficientBounds, Integrator,
    SchemeConfig,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("initial profile is not finite at x = {x:?} (value {value})")]
    NonFiniteProfile { x: Vec<f64>, value: f64 },
    #[error("stable time step is zero")]
    ZeroTimeStep,
    #[error("blow-up at t = {time:.6e}: non-finite values after the step (max |u| before it was {max_abs:.6e})")]
    BlowUp {
        time: f64,
        max_abs: f64,
        /// Everything recorded before the failure.
        partial: Box<Trajectory>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

//! Kinetic formulation: the χ function, entropies recovered from it, and the
//! nonlinearity-diffusivity condition.

mod condition;
mod representation;

use thiserror::Error;

use crate::model::ModelError;
use crate::quadrature::QuadratureError;

pub use condition::{
    check_condition, default_lambdas, degeneracy_set_measure, omega_at, omega_delta,
    symbol_denominator, ConditionReport, FrequencyPoint, LatticeSpec, SamplingPlan, Verdict,
    MONOTONE_SLACK, PASS_FRACTION,
};
pub use representation::{chi, entropy_flux_from_kinetic, entropy_from_kinetic};

#[derive(Debug, Error)]
pub enum KineticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{context} quadrature failed: {source}")]
    Quadrature {
        context: &'static str,
        #[source]
        source: QuadratureError,
    },
    #[error("the sampling plan produced no frequency points")]
    EmptyPlan,
    #[error("{0}")]
    InvalidInput(String),
}

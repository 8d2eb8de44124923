//! Finite-difference realisation of the approximation scheme for monotone
//! problems `-div A(x, u, ∇u) = f` with zero Dirichlet data, `f` an `L¹`
//! function or a finite measure.
//!
//! The pipeline is: smooth the datum ([`data`]), solve each approximate
//! problem ([`solve_approximate`]), and feed the solutions to the a priori,
//! convergence and regularity diagnostics ([`estimates`], [`regularity`]).

pub mod data;
pub mod estimates;
pub mod linalg;
pub mod mesh;
pub mod newton;
pub mod operator;
pub mod problem;
pub mod regularity;
mod solve;

use thiserror::Error;

use crate::embedding::EmbeddingError;
use crate::field::FieldError;
use crate::nfunction::NFunctionError;
use crate::norms::NormError;

pub use data::{approximate_l1_data, mollify_measure, truncation_data, ApproximateData, Atom};
pub use operator::{FluxForm, OperatorSpec, OperatorValidation};
pub use problem::{run_problem, Grid, ProblemSpec, SolveReport};
pub use solve::{
    discrete_residual, element_gradient_field, solve_approximate, weak_form_defect, Solution, SolveOptions, EPS_SCALE,
    RESIDUAL_TOL,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    NFunction(#[from] NFunctionError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("atom at {location:?} is within 1/k = {radius} of the boundary")]
    AtomTooCloseToBoundary { location: Vec<f64>, radius: f64 },
    #[error("no convergence after {iterations} iterations: residual {residual:e} above tolerance {tolerance:e}")]
    NonConvergence { iterations: usize, residual: f64, tolerance: f64, best: Box<Solution> },
    #[error("operator is not declared strongly monotone")]
    NotStronglyMonotone,
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("level {level}: {source}")]
    Level {
        level: f64,
        #[source]
        source: Box<SolverError>,
    },
}

pub type Result<T> = std::result::Result<T, SolverError>;

impl SolverError {
    pub(crate) fn at_level(self, level: f64) -> Self {
        SolverError::Level { level, source: Box::new(self) }
    }
}

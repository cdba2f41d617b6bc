//! Numerical kernels over an explicit [`Ctmc`](crate::Ctmc).

mod expm;
mod fox_glynn;
mod reach;
mod scc;
mod solver;
mod sparse;
mod steady;
mod transient;

use thiserror::Error;

pub use expm::{expm_dense, DENSE_LIMIT};
pub use fox_glynn::{fox_glynn, FoxGlynnWeights};
pub use reach::{prob01, reachability_reward, unbounded_until, Quantity};
pub use scc::{bscc_decompose, strongly_connected_components, BsccDecomposition};
pub use solver::{Method, SolveInfo, SolverConfig};
pub use sparse::SparseMatrix;
pub use steady::{
    bscc_reach_probabilities, bscc_stationary, steady_residual, steady_state_distribution, steady_state_values,
};
pub use transient::{
    cumulative_reward, cumulative_reward_backward, transient_backward, transient_distribution, UnifConfig, UnifInfo,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("accuracy {0:e} is too small to represent")]
    EpsilonTooSmall(f64),
    #[error("{what} did not converge after {iterations} iterations (last relative change {residual:e})")]
    NotConverged {
        what: String,
        iterations: usize,
        residual: f64,
    },
    #[error("negative probability {value:e} at state {state}")]
    NegativeProbability { state: usize, value: f64 },
    #[error("matrix of size {0} exceeds the dense limit of {DENSE_LIMIT}")]
    TooLarge(usize),
}

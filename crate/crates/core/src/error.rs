use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sphere degree {0} outside supported range 2..=128")]
    DegreeOutOfRange(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fields live on different grids (degree {left} vs {right})")]
    GridMismatch { left: usize, right: usize },

    #[error("resolvent for mode {mode} is numerically singular (pivot ratio {pivot_ratio:.3e})")]
    SingularOperator { mode: usize, pivot_ratio: f64 },

    #[error("time step rejected at t = {time}: {reason}")]
    StepRejected { time: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("Picard iteration diverged after {iterations} iterations (update {update:.3e})")]
    PicardDiverged { iterations: usize, update: f64 },

    #[error("continuation failed to converge at epsilon = {epsilon}")]
    NoConvergence {
        epsilon: f64,
        /// Last converged branch point and its report.
        last: Box<(crate::modal::ModalField, crate::stationary::SolveReport)>,
    },

    #[error("linear solver did not converge: {0}")]
    LinearSolver(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed container {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use std::path::PathBuf;

use thiserror::Error;

use crate::lie::Frame;
use crate::scenario::config::ConfigIssue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not a proper rotation (|RRᵀ-I| = {orthogonality:e}, det = {determinant})")]
    InvalidRotation { orthogonality: f64, determinant: f64 },

    #[error("rotation axis must be unit length, got norm {0}")]
    NonUnitAxis(f64),

    #[error("frame mismatch: {left} vs {right}")]
    FrameMismatch { left: Frame, right: Frame },

    #[error("energy scale {0} outside [0, 1]")]
    ScaleOutOfRange(f64),

    #[error("invalid stiffness: {0}")]
    InvalidStiffness(String),

    #[error("invalid chain model: {0}")]
    InvalidModel(String),

    #[error("mass matrix is not positive definite at q = {0:?}")]
    SingularMassMatrix(Vec<f64>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("simulation diverged at t = {time:.4} s: {reason}")]
    Divergence { time: f64, reason: String },

    #[error("invariant violated at t = {time:.4} s: {what}")]
    InvariantViolation { time: f64, what: String },

    #[error("invalid configuration ({} issue(s)):\n{}", .0.len(), format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("unknown column `{name}`; available: {}", available.join(", "))]
    UnknownColumn { name: String, available: Vec<String> },

    #[error("malformed log {path}: {reason}")]
    MalformedLog { path: PathBuf, reason: String },

    #[error("{0}")]
    Scenario(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n")
}

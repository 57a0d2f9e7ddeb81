use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible SNR {gamma}: the recursion needs γ ≥ γ̄ = {threshold}")]
    Feasibility { gamma: f64, threshold: f64 },
    #[error("{method} did not converge within {iterations} iterations")]
    NoConvergence { method: String, iterations: usize },
    #[error("root not bracketed: {0}")]
    Bracket(String),
    #[error("insufficient data: {usable} usable error pairs, need {required}")]
    InsufficientData { usable: usize, required: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),
    #[error("joint convexity not certified: √m = {sqrt_m} exceeds bound {bound}")]
    ConvexityNotCertified { sqrt_m: f64, bound: f64 },
    #[error("unsupported problem structure: {0}")]
    Unsupported(String),
    #[error("invalid scenario field `{field}`: {message}")]
    Scenario { field: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

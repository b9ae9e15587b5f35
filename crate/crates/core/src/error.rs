use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no crossing: the smallest action-class mean power difference is {min_mu_delta}, detector cannot separate classes")]
    NoCrossing { min_mu_delta: f64 },

    #[error("infeasible sensing duty: t_s * F = {duty} must be < 1")]
    InfeasibleSensingDuty { duty: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("accuracy surface domain error: {0}")]
    Domain(String),

    #[error("insufficient data for fitting in cells: {}", .cells.join(", "))]
    Fitting { cells: Vec<String> },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

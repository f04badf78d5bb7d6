use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not unitary (max |U^dag U - I| = {max_deviation:e})")]
    NotUnitary { max_deviation: f64 },

    #[error("matrix is not Hermitian (max |A - A^dag| = {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("eigensolver failed to converge")]
    Eigensolver,

    #[error("invalid attack: {0}")]
    InvalidAttack(String),

    #[error("invalid statistics: {entry} = {value} ({reason})")]
    InvalidStatistics {
        entry: String,
        value: f64,
        reason: String,
    },

    #[error("missing statistic {0}")]
    MissingStatistic(String),

    #[error("statistics admit no consistent attack (constraint residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("no sign change of the key rate on [{lo}, {hi}] (r = {r_lo}, {r_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        r_lo: f64,
        r_hi: f64,
    },

    #[error("optimizer did not settle at Q = {q}: only {agreeing} of {restarts} restarts agree")]
    NonConvergence {
        q: f64,
        agreeing: usize,
        restarts: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

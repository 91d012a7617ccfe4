use thiserror::Error;

use crate::game::GameTrace;
use crate::rates::NetworkState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("received-signal covariance at BS {bs} is singular")]
    SingularReceivedCovariance { bs: usize },

    #[error("interference covariance of user {user} is singular")]
    SingularInterferenceCovariance { user: usize },

    #[error("multiplier is zero and the total price matrix is singular")]
    DegenerateRegularizer,

    #[error("all effective channel gains are zero")]
    NoPositiveGain,

    #[error("could not bracket the power multiplier after {doublings} doublings")]
    BracketFailure { doublings: usize },

    #[error("probe direction leaves the PSD cone at t = {t}")]
    InfeasibleDirection { t: f64 },

    #[error("invalid user placement: {0}")]
    InvalidPlacement(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed CNF input: {0}")]
    InvalidCnf(String),

    #[error("brute-force search space of {configs} configurations is too large")]
    TooLarge { configs: f64 },

    #[error("no convergence within {sweeps} sweeps")]
    MaxSweepsExceeded {
        sweeps: usize,
        state: Box<NetworkState>,
        trace: Box<GameTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

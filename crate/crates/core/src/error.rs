use thiserror::Error;

pub type Result<T, E = AoiError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AoiError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state j={state} has no remaining users (M={users})")]
    StateOutOfRange { state: usize, users: usize },

    #[error("the tagged user is never absorbed (P_fail = {p_fail}); the AoI diverges")]
    NoAbsorption { p_fail: f64 },

    #[error("average AoI diverges: {0}")]
    Divergent(String),

    #[error("transition probability P[{row},{col}] = {value} is negative beyond clamping tolerance")]
    NegativeTransition { row: usize, col: usize, value: f64 },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("oracle instance too large: {remaining} users with K={levels} (limits: 12 users, K<=6)")]
    OracleTooLarge { remaining: usize, levels: usize },

    #[error("need at least {needed} completed update cycles, trace has {available}")]
    InsufficientCycles { needed: usize, available: usize },
}

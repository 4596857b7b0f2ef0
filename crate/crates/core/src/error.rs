use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("utility is not compatible with the {norm} norm{}", agent_suffix(*agent))]
    Incompatible { agent: Option<usize>, norm: String },

    #[error("fairness level {level} exceeds the satiation norm {cap}{}", agent_suffix(*agent))]
    Satiated {
        agent: Option<usize>,
        level: f64,
        cap: f64,
    },

    #[error("allocation step is unbounded: no good constrains the active agents")]
    Unbounded,

    #[error("water-filling iteration {iteration} froze no agent")]
    NoProgress { iteration: usize },

    #[error("dual solver hit the iteration cap ({iterations}) with projected gradient norm {residual:e}")]
    Diverged { iterations: usize, residual: f64 },

    #[error("prices give agent {agent} a bundle cost of {cost}; budgets cannot be spent")]
    BadPrices { agent: usize, cost: f64 },

    #[error("agent {agent} has a utility the market solver does not support: {reason}")]
    UnsupportedUtility { agent: usize, reason: String },

    #[error("search too large: {0}")]
    TooLarge(String),

    #[error("shape mismatch: {0}")]
    Shape(String),
}

fn agent_suffix(agent: Option<usize>) -> String {
    match agent {
        Some(i) => format!(" (agent {i})"),
        None => String::new(),
    }
}

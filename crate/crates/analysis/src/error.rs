pub type Result<T> = std::result::Result<T, StatsError>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("{0}")]
    Domain(String),
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("pooled standard deviation is zero")]
    ZeroVariance,
    #[error("incomplete beta did not converge at a = {a}, b = {b}, x = {x}")]
    NoConvergence { a: f64, b: f64, x: f64 },
    #[error("could not read records: {0}")]
    Input(String),
}

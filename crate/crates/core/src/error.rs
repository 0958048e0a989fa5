use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exhaustive matching: min(N, K) = {0} > 8")]
    TooLargeForBruteForce(usize),

    #[error("auction did not terminate within {0} rounds")]
    AuctionNonTermination(usize),

    #[error("traffic slackness {eps} is infeasible (max achievable {max})")]
    InfeasibleSlackness { eps: f64, max: f64 },

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

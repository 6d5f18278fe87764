use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("table has zero total count")]
    ZeroTotal,

    #[error("invalid probability table: {0}")]
    InvalidProbability(String),

    /// Every discordance term vanishes; the measures are undefined.
    #[error("degenerate table: all discordance terms are zero")]
    DegenerateMass,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("measure is not differentiable at this table: {0}")]
    NonDifferentiable(String),

    #[error("{degenerate} of {total} bootstrap replicates were degenerate (limit 1%)")]
    TooManyDegenerateReplicates { degenerate: usize, total: usize },

    #[error("cannot combine reports: {0}")]
    MethodMismatch(String),

    #[error("invalid study specification: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// True for failures caused by the data sitting where the measure or its
    /// variance is undefined, as opposed to malformed input.
    pub fn is_statistical_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateMass
                | Error::NonDifferentiable(_)
                | Error::TooManyDegenerateReplicates { .. }
        )
    }
}

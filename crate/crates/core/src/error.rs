use thiserror::Error;

/// Everything that can go wrong inside the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("arcs overlap near position {at}")]
    OverlappingArcs { at: f64 },

    #[error("endpoints coincide near position {at}")]
    DuplicateEndpoints { at: f64 },

    #[error("ultrametric inequality fails for ({i}, {j}, {k}) by {excess}")]
    UltrametricViolation {
        i: usize,
        j: usize,
        k: usize,
        excess: f64,
    },

    #[error("masses are not a probability vector: {0}")]
    NotOnSimplex(String),

    #[error("minimizer stopped after {iterations} iterations with duality gap {gap}")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("state space of {n_sites} sites exceeds the exact limit of {max}")]
    StateSpaceTooLarge { n_sites: usize, max: usize },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("operation needs a two-type system")]
    WrongMode,

    #[error("the particle system is empty")]
    EmptySystem,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

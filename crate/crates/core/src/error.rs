use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exact hypervolume is only available for 2 objectives (got {0}); use hypervolume_mc instead")]
    NotTwoObjectives(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite loss on batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("non-finite gradient")]
    NonFiniteGradient,

    #[error("epoch {epoch} out of range for a schedule of {total} epochs")]
    EpochOutOfRange { epoch: usize, total: usize },

    #[error("gradient of task {task} has zero norm; cannot normalize")]
    ZeroNormGradient { task: usize },

    #[error("loss of task {task} is {loss}; loss-based normalization needs a positive loss")]
    NonPositiveLoss { task: usize, loss: f64 },

    #[error("split is empty")]
    EmptySplit,

    #[error("budget {budget} exceeds the grid size {grid}")]
    BudgetTooLarge { budget: usize, grid: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("under-resolved field: {0}")]
    UnderResolved(String),

    #[error("blow-up at t = {time}: max norm {norm:e} exceeds {threshold:e}")]
    BlowUp { time: f64, norm: f64, threshold: f64 },

    #[error("step limit of {0} exceeded")]
    MaxStepsExceeded(usize),

    #[error("domain-edge contamination {ratio:e} exceeds {threshold:e}")]
    Contaminated { ratio: f64, threshold: f64 },

    #[error("kernel classification failed: residual {residual:e} (nu estimate {nu_estimate})")]
    ClassificationFailed { nu_estimate: f64, residual: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("kernel table: {0}")]
    KernelTable(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures produced by a simulation going bad, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::NonFinite(_)
                | Error::MaxStepsExceeded(_)
                | Error::Contaminated { .. }
                | Error::UnderResolved(_)
                | Error::DegenerateFit(_)
                | Error::ClassificationFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PedError>;

#[derive(Debug, Error)]
pub enum PedError {
    #[error("input contains a non-finite value at {0}")]
    NonFinite(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("empty design: every predictor column has zero variance")]
    EmptyDesign,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("response column not found: {0}")]
    ResponseNotFound(String),

    #[error("ragged csv: line {line} has {found} fields, expected {expected}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric cell at line {line}, column '{column}': {value:?}")]
    NonNumericCell {
        line: u64,
        column: String,
        value: String,
    },

    #[error("residual norm {residual:.3e} is below the guard {guard:.1e} (interpolation regime)")]
    InterpolationRegime { residual: f64, guard: f64 },

    #[error("coefficient vector is zero: {0} is undefined")]
    ZeroCoefficients(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("simulation study failed: {failed} of {total} replicates failed")]
    StudyFailed { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PedError {
    /// Process exit code: 2 for input/usage problems, 3 for numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            PedError::InterpolationRegime { .. }
            | PedError::ZeroCoefficients(_)
            | PedError::Degenerate(_)
            | PedError::StudyFailed { .. } => 3,
            _ => 2,
        }
    }
}

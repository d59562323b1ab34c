use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {operand}: expected {expected}, got {actual}")]
    DimensionMismatch {
        operand: String,
        expected: usize,
        actual: usize,
    },

    #[error("DoS order {0} is not supported (expected 0, 1 or 2)")]
    UnsupportedOrder(usize),

    #[error("expected {expected} DoS vectors for order {order}, got {actual}")]
    DosCount {
        order: usize,
        expected: usize,
        actual: usize,
    },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("frame {index} has dimension {actual}, expected {expected}")]
    FrameDimension {
        index: usize,
        expected: usize,
        actual: usize,
    },

    #[error("class index {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },

    #[error("label arity mismatch: {0}")]
    LabelArity(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{0}")]
    InvalidConfig(String),

    #[error("need at least 2 distinct subjects to split, found {0}")]
    TooFewSubjects(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("trace does not match parameters: {0}")]
    TraceMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(operand: &str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            operand: operand.to_string(),
            expected,
            actual,
        })
    }
}

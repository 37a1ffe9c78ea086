use thiserror::Error;

/// Errors raised by the calibration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The end-effector sits on the cable anchor, so the cable direction is undefined.
    #[error("degenerate geometry{}: end-effector is {distance:e} mm from the anchor point", index_suffix(*.index))]
    DegenerateGeometry { index: Option<usize>, distance: f64 },

    /// The objective returned a non-finite value during a search.
    #[error("optimizer aborted: objective is {value} at {point:?}")]
    OptimizerAbort { point: Vec<f64>, value: f64 },

    #[error("numerical failure{}: {reason}", index_suffix(*.sample))]
    Numerical {
        sample: Option<usize>,
        reason: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {file}{}: {message}", line_suffix(*.line))]
    Parse {
        file: String,
        line: Option<u64>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn index_suffix(index: Option<usize>) -> String {
    index.map(|i| format!(" at sample {i}")).unwrap_or_default()
}

fn line_suffix(line: Option<u64>) -> String {
    line.map(|l| format!(" line {l}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wraps the error with a short description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Attaches a sample index to errors that carry one.
    pub(crate) fn at_sample(self, i: usize) -> Self {
        match self {
            Error::DegenerateGeometry { distance, .. } => Error::DegenerateGeometry {
                index: Some(i),
                distance,
            },
            Error::Numerical { reason, .. } => Error::Numerical {
                sample: Some(i),
                reason,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

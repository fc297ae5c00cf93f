use thiserror::Error;

/// Errors produced by the team solvers.
#[derive(Debug, Error)]
pub enum TeamError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// An input violates a structural invariant. `field` names the offending entry.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("prior is not a product measure: {0}")]
    NonProductPrior(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear program failed: {0}")]
    Numeric(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} above tolerance {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("{class}: {source}")]
    Tagged {
        class: String,
        #[source]
        source: Box<TeamError>,
    },
}

impl TeamError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        TeamError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn tagged(self, class: &str) -> Self {
        TeamError::Tagged {
            class: class.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the user's input rather than a solver.
    pub fn is_input_error(&self) -> bool {
        match self {
            TeamError::Io { .. }
            | TeamError::Parse(_)
            | TeamError::Validation { .. }
            | TeamError::ShapeMismatch(_)
            | TeamError::NonProductPrior(_) => true,
            TeamError::Tagged { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

pub type Result<T, E = TeamError> = std::result::Result<T, E>;

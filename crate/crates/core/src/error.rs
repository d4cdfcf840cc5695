use thiserror::Error;

/// Failure of a library operation. Every variant names the operation that failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GadgetError {
    /// Input violates a structural precondition (bad index, non-injective map, bad parameter).
    #[error("{op}: malformed input: {msg}")]
    Malformed { op: &'static str, msg: String },
    /// Input could not be parsed; `path` locates the offending field.
    #[error("{op}: parse error at {path}: {msg}")]
    Parse {
        op: &'static str,
        path: String,
        msg: String,
    },
    /// Instance exceeds a size ceiling or budget.
    #[error("{op}: resource limit: {msg}")]
    Resource { op: &'static str, msg: String },
    /// Solver failure: singular system, non-convergence, overflow.
    #[error("{op}: numeric failure: {msg}")]
    Numeric { op: &'static str, msg: String },
    /// Argument outside the representable range of an exact computation.
    #[error("{op}: out of range: {msg}")]
    Range { op: &'static str, msg: String },
    /// Input is valid but belongs to a different builder.
    #[error("{op}: wrong builder: {msg}")]
    WrongBuilder { op: &'static str, msg: String },
    /// Input is outside what this library handles at all.
    #[error("{op}: out of scope: {msg}")]
    OutOfScope { op: &'static str, msg: String },
}

impl GadgetError {
    pub fn malformed(op: &'static str, msg: impl Into<String>) -> Self {
        Self::Malformed {
            op,
            msg: msg.into(),
        }
    }

    pub fn parse(op: &'static str, path: impl Into<String>, msg: impl Into<String>) -> Self {
        Self::Parse {
            op,
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn resource(op: &'static str, msg: impl Into<String>) -> Self {
        Self::Resource {
            op,
            msg: msg.into(),
        }
    }

    pub fn numeric(op: &'static str, msg: impl Into<String>) -> Self {
        Self::Numeric {
            op,
            msg: msg.into(),
        }
    }

    pub fn range(op: &'static str, msg: impl Into<String>) -> Self {
        Self::Range {
            op,
            msg: msg.into(),
        }
    }

    pub fn wrong_builder(op: &'static str, msg: impl Into<String>) -> Self {
        Self::WrongBuilder {
            op,
            msg: msg.into(),
        }
    }

    pub fn out_of_scope(op: &'static str, msg: impl Into<String>) -> Self {
        Self::OutOfScope {
            op,
            msg: msg.into(),
        }
    }

    /// Operation name carried by the error.
    pub fn op(&self) -> &'static str {
        match self {
            Self::Malformed { op, .. }
            | Self::Parse { op, .. }
            | Self::Resource { op, .. }
            | Self::Numeric { op, .. }
            | Self::Range { op, .. }
            | Self::WrongBuilder { op, .. }
            | Self::OutOfScope { op, .. } => op,
        }
    }
}

pub type Result<T> = std::result::Result<T, GadgetError>;

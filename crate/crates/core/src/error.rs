use crate::index::Index;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. `kind()` gives the stable taxonomy
/// name used by the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("string {string:?} already bound in index {index}")]
    StringAlreadyPresent { index: Index, string: String },
    #[error("string {string:?} not bound in index {index}")]
    MissingString { index: Index, string: String },
    #[error("duplicate string {0:?} in index")]
    DuplicateIndexString(String),
    #[error("update would drop the empty index from a cell")]
    EmptyIndexLost,
    #[error("string {0:?} has no dense axis")]
    UnknownString(String),
    #[error("negative index component {value} for string {string:?}")]
    NegativeComponent { string: String, value: i64 },
    #[error("strings {0:?} and {1:?} are nested in both orders; no dense axis order exists")]
    UnsupportedAxisOrder(String, String),
    #[error("{op} undefined on ({args}){}", path_suffix(.path))]
    PrimitiveDomain { op: String, args: String, path: String },
    #[error("score is NaN at index {0}")]
    NaNScore(Index),
    #[error("type error: {0}")]
    Type(String),
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{construct} is not allowed in the {tier} tier")]
    TierViolation { construct: String, tier: String },
    #[error("flags are not comparable")]
    NotComparable,
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn path_suffix(path: &str) -> String {
    if path.is_empty() {
        String::new()
    } else {
        format!(" at {path}")
    }
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::StringAlreadyPresent { .. } => "StringAlreadyPresent",
            Error::MissingString { .. } => "MissingString",
            Error::DuplicateIndexString(_) => "DuplicateIndexString",
            Error::EmptyIndexLost => "EmptyIndexLost",
            Error::UnknownString(_) => "UnknownString",
            Error::NegativeComponent { .. } => "NegativeComponent",
            Error::UnsupportedAxisOrder(..) => "UnsupportedAxisOrder",
            Error::PrimitiveDomain { .. } => "PrimitiveDomainError",
            Error::NaNScore(_) => "NaNScore",
            Error::Type(_) => "TypeError",
            Error::Syntax { .. } => "SyntaxError",
            Error::TierViolation { .. } => "TierViolation",
            Error::NotComparable => "NotComparable",
            Error::Invalid(_) => "InvalidInput",
        }
    }

    /// True for errors raised while reading or validating program text.
    pub fn is_static(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::TierViolation { .. }
                | Error::DuplicateIndexString(_)
                | Error::Type(_)
                | Error::Invalid(_)
        )
    }

    /// Prepends a command-path segment to primitive errors as they unwind.
    pub fn within(mut self, segment: &str) -> Self {
        if let Error::PrimitiveDomain { path, .. } = &mut self {
            *path = if path.is_empty() {
                segment.to_string()
            } else {
                format!("{segment}/{path}")
            };
        }
        self
    }
}

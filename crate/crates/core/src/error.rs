use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while parsing, validating or evaluating program terms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("empty program text")]
    EmptyInput,
    #[error("unbalanced parentheses at byte {0}")]
    Unbalanced(usize),
    #[error("unexpected text after program at byte {0}")]
    TrailingInput(usize),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("nested list: a list-valued term is used as a list element")]
    NestedList,
    #[error("primitive `{0}` is applied like a function")]
    PrimitiveHead(String),
    #[error("`{name}` expects {expected} argument(s)")]
    ArityMismatch { name: String, expected: usize },
    #[error("free variable #{0}")]
    FreeVariable(usize),
    #[error("parameter #{0} is used both as a list head and as a list element")]
    ParamKind(usize),
    #[error("abstraction `{name}`: {reason}")]
    BadAbstraction { name: String, reason: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid symbol name `{0}`")]
    InvalidName(String),
    #[error("program expands to an empty stroke sequence")]
    EmptyExpansion,
    #[error("terminal cost must be positive")]
    ZeroTerminalCost,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("duplicate glyph id `{0}`")]
    DuplicateGlyph(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}

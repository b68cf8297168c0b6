use thiserror::Error;

/// Errors raised across the library.
///
/// Variants group into three families that the command-line front end maps
/// onto stable exit codes: input errors (1), mathematical-hypothesis errors
/// (2) and resource caps (3). See [`Error::exit_code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared letter '{symbol}' at line {line}")]
    UndeclaredLetter { symbol: String, line: usize },
    #[error("duplicate rule for letter '{letter}' at line {line}")]
    DuplicateRule { letter: String, line: usize },
    #[error("missing rule for letter '{letter}'")]
    MissingRule { letter: String },
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("rule for letter '{letter}' has no realisations")]
    EmptyRule { letter: String },
    #[error("rule for letter '{letter}' lists realisation '{word}' twice")]
    DuplicateRealisation { letter: String, word: String },
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("parameter '{0}' has no value")]
    MissingParameter(String),
    #[error("degenerate probabilities for letter '{letter}': {detail}")]
    DegenerateProbabilities { letter: String, detail: String },
    #[error("expression evaluated to a non-finite value: {0}")]
    NonFinite(String),
    #[error("unknown fixture '{0}'")]
    UnknownFixture(String),
    #[error("no {kind} named '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("value {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("substitution is not primitive")]
    NotPrimitive,
    #[error("substitution is not expanding (Perron-Frobenius eigenvalue {lambda})")]
    NonExpanding { lambda: f64 },
    #[error("power iteration did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("substitution matrix has non-integer entries")]
    NonIntegerMatrix,
    #[error("substitution is not compatible")]
    NotCompatible,
    #[error("inflation word lengths are not well-defined for letter '{letter}'")]
    LengthNotWellDefined { letter: String },
    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),

    #[error("size limit exceeded while computing {what}: {size} > cap {cap}")]
    SizeLimitExceeded {
        what: String,
        size: usize,
        cap: usize,
    },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Parse { .. }
            | UndeclaredLetter { .. }
            | DuplicateRule { .. }
            | MissingRule { .. }
            | InvalidAlphabet(_)
            | InvalidWord(_)
            | EmptyRule { .. }
            | DuplicateRealisation { .. }
            | UnknownParameter(_)
            | MissingParameter(_)
            | DegenerateProbabilities { .. }
            | NonFinite(_)
            | UnknownFixture(_)
            | UnknownStrategy { .. }
            | Domain { .. } => 1,
            NotPrimitive
            | NonExpanding { .. }
            | ConvergenceFailure { .. }
            | NonIntegerMatrix
            | NotCompatible
            | LengthNotWellDefined { .. }
            | HypothesesNotMet(_) => 2,
            SizeLimitExceeded { .. } => 3,
        }
    }

    pub(crate) fn size(what: impl Into<String>, size: usize, cap: usize) -> Self {
        Error::SizeLimitExceeded {
            what: what.into(),
            size,
            cap,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

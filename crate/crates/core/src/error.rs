use thiserror::Error;

/// Errors raised by estimation, EM, grammar and parsing routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("corpus is empty (total frequency is zero)")]
    EmptyCorpus,

    #[error("invalid frequency {value} for type {key}: must be finite and non-negative")]
    NonFinite { key: String, value: f64 },

    #[error("invalid probability {value} for type {key}")]
    InvalidProbability { key: String, value: f64 },

    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("type {0} is outside the model's type set")]
    OutOfRange(String),

    #[error("incomplete-data type {0} has no analyses")]
    UnanalyzableToken(String),

    #[error("incomplete-data type {0} has zero probability under the current instance")]
    ZeroMassIncomplete(String),

    #[error("analysis sets overlap: {0} is an analysis of more than one type")]
    OverlappingAnalyses(String),

    #[error("M-step decreased the likelihood at iteration {iteration}: {after} < {before} (log2)")]
    MstepRegression {
        iteration: usize,
        before: f64,
        after: f64,
    },

    #[error("invalid EM options: {0}")]
    InvalidOptions(String),

    #[error("not a full-parse tree: {0}")]
    NotAFullParse(String),

    #[error("treebank is empty")]
    EmptyTreebank,

    #[error("treebank trees have different root symbols: {0} and {1}")]
    MixedRoots(String, String),

    #[error("symbol {0} is used both as a terminal and as a nonterminal")]
    SymbolClash(String),

    #[error("grammar has a unary cycle through {0}")]
    CyclicGrammar(String),

    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),

    #[error("fragment of {lhs} sums to {sum}, not 1")]
    NotFragmentNormalized { lhs: String, sum: f64 },

    #[error("sentences without a parse: {}", .0.join(" | "))]
    UnparseableSentence(Vec<String>),

    #[error("normalizer underflowed to zero")]
    DegenerateNormalizer,

    #[error("problem too large for brute-force search: {0}")]
    ScaleExceeded(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}

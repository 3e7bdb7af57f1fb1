use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("label column `{0}` not found in header")]
    MissingLabel(String),

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid domain for `{attribute}`: {reason}")]
    InvalidDomain { attribute: String, reason: String },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("value `{value}` is not numeric (required by {kind})")]
    NotNumeric { value: String, kind: &'static str },

    #[error("generalization rules do not cover value `{0}`")]
    GeneralizeMiss(String),

    #[error("invalid masking function: {0}")]
    InvalidMask(String),

    #[error("invalid masking configuration `{id}`: {reason}")]
    InvalidConfiguration { id: String, reason: String },

    #[error("configuration generator: {0}")]
    Generator(String),

    #[error(
        "infeasible constraints for `{attribute}`: marginal mass {marginal} under masked value `{masked_value}` differs from masked total {masked}"
    )]
    Infeasible {
        attribute: String,
        masked_value: String,
        marginal: f64,
        masked: f64,
    },

    #[error("degenerate {what} in `{attribute}`: current sum is zero but target is {target}")]
    Degenerate {
        attribute: String,
        what: String,
        target: f64,
    },

    #[error("invalid IPF settings: {0}")]
    InvalidSettings(String),

    #[error("measure requires an integral table; round it first")]
    NonIntegral,

    #[error("table has zero total")]
    ZeroTotal,

    #[error("configuration `{config}`, attribute `{attribute}`: {source}")]
    Annotated {
        config: String,
        attribute: String,
        #[source]
        source: Box<Error>,
    },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn annotate(self, config: &str, attribute: &str) -> Self {
        Error::Annotated {
            config: config.to_string(),
            attribute: attribute.to_string(),
            source: Box::new(self),
        }
    }
}

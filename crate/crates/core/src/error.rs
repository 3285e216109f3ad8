use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown statement id `{0}`")]
    UnknownStatement(String),

    #[error("empty content: {0}")]
    EmptyContent(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("record has no ratings (annotator `{annotator}`, doc `{doc}`)")]
    EmptyRecord { annotator: String, doc: String },

    #[error("profiles belong to different documents: `{0}` and `{1}`")]
    MixedDocuments(String, String),

    #[error("insufficient comparisons: {0}")]
    InsufficientComparisons(String),

    #[error("insufficient overlap: {0}")]
    InsufficientOverlap(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("no pairable values: no unit has at least two ratings")]
    NoPairableValues,

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("too few documents: need at least {needed}, got {got}")]
    TooFewDocuments { needed: usize, got: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("catalog mismatch: model expects {expected}, got {actual}")]
    CatalogMismatch { expected: String, actual: String },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("rank deficient design: collinear columns {0:?}")]
    RankDeficient(Vec<String>),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("missing participant profiles for annotators {0:?}")]
    MissingProfiles(Vec<String>),

    #[error("missing perception dimension {0}")]
    MissingDimension(String),

    #[error("{path}:{line}: schema violation: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("encoder error: {0}")]
    Encoder(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

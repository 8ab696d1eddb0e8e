use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by parsing, validation, and model operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed header: {detail}")]
    MalformedHeader {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("{path}:{line}: {detail}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("{path}:{line}: feature index {index} out of range (dimension {dim})")]
    FeatureIndexOutOfRange {
        path: PathBuf,
        line: usize,
        index: u32,
        dim: usize,
    },

    #[error("{path}:{line}: label id {label} out of range ({n_labels} labels declared)")]
    LabelOutOfRange {
        path: PathBuf,
        line: usize,
        label: u32,
        n_labels: usize,
    },

    #[error("{path}:{line}: unknown label name {name:?}")]
    UnknownLabelName {
        path: PathBuf,
        line: usize,
        name: String,
    },

    #[error("taxonomy cycle detected involving {name:?}")]
    TaxonomyCycle { name: String },

    #[error("label {name:?} has two parents: {first:?} and {second:?}")]
    TwoParents {
        name: String,
        first: String,
        second: String,
    },

    #[error("dangling child {name:?}: {detail}")]
    DanglingChild { name: String, detail: String },

    #[error("node name {name:?} cannot be serialized: {detail}")]
    InvalidName { name: String, detail: String },

    #[error("duplicate feature index {index} in sparse vector")]
    DuplicateIndex { index: u32 },

    #[error("empty corpus: {detail}")]
    EmptyCorpus { detail: String },

    #[error("cannot subsample {requested} documents from {available}")]
    InsufficientDocuments { requested: usize, available: usize },

    #[error("label vocabularies differ between splits: {detail}")]
    VocabularyMismatch { detail: String },

    #[error("document {doc_id} has labels but zero length")]
    ZeroLengthDocument { doc_id: u64 },

    #[error("k = {k} exceeds the number of points ({n})")]
    TooManyClusters { k: usize, n: usize },

    #[error("branching plan is empty")]
    EmptyPlan,

    #[error("label {label} referenced by the dataset is absent from the tree")]
    LabelNotInTree { label: String },

    #[error("tree leaves and dataset vocabulary differ: {detail}")]
    LeafVocabMismatch { detail: String },

    #[error("node budget {budget} cannot fit a root-to-leaf path of {path_len} nodes")]
    BudgetTooSmall { budget: usize, path_len: usize },

    #[error("prediction/truth lists have different lengths: {preds} vs {truths}")]
    LengthMismatch { preds: usize, truths: usize },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty training set: {detail}")]
    EmptyTrainingSet { detail: String },

    #[error("corrupt model file: {detail}")]
    CorruptModel { detail: String },

    #[error("unsupported model version {version} (expected {expected})")]
    ModelVersion { version: u32, expected: u32 },

    #[error("invalid argument: {detail}")]
    InvalidArgument { detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

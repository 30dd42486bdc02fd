use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: duplicate item_id {id}")]
    DuplicateItemId { line: u64, id: usize },
    #[error("line {line}: item_id {found} out of sequence, expected {expected}")]
    NonContiguousItemId {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown category {label:?} (expected \"expensive\" or \"cheap\")")]
    UnknownCategory { line: u64, label: String },
    #[error("catalog has no {0} items")]
    EmptyCategory(crate::model::Category),
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("header column {column} is {found:?}, expected item name {name:?} or index {column_index}")]
    HeaderMismatch {
        column: usize,
        column_index: usize,
        name: String,
        found: String,
    },
    #[error("line {line}: expected {expected} item columns, found {found}")]
    WidthMismatch {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: non-binary entry {token:?}")]
    NonBinaryEntry {
        line: u64,
        column: usize,
        token: String,
    },
    #[error("line {line}: duplicate user_id {user_id:?}")]
    DuplicateUserId { line: u64, user_id: String },
    #[error("preference matrix has no rows")]
    EmptyMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid selection constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid kit: {0}")]
    InvalidKit(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("svd did not converge within {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },
    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("k = {k} exceeds the number of rows n = {n}")]
    TooManyClusters { k: usize, n: usize },
    #[error("centroid set is empty")]
    EmptyCentroids,
    #[error("silhouette needs at least 2 non-empty clusters, found {0}")]
    TooFewClusters(usize),
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("partition has no non-empty clusters")]
    EmptyPartition,
    #[error("kit list is empty")]
    NoKits,
    #[error("{0} already exists (pass --force to overwrite)")]
    OutputExists(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

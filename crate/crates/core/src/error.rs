use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("dataset has no segments")]
    EmptyDataset,

    #[error("system `{system}` has {found} segments, expected {expected}")]
    LineCountMismatch {
        system: String,
        found: usize,
        expected: usize,
    },

    #[error("invalid system name `{0}`")]
    InvalidSystemName(String),

    #[error("segment {segment} of {what} contains a line break")]
    MultilineSegment { what: String, segment: usize },

    #[error("{file}:{row}: malformed row: {reason}")]
    MalformedRow {
        file: String,
        row: usize,
        reason: String,
    },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("segment index {index} out of range (dataset has {segments} segments)")]
    SegmentOutOfRange { index: usize, segments: usize },

    #[error("preference at segment {segment} has winner equal to loser (`{system}`)")]
    WinnerEqualsLoser { segment: usize, system: String },

    #[error("duplicate entry for system `{system}` at segment {segment}")]
    DuplicateEntry { system: String, segment: usize },

    #[error("incomplete external scores: missing ({system}, {segment})")]
    IncompleteScores { system: String, segment: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty reference")]
    EmptyReference,

    #[error("empty hypothesis")]
    EmptyHypothesis,

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("metric `{0}` requires external scores")]
    MissingExternalScores(String),

    #[error("metric mismatch: `{0}` vs `{1}`")]
    MetricMismatch(String, String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported judgment kind: {0}")]
    UnsupportedJudgmentKind(String),

    #[error("grid is not populated: {0}")]
    UnpopulatedGrid(String),

    #[error("mismatched pair sets between `{0}` and `{1}`")]
    PairSetMismatch(String, String),

    #[error("empty pair set")]
    EmptyPairSet,

    #[error("incomplete comparison set: missing ({0}, {1})")]
    IncompleteComparisons(String, String),

    #[error("metric roster mismatch: {0}")]
    RosterMismatch(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("bad cache file {file}: {reason}")]
    BadCache { file: String, reason: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            return Error::MissingFile(path.into());
        }
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's data or configuration, as
    /// opposed to broken internal invariants.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}

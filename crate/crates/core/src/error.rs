//! Error type shared across the crate, with coarse categories for CLI exit codes.

use thiserror::Error;

/// Coarse error categories, mapped to process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad invocation or configuration (exit 2).
    Usage,
    /// Input data failed validation (exit 3).
    Data,
    /// A numerical procedure could not produce a result (exit 4).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("entry at row '{row}', column '{col}' is {value}, which is not a finite nonnegative number")]
    InvalidEntry { row: String, col: String, value: f64 },

    #[error("duplicate {axis} label '{label}'")]
    DuplicateLabel { axis: &'static str, label: String },

    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,

    #[error("row '{0}' is entirely zero; factorization requires a positive entry per row")]
    ZeroRow(String),

    #[error("column '{0}' is entirely zero; factorization requires a positive entry per column")]
    ZeroColumn(String),

    #[error("factor column {0} has zero norm")]
    ZeroFactorColumn(usize),

    #[error("rank k = {k} out of range; must satisfy 1 <= k <= {max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("rank k = {k} exceeds the {subset} subset size {n}")]
    RankExceedsSubset {
        k: usize,
        subset: &'static str,
        n: usize,
    },

    #[error("empty {0} group; both treatment arms must be nonempty")]
    EmptyGroup(&'static str),

    #[error("treatment vector entry for subject '{subject}' is {value}; must be 0 or 1")]
    InvalidTreatment { subject: String, value: String },

    #[error("treatment labels do not match matrix columns: {0}")]
    TreatmentMismatch(String),

    #[error("split left the held-out half with an empty {0} group")]
    DegenerateSplit(&'static str),

    #[error("split size {take} leaves no room to hold out subject index {subject} (n = {n})")]
    SplitTooLarge { take: usize, subject: usize, n: usize },

    #[error("yhat is {value} at row '{row}', column '{col}' where y > 0; KL divergence undefined")]
    NonPositiveModelValue { row: String, col: String, value: f64 },

    #[error("permutation mapping {0:?} is not a permutation of 0..{1}")]
    InvalidPermutation(Vec<usize>, usize),

    #[error("factor count mismatch: estimated has {estimated} columns, reference has {reference}")]
    FactorCountMismatch { estimated: usize, reference: usize },

    #[error("consensus alignment needs at least one replicate")]
    EmptyReplicateList,

    #[error("all {0} bootstrap replicates failed; cannot summarize")]
    AllReplicatesFailed(usize),

    #[error("quantile probability {0} outside [0, 1]")]
    InvalidQuantile(f64),

    #[error("empty sample list for quantile")]
    EmptySample,

    #[error("missing {0} latent outcomes for the requested estimator")]
    MissingArm(&'static str),

    #[error("sample pool is empty")]
    EmptyPool,

    #[error("probability {name} = {value} outside (0, 1)")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("algorithm '{0}' requires true latent outcomes, which were not supplied")]
    TruthRequired(&'static str),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Category used by the CLI to pick an exit code.
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidConfig(_) | InvalidQuantile(_) | TruthRequired(_) => ErrorCategory::Usage,
            ShapeMismatch { .. }
            | InvalidEntry { .. }
            | DuplicateLabel { .. }
            | EmptyMatrix
            | ZeroRow(_)
            | ZeroColumn(_)
            | RankOutOfRange { .. }
            | RankExceedsSubset { .. }
            | EmptyGroup(_)
            | InvalidTreatment { .. }
            | TreatmentMismatch(_)
            | SplitTooLarge { .. }
            | EmptyPool
            | InvalidProbability { .. }
            | Csv { .. }
            | Io { .. }
            | Json { .. } => ErrorCategory::Data,
            ZeroFactorColumn(_)
            | DegenerateSplit(_)
            | NonPositiveModelValue { .. }
            | InvalidPermutation(..)
            | FactorCountMismatch { .. }
            | EmptyReplicateList
            | AllReplicatesFailed(_)
            | EmptySample
            | MissingArm(_) => ErrorCategory::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("tensor order {order} too small: {context}")]
    OrderTooSmall { order: usize, context: &'static str },

    #[error("rank {rank} out of range: violates {bound}")]
    RankOutOfRange { rank: usize, bound: String },

    #[error("matrix block for mode {mode} is rank-deficient (numerical rank {numerical_rank}, need {required})")]
    RankDeficientBlock {
        mode: usize,
        numerical_rank: usize,
        required: usize,
    },

    #[error("degenerate spectrum: smallest eigenvalue gap {gap:.3e} below {threshold:.3e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("decomposition failed after {redraws} combination redraws: {last}")]
    RedrawsExhausted { redraws: usize, last: String },

    #[error("rank {rank} too large for reshaping dims {dims:?}")]
    RankTooLargeForReshape { rank: usize, dims: Vec<usize> },

    #[error("mode groups {groups:?} do not partition the modes of an order-{order} tensor")]
    InvalidModePartition {
        groups: Vec<Vec<usize>>,
        order: usize,
    },

    #[error("reshaped factor for modes {modes:?} is not rank-1 (relative residual {resid:.3e}); reshaping does not produce a decomposition")]
    ReshapeNotRankOne { modes: Vec<usize>, resid: f64 },

    #[error("matrix with {cols} columns too large for exact Kruskal rank (limit {limit})")]
    KruskalTooLarge { cols: usize, limit: usize },

    #[error("monomial label {label:?} out of range for dims {dims:?}")]
    LabelOutOfRange { label: Vec<usize>, dims: Vec<usize> },

    #[error("polynomial support includes mode {mode} outside the allowed mode set {allowed:?}")]
    SupportOutsideModes { mode: usize, allowed: Vec<usize> },

    #[error("slice pencil is singular or ill-conditioned (condition estimate {cond:.3e}); retry with a random slice recombination failed")]
    PencilIllConditioned { cond: f64 },

    #[error("invalid tolerance {value}: {context}")]
    InvalidTolerance { value: f64, context: &'static str },

    #[error("eigendecomposition failed: {0}")]
    EigFailure(String),

    #[error("singular value decomposition failed: {0}")]
    SvdFailure(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {format} file {path} at line {line}, column {column}: {detail}")]
    Malformed {
        format: &'static str,
        path: String,
        line: usize,
        column: usize,
        detail: String,
    },

    #[error("file {path} has format tag {found:?}, expected {expected:?}")]
    WrongFormatTag {
        path: String,
        found: String,
        expected: &'static str,
    },

    #[error("file {path}: data length {len} does not match dims product {expected}")]
    DataLengthMismatch {
        path: String,
        len: usize,
        expected: usize,
    },
}

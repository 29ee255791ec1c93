use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("exponent p = {0} is not valid here")]
    InvalidP(String),

    #[error("operation does not support p = {0}")]
    UnsupportedP(String),

    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),

    #[error("fixed point recursion did not converge after {iterations} iterations (last beta {last_beta}, residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        last_beta: f64,
        residual: f64,
    },

    #[error("linear image of summand {index} is degenerate")]
    DegenerateImage { index: usize },

    #[error("ellipsoid is not an outer bound: support margin {margin:e} in sampled direction")]
    NotOuter { margin: f64 },

    #[error("point set is degenerate: {0}")]
    DegeneratePointSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

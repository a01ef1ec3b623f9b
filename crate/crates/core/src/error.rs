//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("sample is empty")]
    EmptySample,

    #[error("non-finite value {value} at input index {index}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("tail index {alpha} <= 1 implies an infinite tail mean")]
    InfiniteMean { alpha: f64 },

    #[error("threshold order statistic {threshold} <= 0: log-excesses undefined")]
    NonPositiveThreshold { threshold: f64 },

    #[error("top k+1 order statistics are all equal: zero mean log-excess")]
    DegenerateTail,

    #[error("k = {k} out of range for sample size n = {n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("level t = {t} >= 1 - k/n with k = {k}, n = {n}: empirical integral degenerate")]
    LevelThresholdConflict { t: f64, k: usize, n: usize },

    #[error(
        "solver did not converge after {iterations} iterations \
         (best residual {residual_norm:.3e} at alpha = {alpha:.6}, beta = {beta:.6})"
    )]
    NonConvergence {
        iterations: u32,
        residual_norm: f64,
        alpha: f64,
        beta: f64,
    },

    #[error("non-positive G_i at alpha = {alpha:.6}, beta = {beta:.6} after damping exhausted")]
    NumericalDomain { alpha: f64, beta: f64 },

    #[error("alpha_hat = beta_hat = {alpha}: scale coefficients are singular")]
    SingularCoefficients { alpha: f64 },

    #[error("fitted scale coefficient c_hat = {c_hat} <= 0: fit unusable for extrapolation")]
    UnusableFit { c_hat: f64 },

    #[error("fit has not converged; refusing to extrapolate")]
    FitNotConverged,

    #[error("asymptotic variance undefined at alpha = {alpha}, beta = {beta}")]
    VarianceOutOfDomain { alpha: f64, beta: f64 },
}

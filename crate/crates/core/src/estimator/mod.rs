//! Weighted least squares, likelihood evaluation and the noise-parameter
//! search built on top of them.

mod mle;
mod nelder_mead;
mod wls;

pub use mle::{
    mle_fit, mle_fit_design, FitResult, FitWarning, MleOptions, NoiseFamily, NoiseParam,
    KAPPA_SEARCH_MAX, KAPPA_SEARCH_MIN, MIN_OBSERVATIONS,
};
pub use nelder_mead::{nelder_mead, MinimizerOptions, Minimum};
pub use wls::{log_likelihood, sigma_from_residuals, wls_fit, WlsSolution};

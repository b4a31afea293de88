//! Trajectory fitting and noise analysis for evenly sampled time series
//! with power-law, Gauss-Markov and white noise.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The `*F64`
//! aliases below name the double-precision instances used by the command
//! line tool.

pub mod covariance;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linalg;
pub mod noise_kernel;
pub mod noise_model;
pub mod scalar;
pub mod series;
pub mod spectral;
pub mod synthesis;
pub mod trajectory;

pub use covariance::{
    build_covariance, build_toeplitz_covariance, cholesky, CholeskyFactor, CovarianceMatrix,
    SolverKind,
};
pub use error::{Error, Result};
pub use estimator::{
    mle_fit, nelder_mead, wls_fit, FitResult, FitWarning, MinimizerOptions, MleOptions,
    NoiseFamily, NoiseParam,
};
pub use noise_kernel::{FilterCoefficients, NoiseFilter};
pub use noise_model::{NoiseComponent, NoiseModelSpec};
pub use scalar::Real;
pub use series::TimeSeries;
pub use spectral::{Periodogram, Window};
pub use trajectory::{BasisTerm, DesignMatrix, TrajectoryModelSpec};

pub type TimeSeriesF64 = TimeSeries<f64>;
pub type NoiseModelF64 = NoiseModelSpec<f64>;
pub type NoiseFamilyF64 = NoiseFamily<f64>;
pub type TrajectoryF64 = TrajectoryModelSpec<f64>;
pub type FitResultF64 = FitResult<f64>;
pub type PeriodogramF64 = Periodogram<f64>;
pub type CovarianceF64 = CovarianceMatrix<f64>;

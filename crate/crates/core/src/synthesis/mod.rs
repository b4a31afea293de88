//! Synthetic coloured noise and observation series.
//!
//! Noise is unit Gaussian white noise filtered by the taps of
//! [`crate::noise_kernel`]. The convolution is done in the frequency domain
//! on sequences zero-padded to twice the output length, so the circular
//! product equals the linear convolution for the first `n` samples.

mod bsg;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::noise_kernel::{FilterCoefficients, NoiseFilter};
use crate::noise_model::NoiseModelSpec;
use crate::scalar::Real;
use crate::series::TimeSeries;
use crate::trajectory::TrajectoryModelSpec;

pub use bsg::{
    bsg_series, bsg_series_seed, generate_bsg, generate_bsg_with, read_manifest, write_manifest,
    BsgOptions, BsgTruth, BSG_COMPONENTS, BSG_HORIZONTAL, BSG_LENGTH, BSG_MANIFEST,
    BSG_START_MJD, BSG_STATIONS, BSG_VERTICAL,
};

/// The random generator behind every synthetic series.
pub type NoiseRng = ChaCha8Rng;

pub fn noise_rng(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` standard normal deviates.
pub fn gaussian_draws<T: Real>(rng: &mut NoiseRng, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// First `n` samples of the linear convolution of `h` and `v`, by FFT.
pub fn fft_convolve<T: Real>(h: &[T], v: &[T], n: usize) -> Vec<T> {
    let len = 2 * n;
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let pad = |x: &[T]| -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); len];
        for (o, &xi) in out.iter_mut().zip(x.iter().take(n)) {
            o.re = xi;
        }
        out
    };
    let mut hf = pad(h);
    let mut vf = pad(v);
    fwd.process(&mut hf);
    fwd.process(&mut vf);
    for (a, b) in vf.iter_mut().zip(&hf) {
        *a *= *b;
    }
    inv.process(&mut vf);
    let scale = T::from_usize_lossy(len);
    vf.iter().take(n).map(|c| c.re / scale).collect()
}

/// Coloured noise `w = h * (sigma v)` from `n` Gaussian draws seeded by `seed`.
pub fn generate_colored_noise<T: Real>(
    coeffs: &FilterCoefficients<T>,
    sigma: T,
    n: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::EmptyRequest("zero samples requested"));
    }
    if coeffs.len() < n {
        return Err(Error::Dimension {
            expected: n,
            found: coeffs.len(),
        });
    }
    let mut rng = noise_rng(seed);
    let v: Vec<T> = gaussian_draws::<T>(&mut rng, n)
        .into_iter()
        .map(|x| x * sigma)
        .collect();
    Ok(fft_convolve(coeffs.as_slice(), &v, n))
}

/// `sigma (sqrt(phi_mix) h * v + sqrt(1 - phi_mix) u)` for any coloured
/// filter. `v` is drawn before `u` from the same stream.
pub fn mix_colored_white<T: Real>(
    filter: &NoiseFilter<T>,
    sigma: T,
    phi_mix: T,
    n: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if !(phi_mix >= T::zero() && phi_mix <= T::one()) {
        return Err(Error::Domain(format!("mixing fraction {phi_mix} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::EmptyRequest("zero samples requested"));
    }
    let coeffs = filter.coefficients(n)?;
    let mut rng = noise_rng(seed);
    let v = gaussian_draws::<T>(&mut rng, n);
    let u = gaussian_draws::<T>(&mut rng, n);
    let colored = fft_convolve(coeffs.as_slice(), &v, n);
    let a = phi_mix.sqrt();
    let b = (T::one() - phi_mix).sqrt();
    Ok(colored
        .into_iter()
        .zip(u)
        .map(|(c, w)| sigma * (a * c + b * w))
        .collect())
}

/// Flicker plus white noise in the mixed parametrisation.
pub fn mix_flicker_white<T: Real>(sigma: T, phi_mix: T, n: usize, seed: u64) -> Result<Vec<T>> {
    mix_colored_white(&NoiseFilter::Flicker, sigma, phi_mix, n, seed)
}

/// Noise realisation of any model.
pub fn simulate_noise<T: Real>(model: &NoiseModelSpec<T>, n: usize, seed: u64) -> Result<Vec<T>> {
    model.validate()?;
    match *model {
        NoiseModelSpec::Single(c) => {
            generate_colored_noise(&c.filter.coefficients(n)?, c.sigma, n, seed)
        }
        NoiseModelSpec::Mixed {
            filter,
            sigma,
            phi_mix,
        } => mix_colored_white(&filter, sigma, phi_mix, n, seed),
        NoiseModelSpec::Sum(a, b) => {
            let mut rng = noise_rng(seed);
            let va = gaussian_draws::<T>(&mut rng, n);
            let vb = gaussian_draws::<T>(&mut rng, n);
            let wa = fft_convolve(a.filter.coefficients(n)?.as_slice(), &va, n);
            let wb = fft_convolve(b.filter.coefficients(n)?.as_slice(), &vb, n);
            Ok(wa
                .into_iter()
                .zip(wb)
                .map(|(x, y)| a.sigma * x + b.sigma * y)
                .collect())
        }
    }
}

/// Converts mixed-form amplitudes to `(sigma_pl, sigma_w)`: the power-law
/// amplitude in mm/yr^(-kappa/4) and the white amplitude in mm. `dt` is the
/// sampling period in years.
///
/// A per-sample amplitude `s` corresponds to `s * dt^(kappa/4)` in
/// per-year units; for daily flicker noise that is a factor
/// `365.25^(1/4) = 4.37`.
pub fn scale_amplitude<T: Real>(sigma: T, phi_mix: T, kappa: T, dt: T) -> Result<(T, T)> {
    if !(dt > T::zero()) {
        return Err(Error::Domain(format!("sampling period {dt} must be positive")));
    }
    if !(phi_mix >= T::zero() && phi_mix <= T::one()) {
        return Err(Error::Domain(format!("mixing fraction {phi_mix} outside [0, 1]")));
    }
    let sigma_pl = sigma * phi_mix.sqrt() * dt.powf(kappa / T::lit(4.0));
    let sigma_w = sigma * (T::one() - phi_mix).sqrt();
    Ok((sigma_pl, sigma_w))
}

/// Everything needed to regenerate one synthetic series.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisRecipe<T> {
    pub trajectory: TrajectoryModelSpec<T>,
    pub coefficients: Vec<T>,
    pub noise: NoiseModelSpec<T>,
    pub n: usize,
    pub seed: u64,
    pub start_mjd: T,
    /// Days.
    pub sampling_period: T,
}

impl<T: Real> SynthesisRecipe<T> {
    pub fn epochs(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| self.start_mjd + T::from_usize_lossy(i) * self.sampling_period)
            .collect()
    }
}

/// Trajectory plus noise.
pub fn synthesize<T: Real>(recipe: &SynthesisRecipe<T>) -> Result<TimeSeries<T>> {
    if recipe.n == 0 {
        return Err(Error::EmptyRequest("zero samples requested"));
    }
    let epochs = recipe.epochs();
    let years: Vec<T> = epochs.iter().map(|&e| crate::series::mjd_to_year(e)).collect();
    let signal = recipe.trajectory.evaluate(&recipe.coefficients, &years)?;
    let noise = simulate_noise(&recipe.noise, recipe.n, recipe.seed)?;
    let values = signal.into_iter().zip(noise).map(|(s, w)| s + w).collect();
    TimeSeries::new(epochs, values)
}

//! Filter taps and analytic spectra of the power-law noise family.
//!
//! Every model in this module is white noise pushed through a causal linear
//! filter. The taps of that filter follow from the fractional-differencing
//! recurrence
//!
//! ```text
//! h[0] = 1
//! h[i] = (i - kappa/2 - 1) * phi * h[i-1] / i
//! ```
//!
//! with `phi = 1` for pure power-law noise. White noise (`kappa = 0`),
//! flicker noise (`kappa = -1`) and random walk (`kappa = -2`) are the named
//! special cases.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const KAPPA_MIN: f64 = -2.0;
pub const KAPPA_MAX: f64 = 2.0;

/// Filter producing one coloured noise component from unit white noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFilter<T> {
    White,
    PowerLaw { kappa: T },
    /// Power law with `kappa = -1`.
    Flicker,
    /// Power law with `kappa = -2`.
    RandomWalk,
    /// Generalised Gauss-Markov: power law damped by `phi` per tap.
    Ggm { kappa: T, phi: T },
    /// Power-law stage with index `kappa2` followed by a GGM stage.
    Figgm { kappa1: T, kappa2: T, phi: T },
}

impl<T: Real> NoiseFilter<T> {
    /// Resolves the named aliases to their parametric form.
    pub fn canonical(self) -> Self {
        match self {
            NoiseFilter::White => NoiseFilter::PowerLaw { kappa: T::zero() },
            NoiseFilter::Flicker => NoiseFilter::PowerLaw { kappa: -T::one() },
            NoiseFilter::RandomWalk => NoiseFilter::PowerLaw {
                kappa: T::lit(-2.0),
            },
            other => other,
        }
    }

    /// Spectral index of the dominant stage.
    pub fn kappa(&self) -> T {
        match self.canonical() {
            NoiseFilter::PowerLaw { kappa } | NoiseFilter::Ggm { kappa, .. } => kappa,
            NoiseFilter::Figgm { kappa1, .. } => kappa1,
            _ => unreachable!("canonical form"),
        }
    }

    /// `phi` for GGM-type filters, 1 otherwise.
    pub fn phi(&self) -> T {
        match *self {
            NoiseFilter::Ggm { phi, .. } | NoiseFilter::Figgm { phi, .. } => phi,
            _ => T::one(),
        }
    }

    pub fn is_white(&self) -> bool {
        match self.canonical() {
            NoiseFilter::PowerLaw { kappa } => kappa == T::zero(),
            NoiseFilter::Ggm { kappa, .. } => kappa == T::zero(),
            NoiseFilter::Figgm { kappa1, kappa2, .. } => {
                kappa1 == T::zero() && kappa2 == T::zero()
            }
            _ => unreachable!("canonical form"),
        }
    }

    /// Whether the process has a finite stationary variance.
    ///
    /// Power-law noise with `kappa < -1` grows without bound; GGM damping with
    /// `phi < 1` always restores stationarity.
    pub fn is_stationary(&self) -> bool {
        match self.canonical() {
            NoiseFilter::PowerLaw { kappa } => kappa >= -T::one(),
            NoiseFilter::Ggm { kappa, phi } => phi < T::one() || kappa >= -T::one(),
            NoiseFilter::Figgm { kappa2, phi, .. } => phi < T::one() && kappa2 >= -T::one(),
            _ => unreachable!("canonical form"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.canonical() {
            NoiseFilter::PowerLaw { kappa } => check_kappa(kappa),
            NoiseFilter::Ggm { kappa, phi } => {
                check_kappa(kappa)?;
                check_phi(phi)
            }
            NoiseFilter::Figgm {
                kappa1,
                kappa2,
                phi,
            } => {
                check_kappa(kappa1)?;
                check_kappa(kappa2)?;
                check_phi(phi)
            }
            _ => unreachable!("canonical form"),
        }
    }

    /// First `n` filter taps.
    pub fn coefficients(&self, n: usize) -> Result<FilterCoefficients<T>> {
        match self.canonical() {
            NoiseFilter::PowerLaw { kappa } => pl_filter_coeffs(kappa, n),
            NoiseFilter::Ggm { kappa, phi } => ggm_filter_coeffs(kappa, phi, n),
            NoiseFilter::Figgm {
                kappa1,
                kappa2,
                phi,
            } => figgm_filter_coeffs(kappa1, kappa2, phi, n),
            _ => unreachable!("canonical form"),
        }
    }

    /// One-sided analytic PSD of the filtered noise with driving amplitude `sigma`.
    pub fn psd(&self, f: T, sigma: T, fs: T) -> Result<T> {
        match self.canonical() {
            NoiseFilter::PowerLaw { kappa } => psd_powerlaw(f, kappa, sigma, fs),
            NoiseFilter::Ggm { kappa, phi } => psd_ggm(f, kappa, phi, sigma, fs),
            NoiseFilter::Figgm {
                kappa1,
                kappa2,
                phi,
            } => {
                let pl = psd_powerlaw(f, kappa2, T::one(), fs)?;
                let ggm = psd_ggm(f, kappa1, phi, sigma, fs)?;
                // both factors carry 2/fs; keep it once
                Ok(pl * ggm * fs / T::lit(2.0))
            }
            _ => unreachable!("canonical form"),
        }
    }
}

/// Filter taps `h[0..n]` plus the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients<T> {
    pub h: Vec<T>,
    pub kappa: T,
    /// Second spectral index, FIGGM only.
    pub kappa2: Option<T>,
    pub phi: T,
}

impl<T: Real> FilterCoefficients<T> {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.h
    }

    /// The identity filter `[1, 0, 0, ...]`.
    pub fn identity(n: usize) -> Self {
        let mut h = vec![T::zero(); n];
        if n > 0 {
            h[0] = T::one();
        }
        FilterCoefficients {
            h,
            kappa: T::zero(),
            kappa2: None,
            phi: T::one(),
        }
    }
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if !(kappa >= T::lit(KAPPA_MIN) && kappa <= T::lit(KAPPA_MAX)) {
        return Err(Error::Domain(format!(
            "spectral index {kappa} outside [{KAPPA_MIN}, {KAPPA_MAX}]"
        )));
    }
    Ok(())
}

fn check_phi<T: Real>(phi: T) -> Result<()> {
    if !(phi > T::zero() && phi <= T::one()) {
        return Err(Error::Domain(format!("GGM phi {phi} outside (0, 1]")));
    }
    Ok(())
}

fn recurrence<T: Real>(kappa: T, phi: T, n: usize) -> Vec<T> {
    let half = kappa / T::lit(2.0);
    let mut h = Vec::with_capacity(n);
    h.push(T::one());
    for i in 1..n {
        // (i - 1) first: exact, so small kappa loses no digits
        let factor = T::from_usize_lossy(i - 1) - half;
        h.push(factor * phi * h[i - 1] / T::from_usize_lossy(i));
    }
    h
}

/// Power-law taps `h[i] = (i - kappa/2 - 1) h[i-1] / i`.
pub fn pl_filter_coeffs<T: Real>(kappa: T, n: usize) -> Result<FilterCoefficients<T>> {
    if n == 0 {
        return Err(Error::EmptyRequest("zero filter taps requested"));
    }
    check_kappa(kappa)?;
    Ok(FilterCoefficients {
        h: recurrence(kappa, T::one(), n),
        kappa,
        kappa2: None,
        phi: T::one(),
    })
}

/// GGM taps `h[i] = (i - kappa/2 - 1) phi h[i-1] / i`.
pub fn ggm_filter_coeffs<T: Real>(kappa: T, phi: T, n: usize) -> Result<FilterCoefficients<T>> {
    if n == 0 {
        return Err(Error::EmptyRequest("zero filter taps requested"));
    }
    check_kappa(kappa)?;
    check_phi(phi)?;
    Ok(FilterCoefficients {
        h: recurrence(kappa, phi, n),
        kappa,
        kappa2: None,
        phi,
    })
}

/// FIGGM taps: the power-law stage (`kappa2`) convolved with the GGM stage
/// (`kappa1`, `phi`), truncated to `n` taps.
pub fn figgm_filter_coeffs<T: Real>(
    kappa1: T,
    kappa2: T,
    phi: T,
    n: usize,
) -> Result<FilterCoefficients<T>> {
    let pl = pl_filter_coeffs(kappa2, n)?;
    let ggm = ggm_filter_coeffs(kappa1, phi, n)?;
    let mut h = vec![T::zero(); n];
    for (i, out) in h.iter_mut().enumerate() {
        let mut acc = T::zero();
        for j in 0..=i {
            acc += pl.h[j] * ggm.h[i - j];
        }
        *out = acc;
    }
    Ok(FilterCoefficients {
        h,
        kappa: kappa1,
        kappa2: Some(kappa2),
        phi,
    })
}

fn check_frequency<T: Real>(f: T, fs: T) -> Result<()> {
    if !(fs > T::zero()) {
        return Err(Error::Domain(format!("sampling frequency {fs} must be positive")));
    }
    if f < T::zero() || f > fs / T::lit(2.0) * T::lit(1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "frequency {f} outside [0, fs/2] for fs = {fs}"
        )));
    }
    Ok(())
}

/// `S(f) = (2 sigma^2 / fs) (2 sin(pi f / fs))^kappa`
pub fn psd_powerlaw<T: Real>(f: T, kappa: T, sigma: T, fs: T) -> Result<T> {
    check_frequency(f, fs)?;
    let two = T::lit(2.0);
    if f == T::zero() {
        if kappa < T::zero() {
            return Err(Error::Singularity(format!(
                "power-law PSD with kappa = {kappa} diverges at f = 0"
            )));
        }
        if kappa > T::zero() {
            return Ok(T::zero());
        }
    }
    let base = two * (T::PI() * f / fs).sin();
    Ok(two * sigma * sigma / fs * base.powf(kappa))
}

/// `S(f) = (2 sigma^2 / fs) [1 + phi^2 - 2 phi cos(2 pi f / fs)]^(kappa/2)`
pub fn psd_ggm<T: Real>(f: T, kappa: T, phi: T, sigma: T, fs: T) -> Result<T> {
    check_frequency(f, fs)?;
    check_phi(phi)?;
    let two = T::lit(2.0);
    let base = T::one() + phi * phi - two * phi * (two * T::PI() * f / fs).cos();
    if base <= T::zero() {
        if kappa < T::zero() {
            return Err(Error::Singularity(format!(
                "GGM PSD with phi = {phi}, kappa = {kappa} diverges at f = {f}"
            )));
        }
        if kappa > T::zero() {
            return Ok(T::zero());
        }
    }
    Ok(two * sigma * sigma / fs * base.max(T::zero()).powf(kappa / two))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn white_taps_vanish() {
        let c = pl_filter_coeffs(0.0_f64, 4).unwrap();
        assert_eq!(c.h, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn random_walk_taps_are_ones() {
        let c = pl_filter_coeffs(-2.0_f64, 4).unwrap();
        assert_eq!(c.h, vec![1.0, 1.0, 1.0, 1.0]);
        let g = ggm_filter_coeffs(-2.0_f64, 1.0, 6).unwrap();
        assert!(g.h.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn flicker_taps() {
        let c = pl_filter_coeffs(-1.0_f64, 4).unwrap();
        for (a, b) in c.h.iter().zip([1.0, 0.5, 0.375, 0.3125]) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn ggm_examples() {
        let c = ggm_filter_coeffs(-1.0_f64, 1.0, 4).unwrap();
        assert_eq!(c.h, pl_filter_coeffs(-1.0, 4).unwrap().h);
        let c = ggm_filter_coeffs(0.0_f64, 0.5, 3).unwrap();
        assert_eq!(c.h, vec![1.0, 0.0, 0.0]);
        let c = ggm_filter_coeffs(-1.0_f64, 0.9, 3).unwrap();
        assert_relative_eq!(c.h[1], 0.45, max_relative = 1e-14);
        assert_relative_eq!(c.h[2], 0.30375, max_relative = 1e-14);
    }

    #[test]
    fn figgm_reduces_to_stages() {
        let g = figgm_filter_coeffs(-0.7_f64, 0.0, 0.8, 10).unwrap();
        let r = ggm_filter_coeffs(-0.7_f64, 0.8, 10).unwrap();
        for (a, b) in g.h.iter().zip(&r.h) {
            assert_relative_eq!(*a, *b, max_relative = 1e-15);
        }
        let g = figgm_filter_coeffs(0.0_f64, -1.0, 0.8, 10).unwrap();
        let p = pl_filter_coeffs(-1.0_f64, 10).unwrap();
        for (a, b) in g.h.iter().zip(&p.h) {
            assert_relative_eq!(*a, *b, max_relative = 1e-15);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(matches!(
            pl_filter_coeffs(-1.0_f64, 0),
            Err(Error::EmptyRequest(_))
        ));
        assert!(matches!(pl_filter_coeffs(-2.5_f64, 3), Err(Error::Domain(_))));
        assert!(matches!(pl_filter_coeffs(f64::NAN, 3), Err(Error::Domain(_))));
        assert!(matches!(ggm_filter_coeffs(-1.0_f64, 0.0, 3), Err(Error::Domain(_))));
        assert!(matches!(ggm_filter_coeffs(-1.0_f64, 1.01, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn psd_values() {
        assert_relative_eq!(psd_powerlaw(0.1_f64, 0.0, 1.5, 2.0).unwrap(), 2.25);
        assert_relative_eq!(
            psd_powerlaw(0.25_f64, -2.0, 1.0, 1.0).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            psd_ggm(0.0_f64, -2.0, 0.9, 1.0, 1.0).unwrap(),
            200.0,
            max_relative = 1e-10
        );
        assert_relative_eq!(psd_ggm(0.3_f64, 0.0, 0.4, 1.0, 1.0).unwrap(), 2.0);
        assert!(matches!(
            psd_powerlaw(0.0_f64, -1.0, 1.0, 1.0),
            Err(Error::Singularity(_))
        ));
        assert!(matches!(
            psd_ggm(0.0_f64, -1.0, 1.0, 1.0, 1.0),
            Err(Error::Singularity(_))
        ));
        assert!(psd_powerlaw(0.6_f64, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn low_frequency_power_law_limit() {
        // P0 (f/fs)^kappa with P0 = (2 sigma^2/fs) (2 pi)^kappa
        let (fs, kappa, sigma) = (1.0_f64, -1.0, 1.0);
        let f = fs / 1000.0;
        let exact = psd_powerlaw(f, kappa, sigma, fs).unwrap();
        let p0 = 2.0 * sigma * sigma / fs * std::f64::consts::TAU.powf(kappa);
        let approx = p0 * (f / fs).powf(kappa);
        assert!(((exact - approx) / exact).abs() < 1e-5);
    }

    #[test]
    fn ggm_psd_matches_power_law_at_unit_phi() {
        for &kappa in &[-2.0_f64, -1.3, -0.5, 0.0, 0.7] {
            for k in 1..50 {
                let f = k as f64 / 100.0;
                let a = psd_ggm(f, kappa, 1.0, 0.7, 1.0).unwrap();
                let b = psd_powerlaw(f, kappa, 0.7, 1.0).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn stationarity_flags() {
        assert!(NoiseFilter::<f64>::Flicker.is_stationary());
        assert!(!NoiseFilter::<f64>::RandomWalk.is_stationary());
        assert!(NoiseFilter::Ggm { kappa: -2.0_f64, phi: 0.9 }.is_stationary());
        assert!(NoiseFilter::<f64>::White.is_white());
        assert_eq!(NoiseFilter::<f64>::RandomWalk.kappa(), -2.0);
    }

    #[test]
    fn single_precision() {
        let c = pl_filter_coeffs(-1.0_f32, 4).unwrap();
        assert_eq!(c.h, vec![1.0_f32, 0.5, 0.375, 0.3125]);
    }
}

//! One-sided power spectral density estimates and log-log slope fits.
//!
//! Normalisation: for a series of length `N` sampled at `fs`,
//!
//! ```text
//! S_0     = |Y_0|^2 / (fs N)
//! S_k     = 2 |Y_k|^2 / (fs N)      0 < k < N/2
//! S_{N/2} = |Y_{N/2}|^2 / (fs N)    N even
//! ```
//!
//! so that the mean square of the series equals `(fs / N) sum_k S_k`. For odd
//! `N` there is no Nyquist bin and every bin past DC is doubled.

use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fewest usable bins for a slope fit.
pub const MIN_FIT_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn weights<T: Real>(self, n: usize) -> Vec<T> {
        match self {
            Window::Rectangular => vec![T::one(); n],
            Window::Hann => (0..n)
                .map(|i| {
                    let x = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n);
                    T::lit(0.5) * (T::one() - x.cos())
                })
                .collect(),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        })
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" | "boxcar" | "none" => Ok(Window::Rectangular),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(Error::Specification(format!("unknown window '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumMethod<T> {
    Raw,
    Welch {
        segments: usize,
        segment_length: usize,
        overlap: T,
        window: Window,
    },
}

impl<T: Real> fmt::Display for SpectrumMethod<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumMethod::Raw => f.write_str("raw"),
            SpectrumMethod::Welch { .. } => f.write_str("welch"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram<T> {
    pub freqs: Vec<T>,
    pub power: Vec<T>,
    pub fs: T,
    pub method: SpectrumMethod<T>,
}

impl<T: Real> Periodogram<T> {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Spacing of the frequency grid.
    pub fn resolution(&self) -> T {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            self.fs
        }
    }
}

/// Discrete Fourier transform `Y_k = sum_n y_n exp(-2 pi i k n / N)`.
pub fn dft<T: Real>(values: &[T]) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse of [`dft`], including the `1/N` factor.
pub fn inverse_dft<T: Real>(coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = coeffs.to_vec();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let n = T::from_usize_lossy(buf.len());
    buf.iter_mut().for_each(|c| *c = *c / n);
    buf
}

fn one_sided<T: Real>(coeffs: &[Complex<T>], fs: T, norm: T) -> (Vec<T>, Vec<T>) {
    let n = coeffs.len();
    let half = n / 2;
    let two = T::lit(2.0);
    let nf = T::from_usize_lossy(n);
    let mut freqs = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in coeffs.iter().enumerate().take(half + 1) {
        freqs.push(T::from_usize_lossy(k) * fs / nf);
        let p = c.norm_sqr() / (fs * norm);
        let doubled = k != 0 && !(n % 2 == 0 && k == half);
        power.push(if doubled { two * p } else { p });
    }
    (freqs, power)
}

/// Raw one-sided periodogram.
pub fn periodogram<T: Real>(values: &[T], fs: T) -> Result<Periodogram<T>> {
    if values.len() < 2 {
        return Err(Error::Domain(format!(
            "periodogram needs at least 2 samples, got {}",
            values.len()
        )));
    }
    if !(fs > T::zero()) {
        return Err(Error::Domain(format!("sampling frequency {fs} must be positive")));
    }
    let (freqs, power) = one_sided(&dft(values), fs, T::from_usize_lossy(values.len()));
    Ok(Periodogram {
        freqs,
        power,
        fs,
        method: SpectrumMethod::Raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchOptions<T> {
    pub segment_length: usize,
    /// Fraction of a segment shared with the next one, in `[0, 1)`.
    pub overlap: T,
    pub window: Window,
}

impl<T: Real> WelchOptions<T> {
    /// Segment length giving `segments` segments over `n` samples.
    pub fn from_segments(n: usize, segments: usize, overlap: T, window: Window) -> Result<Self> {
        if segments == 0 {
            return Err(Error::Domain("at least one segment required".into()));
        }
        check_overlap(overlap)?;
        // n = L + (K - 1) L (1 - overlap)
        let denom = T::one() + T::from_usize_lossy(segments - 1) * (T::one() - overlap);
        let mut len = (T::from_usize_lossy(n) / denom).floor().to_usize().unwrap_or(0);
        while len > 1 && segment_count(n, len, overlap) < segments {
            len -= 1;
        }
        if len < 2 {
            return Err(Error::Domain(format!("{n} samples too short for {segments} segments")));
        }
        Ok(WelchOptions {
            segment_length: len,
            overlap,
            window,
        })
    }

    /// Four Hann segments with half overlap.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::from_segments(n, 4, T::lit(0.5), Window::Hann)
    }
}

fn check_overlap<T: Real>(overlap: T) -> Result<()> {
    if !(overlap >= T::zero() && overlap < T::one()) {
        return Err(Error::Domain(format!("overlap {overlap} outside [0, 1)")));
    }
    Ok(())
}

fn segment_step<T: Real>(len: usize, overlap: T) -> usize {
    let shared = (T::from_usize_lossy(len) * overlap).round().to_usize().unwrap_or(0);
    len.saturating_sub(shared).max(1)
}

fn segment_count<T: Real>(n: usize, len: usize, overlap: T) -> usize {
    if len > n || len == 0 {
        return 0;
    }
    (n - len) / segment_step(len, overlap) + 1
}

/// Welch average of windowed segment periodograms.
pub fn welch<T: Real>(values: &[T], fs: T, opts: &WelchOptions<T>) -> Result<Periodogram<T>> {
    let n = values.len();
    let len = opts.segment_length;
    if len < 2 {
        return Err(Error::Domain(format!("segment length {len} below 2")));
    }
    if len > n {
        return Err(Error::Domain(format!("segment length {len} exceeds series length {n}")));
    }
    if !(fs > T::zero()) {
        return Err(Error::Domain(format!("sampling frequency {fs} must be positive")));
    }
    check_overlap(opts.overlap)?;
    let w: Vec<T> = opts.window.weights(len);
    let norm: T = w.iter().map(|&x| x * x).sum();
    let step = segment_step(len, opts.overlap);
    let segments = segment_count(n, len, opts.overlap);

    let fft = FftPlanner::new().plan_fft_forward(len);
    let mut acc = vec![T::zero(); len / 2 + 1];
    let mut freqs = Vec::new();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for s in 0..segments {
        let seg = &values[s * step..s * step + len];
        for ((b, &y), &wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex::new(y * wi, T::zero());
        }
        fft.process(&mut buf);
        let (f, p) = one_sided(&buf, fs, norm);
        freqs = f;
        for (a, pi) in acc.iter_mut().zip(p) {
            *a += pi;
        }
    }
    let k = T::from_usize_lossy(segments);
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(Periodogram {
        freqs,
        power: acc,
        fs,
        method: SpectrumMethod::Welch {
            segments,
            segment_length: len,
            overlap: opts.overlap,
            window: opts.window,
        },
    })
}

/// Straight line `ln S = ln P0 + kappa ln(f / fs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<T> {
    pub p0: T,
    pub kappa: T,
    pub used_bins: usize,
    /// Positive-frequency bins skipped for non-positive power.
    pub dropped_bins: usize,
}

/// Least-squares line through the log-log spectrum, DC excluded.
pub fn fit_power_law_psd<T: Real>(pg: &Periodogram<T>) -> Result<PowerLawFit<T>> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0;
    for (&f, &s) in pg.freqs.iter().zip(&pg.power) {
        if !(f > T::zero()) {
            continue;
        }
        if s > T::zero() && s.is_finite() {
            xs.push((f / pg.fs).ln());
            ys.push(s.ln());
        } else {
            dropped += 1;
        }
    }
    if xs.len() < MIN_FIT_BINS {
        return Err(Error::Domain(format!(
            "{} usable spectral bins, need {MIN_FIT_BINS}",
            xs.len()
        )));
    }
    let m = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / m;
    let my = ys.iter().copied().sum::<T>() / m;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let kappa = sxy / sxx;
    Ok(PowerLawFit {
        p0: (my - kappa * mx).exp(),
        kappa,
        used_bins: xs.len(),
        dropped_bins: dropped,
    })
}

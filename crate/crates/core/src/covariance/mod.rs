//! Covariance matrices of the noise models, their Cholesky factors and a
//! Toeplitz fast path.
//!
//! With white noise `v_i = 0` before the first observation, filtered noise
//! has the unit covariance
//!
//! ```text
//! C(k, l) = sum_{i=0..=k} h[i] h[i + l - k],   l >= k
//! ```
//!
//! which is the product `U^T U` of the upper-triangular Toeplitz matrix of
//! taps. Matrices are stored as their packed upper triangle.

mod cholesky;
mod toeplitz;

pub use cholesky::{cholesky, CholeskyFactor, PIVOT_TOLERANCE};
pub use toeplitz::{
    toeplitz_ln_det, toeplitz_solve, toeplitz_solve_many, ToeplitzSolution,
    CONDITIONING_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::noise_kernel::NoiseFilter;
use crate::noise_model::NoiseModelSpec;
use crate::scalar::Real;

/// Which linear-algebra path evaluates the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Exact covariance, dense Cholesky, O(N^3).
    #[default]
    Dense,
    /// Stationary Toeplitz approximation, Levinson recursion, O(N^2).
    Toeplitz,
}

#[inline]
pub(crate) fn packed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// Symmetric positive definite covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T> {
    dim: usize,
    upper: Vec<T>,
    first_row: Option<Vec<T>>,
}

impl<T: Real> CovarianceMatrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut first_row = vec![T::zero(); n];
        if n > 0 {
            first_row[0] = T::one();
        }
        Self::toeplitz_unchecked(first_row)
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            for j in i..n {
                let (a, b) = (row[j], rows[j][i]);
                let scale = a.abs().max(b.abs()).max(T::min_positive_value());
                if (a - b).abs() > T::lit(1e-12) * scale {
                    return Err(Error::Specification(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
                upper.push(a);
            }
        }
        Ok(CovarianceMatrix {
            dim: n,
            upper,
            first_row: None,
        })
    }

    /// Symmetric Toeplitz matrix with the given first row.
    pub fn from_toeplitz(first_row: Vec<T>) -> Result<Self> {
        if first_row.is_empty() {
            return Err(Error::EmptyRequest("empty Toeplitz first row"));
        }
        Ok(Self::toeplitz_unchecked(first_row))
    }

    fn toeplitz_unchecked(first_row: Vec<T>) -> Self {
        let n = first_row.len();
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            upper.extend_from_slice(&first_row[..n - i]);
        }
        CovarianceMatrix {
            dim: n,
            upper,
            first_row: Some(first_row),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.upper[packed_index(self.dim, i, j)]
    }

    pub fn packed_upper(&self) -> &[T] {
        &self.upper
    }

    /// First row when the matrix is Toeplitz.
    pub fn first_row(&self) -> Option<&[T]> {
        self.first_row.as_deref()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn scaled(mut self, factor: T) -> Self {
        self.upper.iter_mut().for_each(|v| *v *= factor);
        if let Some(row) = self.first_row.as_mut() {
            row.iter_mut().for_each(|v| *v *= factor);
        }
        self
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        let upper = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        let first_row = match (&self.first_row, &other.first_row) {
            (Some(r), Some(s)) => Some(r.iter().zip(s).map(|(&x, &y)| a * x + b * y).collect()),
            _ => None,
        };
        Ok(CovarianceMatrix {
            dim: self.dim,
            upper,
            first_row,
        })
    }
}

/// Exact unit-amplitude covariance `J` of filtered noise over `n` epochs.
pub fn unit_covariance<T: Real>(filter: &NoiseFilter<T>, n: usize) -> Result<CovarianceMatrix<T>> {
    if n == 0 {
        return Err(Error::EmptyRequest("zero-dimension covariance"));
    }
    if filter.is_white() {
        filter.validate()?;
        return Ok(CovarianceMatrix::identity(n));
    }
    let h = filter.coefficients(n)?.h;
    // C(k, l) = C(k-1, l-1) + h[k] h[l]
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    upper.extend_from_slice(&h);
    let mut prev_start = 0;
    for k in 1..n {
        let hk = h[k];
        let start = upper.len();
        for j in 0..(n - k) {
            let v = upper[prev_start + j] + hk * h[k + j];
            upper.push(v);
        }
        prev_start = start;
    }
    Ok(CovarianceMatrix {
        dim: n,
        upper,
        first_row: None,
    })
}

/// Assembles the covariance matrix of `spec` over `n` epochs.
pub fn build_covariance<T: Real>(spec: &NoiseModelSpec<T>, n: usize) -> Result<CovarianceMatrix<T>> {
    spec.validate()?;
    match *spec {
        NoiseModelSpec::Single(c) => {
            Ok(unit_covariance(&c.filter, n)?.scaled(c.sigma * c.sigma))
        }
        NoiseModelSpec::Sum(a, b) => {
            let ja = unit_covariance(&a.filter, n)?;
            let jb = unit_covariance(&b.filter, n)?;
            ja.combine(a.sigma * a.sigma, &jb, b.sigma * b.sigma)
        }
        NoiseModelSpec::Mixed {
            filter,
            sigma,
            phi_mix,
        } => {
            let j = unit_covariance(&filter, n)?;
            let mixed = j.combine(phi_mix, &CovarianceMatrix::identity(n), T::one() - phi_mix)?;
            Ok(mixed.scaled(sigma * sigma))
        }
    }
}

/// First row of the stationary Toeplitz approximation of the unit covariance.
///
/// The filter is truncated to `2n` taps and treated as a moving average that
/// has been running long before the first epoch, so the autocovariance
/// `gamma(l) = sum_i h[i] h[i + l]` is a valid (positive definite) Toeplitz
/// row. For GGM noise with `phi < 1` this converges to the exact stationary
/// covariance; for power-law noise it is an approximation whose level grows
/// with `n`.
pub fn stationary_first_row<T: Real>(filter: &NoiseFilter<T>, n: usize) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::EmptyRequest("zero-dimension covariance"));
    }
    if filter.is_white() {
        filter.validate()?;
        return Ok(CovarianceMatrix::<T>::identity(n).first_row.unwrap());
    }
    let taps = 2 * n;
    let h = filter.coefficients(taps)?.h;
    Ok((0..n)
        .map(|lag| {
            h[..taps - lag]
                .iter()
                .zip(&h[lag..])
                .map(|(&a, &b)| a * b)
                .sum()
        })
        .collect())
}

/// Stationary Toeplitz approximation of the covariance of `spec`.
pub fn build_toeplitz_covariance<T: Real>(spec: &NoiseModelSpec<T>, n: usize) -> Result<Vec<T>> {
    spec.validate()?;
    match *spec {
        NoiseModelSpec::Single(c) => {
            let s2 = c.sigma * c.sigma;
            Ok(stationary_first_row(&c.filter, n)?
                .into_iter()
                .map(|v| v * s2)
                .collect())
        }
        NoiseModelSpec::Sum(a, b) => {
            let ra = stationary_first_row(&a.filter, n)?;
            let rb = stationary_first_row(&b.filter, n)?;
            let (sa, sb) = (a.sigma * a.sigma, b.sigma * b.sigma);
            Ok(ra.iter().zip(&rb).map(|(&x, &y)| sa * x + sb * y).collect())
        }
        NoiseModelSpec::Mixed {
            filter,
            sigma,
            phi_mix,
        } => {
            let mut row: Vec<T> = stationary_first_row(&filter, n)?
                .into_iter()
                .map(|v| v * phi_mix)
                .collect();
            row[0] += T::one() - phi_mix;
            let s2 = sigma * sigma;
            row.iter_mut().for_each(|v| *v *= s2);
            Ok(row)
        }
    }
}

/// Lag-`lag` sample autocovariance `1/(N-lag) sum w_i w_{i+lag}` of a
/// residual series. Diagnostic only: it poorly constrains long-period noise.
pub fn sample_autocovariance<T: Real>(w: &[T], lag: usize) -> Option<T> {
    if lag >= w.len() {
        return None;
    }
    let m = w.len() - lag;
    let s: T = w[..m].iter().zip(&w[lag..]).map(|(&a, &b)| a * b).sum();
    Some(s / T::from_usize_lossy(m))
}

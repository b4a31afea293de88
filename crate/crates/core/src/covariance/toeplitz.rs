//! O(N^2) solver for symmetric positive definite Toeplitz systems.
//!
//! The Levinson recursion grows the solution one order at a time. Alongside
//! it runs the Durbin recursion for the order-k linear predictor `a`, whose
//! prediction-error variances `E_k` are the pivots of the matrix: their
//! product is the determinant, so the log-determinant comes for free.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Prediction-error variances below this fraction of `t[0]` are treated as
/// numerically singular.
pub const CONDITIONING_TOLERANCE: f64 = 1e-12;

/// Solutions of `T X = B` for several right-hand sides plus `ln det T`.
#[derive(Debug, Clone)]
pub struct ToeplitzSolution<T> {
    pub solutions: Vec<Vec<T>>,
    pub ln_det: T,
}

/// Solves `T x = rhs` where `T` is the symmetric Toeplitz matrix with the
/// given first row.
pub fn toeplitz_solve<T: Real>(first_row: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let mut out = toeplitz_solve_many(first_row, std::slice::from_ref(&rhs.to_vec()))?;
    Ok(out.solutions.pop().expect("one right-hand side"))
}

/// Log-determinant of the symmetric Toeplitz matrix with the given first row.
pub fn toeplitz_ln_det<T: Real>(first_row: &[T]) -> Result<T> {
    Ok(toeplitz_solve_many(first_row, &[])?.ln_det)
}

/// Solves `T x_j = b_j` for every right-hand side in one sweep; the
/// predictor recursion is shared between them.
pub fn toeplitz_solve_many<T: Real>(
    first_row: &[T],
    rhs: &[Vec<T>],
) -> Result<ToeplitzSolution<T>> {
    let n = first_row.len();
    if n == 0 {
        return Err(Error::EmptyRequest("empty Toeplitz system"));
    }
    for b in rhs {
        if b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: b.len(),
            });
        }
    }
    let t = first_row;
    let t0 = t[0];
    if !(t0 > T::zero()) || !t0.is_finite() {
        return Err(Error::Conditioning { order: 0 });
    }
    let floor = T::lit(CONDITIONING_TOLERANCE) * t0;

    // predictor a[0..k] holds a_1..a_k
    let mut a: Vec<T> = Vec::with_capacity(n);
    let mut scratch: Vec<T> = Vec::with_capacity(n);
    let mut err = t0;
    let mut ln_det = t0.ln();

    let mut xs: Vec<Vec<T>> = rhs
        .iter()
        .map(|b| {
            let mut x = vec![T::zero(); n];
            x[0] = b[0] / t0;
            x
        })
        .collect();

    for k in 1..n {
        // Durbin: extend the predictor from order k-1 to order k
        let mut acc = t[k];
        for (j, &aj) in a.iter().enumerate() {
            acc -= aj * t[k - 1 - j];
        }
        let reflection = acc / err;
        scratch.clear();
        scratch.extend(
            a.iter()
                .zip(a.iter().rev())
                .map(|(&fwd, &bwd)| fwd - reflection * bwd),
        );
        std::mem::swap(&mut a, &mut scratch);
        a.push(reflection);
        err *= T::one() - reflection * reflection;
        if !(err > floor) || !err.is_finite() {
            return Err(Error::Conditioning { order: k });
        }
        ln_det += err.ln();

        // Levinson: extend each solution from size k to size k+1 using the
        // backward predictor [-a_k, ..., -a_1, 1] / E_k.
        for (x, b) in xs.iter_mut().zip(rhs) {
            let mut mu = b[k];
            for (j, &xj) in x[..k].iter().enumerate() {
                mu -= t[k - j] * xj;
            }
            let scale = mu / err;
            for (xj, &aj) in x[..k].iter_mut().zip(a.iter().rev()) {
                *xj -= scale * aj;
            }
            x[k] = scale;
        }
    }

    Ok(ToeplitzSolution {
        solutions: xs,
        ln_det,
    })
}

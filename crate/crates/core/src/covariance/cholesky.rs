use crate::covariance::{packed_index, CovarianceMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pivots below this fraction of the largest diagonal entry are rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Upper-triangular factor `U` with `C = U^T U`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor<T> {
    dim: usize,
    /// Row-major packed upper triangle.
    upper: Vec<T>,
    ln_det: T,
}

impl<T: Real> CholeskyFactor<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ln det C = 2 sum ln U[i][i]`.
    pub fn ln_det(&self) -> T {
        self.ln_det
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if j < i {
            T::zero()
        } else {
            self.upper[packed_index(self.dim, i, j)]
        }
    }

    fn row(&self, i: usize) -> &[T] {
        let start = packed_index(self.dim, i, i);
        &self.upper[start..start + self.dim - i]
    }

    /// Solves `U^T z = b` in place. Applied to observations this is the
    /// whitening transform: `z` has identity covariance when `b ~ N(0, C)`.
    pub fn whiten_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.dim, "whitening dimension mismatch");
        for k in 0..self.dim {
            let row = self.row(k);
            let zk = b[k] / row[0];
            b[k] = zk;
            for (bi, &u) in b[k + 1..].iter_mut().zip(&row[1..]) {
                *bi -= u * zk;
            }
        }
    }

    pub fn whiten(&self, b: &[T]) -> Vec<T> {
        let mut z = b.to_vec();
        self.whiten_in_place(&mut z);
        z
    }

    /// Solves `U x = z` in place.
    pub fn back_substitute_in_place(&self, z: &mut [T]) {
        assert_eq!(z.len(), self.dim, "substitution dimension mismatch");
        for i in (0..self.dim).rev() {
            let row = self.row(i);
            let mut acc = z[i];
            for (&u, &x) in row[1..].iter().zip(&z[i + 1..]) {
                acc -= u * x;
            }
            z[i] = acc / row[0];
        }
    }

    /// Solves `C x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = self.whiten(b);
        self.back_substitute_in_place(&mut x);
        x
    }

    /// `b^T C^{-1} b`, evaluated as the squared norm of the whitened vector.
    pub fn quadratic_form(&self, b: &[T]) -> T {
        self.whiten(b).iter().map(|&z| z * z).sum()
    }

    /// `U^T U` as a dense row-major matrix.
    pub fn reconstruct(&self) -> Vec<Vec<T>> {
        let n = self.dim;
        let mut out = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut acc = T::zero();
                for k in 0..=i {
                    acc += self.get(k, i) * self.get(k, j);
                }
                out[i][j] = acc;
                out[j][i] = acc;
            }
        }
        out
    }
}

/// Factors a symmetric positive definite covariance as `C = U^T U`.
pub fn cholesky<T: Real>(c: &CovarianceMatrix<T>) -> Result<CholeskyFactor<T>> {
    let n = c.dim();
    let mut a = c.packed_upper().to_vec();
    let max_diag = (0..n)
        .map(|i| a[packed_index(n, i, i)])
        .fold(T::zero(), T::max);
    let floor = T::lit(PIVOT_TOLERANCE) * max_diag;
    let mut ln_det = T::zero();

    let mut start_k = 0;
    for k in 0..n {
        let len_k = n - k;
        let d = a[start_k];
        if !(d > floor) || !d.is_finite() {
            return Err(Error::Factorization { pivot: k });
        }
        let s = d.sqrt();
        ln_det += T::lit(2.0) * s.ln();
        for v in &mut a[start_k..start_k + len_k] {
            *v /= s;
        }
        // rank-1 update of the trailing rows
        let (head, tail) = a.split_at_mut(start_k + len_k);
        let row_k = &head[start_k..];
        let mut start_i = 0;
        for i in (k + 1)..n {
            let len_i = n - i;
            let f = row_k[i - k];
            if f != T::zero() {
                let target = &mut tail[start_i..start_i + len_i];
                for (t, &r) in target.iter_mut().zip(&row_k[i - k..]) {
                    *t -= f * r;
                }
            }
            start_i += len_i;
        }
        start_k += len_k;
    }
    Ok(CholeskyFactor {
        dim: n,
        upper: a,
        ln_det,
    })
}

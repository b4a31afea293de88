//! Small dense helpers for the M x M normal equations.

use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn scaled(&self, f: T) -> Self {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| v * f).collect(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n).map(<[T]>::to_vec).collect()
    }
}

/// Lower Cholesky factor `L` (row-major) of a symmetric positive definite
/// matrix. On failure returns the index of the offending pivot.
///
/// Pivots are compared against `tol` times the original diagonal entry, which
/// makes the test insensitive to column scaling.
pub fn cholesky_lower<T: Real>(a: &SquareMatrix<T>, tol: T) -> Result<SquareMatrix<T>, usize> {
    let n = a.n;
    let mut l = SquareMatrix::zeros(n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > tol * a.get(j, j)) || !d.is_finite() {
            return Err(j);
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b`.
pub fn cholesky_solve<T: Real>(l: &SquareMatrix<T>, b: &[T]) -> Vec<T> {
    let n = l.n;
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    y
}

/// `(L L^T)^{-1}`, symmetrised.
pub fn cholesky_inverse<T: Real>(l: &SquareMatrix<T>) -> SquareMatrix<T> {
    let n = l.n;
    let mut inv = SquareMatrix::zeros(n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (inv.get(i, j) + inv.get(j, i)) / T::lit(2.0);
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    inv
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_spd() {
        let a = SquareMatrix {
            n: 2,
            data: vec![4.0_f64, 2.0, 2.0, 3.0],
        };
        let l = cholesky_lower(&a, 1e-12).unwrap();
        let inv = cholesky_inverse(&l);
        // det = 8
        let expected = [3.0 / 8.0, -2.0 / 8.0, -2.0 / 8.0, 4.0 / 8.0];
        for (a, b) in inv.data.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_reports_pivot() {
        let a = SquareMatrix {
            n: 2,
            data: vec![1.0_f64, 1.0, 1.0, 1.0],
        };
        assert_eq!(cholesky_lower(&a, 1e-10), Err(1));
    }
}

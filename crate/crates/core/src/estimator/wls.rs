use crate::covariance::{toeplitz_solve_many, CholeskyFactor};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_inverse, cholesky_lower, cholesky_solve, dot, SquareMatrix};
use crate::scalar::Real;
use crate::trajectory::{collinear_group, DesignMatrix};

const GRAM_TOLERANCE: f64 = 1e-10;

/// Weighted least-squares estimate and its covariance `(A^T C^-1 A)^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsSolution<T> {
    pub x: Vec<T>,
    pub covariance: SquareMatrix<T>,
}

/// Everything the likelihood needs from one generalised least-squares solve.
#[derive(Debug, Clone)]
pub(crate) struct GlsEvaluation<T> {
    pub solution: WlsSolution<T>,
    pub residuals: Vec<T>,
    /// `r^T C^-1 r`
    pub quad: T,
    pub ln_det: T,
}

fn check_dims<T: Real>(a: &DesignMatrix<T>, n: usize, y: &[T]) -> Result<()> {
    if a.rows() != n {
        return Err(Error::Dimension {
            expected: n,
            found: a.rows(),
        });
    }
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: y.len(),
        });
    }
    Ok(())
}

fn solve_normal<T: Real>(a: &DesignMatrix<T>, gram: &SquareMatrix<T>, rhs: &[T]) -> Result<WlsSolution<T>> {
    let l = cholesky_lower(gram, T::lit(GRAM_TOLERANCE)).map_err(|pivot| Error::Collinearity {
        columns: collinear_group(a.labels(), pivot),
    })?;
    Ok(WlsSolution {
        x: cholesky_solve(&l, rhs),
        covariance: cholesky_inverse(&l),
    })
}

/// `x = (A^T C^-1 A)^-1 A^T C^-1 y` by whitening: `B = U^-T A`, `z = U^-T y`,
/// then ordinary least squares on `(B, z)`.
pub fn wls_fit<T: Real>(a: &DesignMatrix<T>, chol: &CholeskyFactor<T>, y: &[T]) -> Result<WlsSolution<T>> {
    Ok(gls_dense(a, chol, y)?.solution)
}

pub(crate) fn gls_dense<T: Real>(
    a: &DesignMatrix<T>,
    chol: &CholeskyFactor<T>,
    y: &[T],
) -> Result<GlsEvaluation<T>> {
    check_dims(a, chol.dim(), y)?;
    let m = a.cols();
    let b: Vec<Vec<T>> = (0..m).map(|j| chol.whiten(a.column(j))).collect();
    let z = chol.whiten(y);
    let mut gram = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let v = dot(&b[i], &b[j]);
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    let rhs: Vec<T> = b.iter().map(|bj| dot(bj, &z)).collect();
    let solution = solve_normal(a, &gram, &rhs)?;

    let mut white_resid = z;
    for (bj, &xj) in b.iter().zip(&solution.x) {
        for (r, &v) in white_resid.iter_mut().zip(bj) {
            *r -= v * xj;
        }
    }
    let quad = dot(&white_resid, &white_resid);
    let fitted = a.apply(&solution.x);
    let residuals = y.iter().zip(&fitted).map(|(&o, &f)| o - f).collect();
    Ok(GlsEvaluation {
        solution,
        residuals,
        quad,
        ln_det: chol.ln_det(),
    })
}

/// Same estimate with `C` the symmetric Toeplitz matrix of `first_row`,
/// solved by the Levinson recursion.
pub(crate) fn gls_toeplitz<T: Real>(
    a: &DesignMatrix<T>,
    first_row: &[T],
    y: &[T],
) -> Result<GlsEvaluation<T>> {
    check_dims(a, first_row.len(), y)?;
    let m = a.cols();
    let mut rhs: Vec<Vec<T>> = (0..m).map(|j| a.column(j).to_vec()).collect();
    rhs.push(y.to_vec());
    let solved = toeplitz_solve_many(first_row, &rhs)?;
    let (cinv_a, cinv_y) = solved.solutions.split_at(m);
    let cinv_y = &cinv_y[0];

    let mut gram = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let v = dot(a.column(i), &cinv_a[j]);
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    let g: Vec<T> = (0..m).map(|j| dot(a.column(j), cinv_y)).collect();
    let solution = solve_normal(a, &gram, &g)?;

    let fitted = a.apply(&solution.x);
    let residuals: Vec<T> = y.iter().zip(&fitted).map(|(&o, &f)| o - f).collect();
    let mut cinv_r = cinv_y.clone();
    for (col, &xj) in cinv_a.iter().zip(&solution.x) {
        for (v, &c) in cinv_r.iter_mut().zip(col) {
            *v -= c * xj;
        }
    }
    let quad = dot(&residuals, &cinv_r);
    Ok(GlsEvaluation {
        solution,
        residuals,
        quad,
        ln_det: solved.ln_det,
    })
}

/// `ln L = -1/2 [N ln 2 pi + ln det C + r^T C^-1 r]`
pub fn log_likelihood<T: Real>(chol: &CholeskyFactor<T>, residuals: &[T]) -> Result<T> {
    if residuals.len() != chol.dim() {
        return Err(Error::Dimension {
            expected: chol.dim(),
            found: residuals.len(),
        });
    }
    Ok(gaussian_log_likelihood(
        residuals.len(),
        chol.ln_det(),
        chol.quadratic_form(residuals),
    ))
}

pub(crate) fn gaussian_log_likelihood<T: Real>(n: usize, ln_det: T, quad: T) -> T {
    let n = T::from_usize_lossy(n);
    -(n * T::TAU().ln() + ln_det + quad) / T::lit(2.0)
}

/// Log-likelihood with the amplitude of `C = sigma^2 K` profiled out:
/// `sigma^2 = r^T K^-1 r / N` substituted back.
pub(crate) fn profiled_log_likelihood<T: Real>(n: usize, ln_det_unit: T, quad_unit: T) -> T {
    let nf = T::from_usize_lossy(n);
    let sigma2 = quad_unit / nf;
    -(nf * T::TAU().ln() + ln_det_unit + nf * sigma2.ln() + nf) / T::lit(2.0)
}

/// `sigma = sqrt(r^T C^-1 r / N)` for a unit-amplitude covariance `C`.
pub fn sigma_from_residuals<T: Real>(chol: &CholeskyFactor<T>, residuals: &[T]) -> Result<T> {
    if residuals.is_empty() {
        return Err(Error::EmptyRequest("no residuals"));
    }
    if residuals.len() != chol.dim() {
        return Err(Error::Dimension {
            expected: chol.dim(),
            found: residuals.len(),
        });
    }
    Ok((chol.quadratic_form(residuals) / T::from_usize_lossy(residuals.len())).sqrt())
}

//! Linear trajectory models and their design matrices.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, SquareMatrix};
use crate::scalar::Real;

/// Relative pivot tolerance of the column-rank check.
const RANK_TOLERANCE: f64 = 1e-10;

/// One basis function family of a trajectory model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisTerm<T> {
    /// Columns `(t - t_ref)^0 ... (t - t_ref)^degree`.
    Polynomial { degree: usize },
    /// Columns `cos(omega (t - t_ref))` and `sin(omega (t - t_ref))`;
    /// `omega` in radians per time unit.
    Periodic { omega: T },
    /// Heaviside step: 0 before `epoch`, 1 from `epoch` onward.
    Offset { epoch: T },
}

impl<T: Real> BasisTerm<T> {
    pub fn columns(&self) -> usize {
        match self {
            BasisTerm::Polynomial { degree } => degree + 1,
            BasisTerm::Periodic { .. } => 2,
            BasisTerm::Offset { .. } => 1,
        }
    }

    /// Periodic term with the given period, in the time unit of the epochs.
    pub fn periodic_with_period(period: T) -> Self {
        BasisTerm::Periodic {
            omega: T::TAU() / period,
        }
    }
}

/// Label of a design-matrix column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnLabel<T> {
    Power(usize),
    Cos { omega: T },
    Sin { omega: T },
    Offset { epoch: T },
}

impl<T: Real> fmt::Display for ColumnLabel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::Power(0) => write!(f, "intercept"),
            ColumnLabel::Power(1) => write!(f, "trend"),
            ColumnLabel::Power(d) => write!(f, "poly{d}"),
            ColumnLabel::Cos { omega } => write!(f, "cos(period={})", T::TAU() / *omega),
            ColumnLabel::Sin { omega } => write!(f, "sin(period={})", T::TAU() / *omega),
            ColumnLabel::Offset { epoch } => write!(f, "offset@{epoch}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryModelSpec<T> {
    pub terms: Vec<BasisTerm<T>>,
    pub reference_epoch: T,
}

impl<T: Real> TrajectoryModelSpec<T> {
    pub fn new(terms: Vec<BasisTerm<T>>, reference_epoch: T) -> Self {
        TrajectoryModelSpec {
            terms,
            reference_epoch,
        }
    }

    /// Intercept and trend.
    pub fn linear(reference_epoch: T) -> Self {
        Self::new(vec![BasisTerm::Polynomial { degree: 1 }], reference_epoch)
    }

    /// Intercept, trend, annual and semi-annual terms (time in years).
    pub fn linear_seasonal(reference_epoch: T) -> Self {
        Self::new(
            vec![
                BasisTerm::Polynomial { degree: 1 },
                BasisTerm::periodic_with_period(T::one()),
                BasisTerm::periodic_with_period(T::lit(0.5)),
            ],
            reference_epoch,
        )
    }

    pub fn with_term(mut self, term: BasisTerm<T>) -> Self {
        self.terms.push(term);
        self
    }

    pub fn num_columns(&self) -> usize {
        self.terms.iter().map(BasisTerm::columns).sum()
    }

    pub fn labels(&self) -> Vec<ColumnLabel<T>> {
        let mut labels = Vec::with_capacity(self.num_columns());
        for term in &self.terms {
            match *term {
                BasisTerm::Polynomial { degree } => {
                    labels.extend((0..=degree).map(ColumnLabel::Power));
                }
                BasisTerm::Periodic { omega } => {
                    labels.push(ColumnLabel::Cos { omega });
                    labels.push(ColumnLabel::Sin { omega });
                }
                BasisTerm::Offset { epoch } => labels.push(ColumnLabel::Offset { epoch }),
            }
        }
        labels
    }

    /// Rejects duplicated terms.
    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Specification("trajectory model has no terms".into()));
        }
        let polys = self
            .terms
            .iter()
            .filter(|t| matches!(t, BasisTerm::Polynomial { .. }))
            .count();
        if polys > 1 {
            return Err(Error::Specification(
                "more than one polynomial term (duplicate intercept/trend)".into(),
            ));
        }
        for (i, a) in self.terms.iter().enumerate() {
            for b in &self.terms[i + 1..] {
                match (a, b) {
                    (BasisTerm::Periodic { omega: x }, BasisTerm::Periodic { omega: y })
                        if x == y =>
                    {
                        return Err(Error::Specification(format!(
                            "duplicate periodic term with omega {x}"
                        )));
                    }
                    (BasisTerm::Offset { epoch: x }, BasisTerm::Offset { epoch: y }) if x == y => {
                        return Err(Error::Specification(format!(
                            "duplicate offset at epoch {x}"
                        )));
                    }
                    _ => {}
                }
            }
            match *a {
                BasisTerm::Periodic { omega } if !(omega > T::zero() && omega.is_finite()) => {
                    return Err(Error::Specification(format!(
                        "periodic term needs a positive angular frequency, got {omega}"
                    )));
                }
                BasisTerm::Offset { epoch } if !epoch.is_finite() => {
                    return Err(Error::Specification("offset epoch must be finite".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Model values `A x` at the given epochs.
    pub fn evaluate(&self, coefficients: &[T], epochs: &[T]) -> Result<Vec<T>> {
        if coefficients.len() != self.num_columns() {
            return Err(Error::Dimension {
                expected: self.num_columns(),
                found: coefficients.len(),
            });
        }
        Ok(epochs
            .iter()
            .map(|&t| {
                self.row(t)
                    .iter()
                    .zip(coefficients)
                    .map(|(&a, &x)| a * x)
                    .sum()
            })
            .collect())
    }

    fn row(&self, t: T) -> Vec<T> {
        let dt = t - self.reference_epoch;
        let mut row = Vec::with_capacity(self.num_columns());
        for term in &self.terms {
            match *term {
                BasisTerm::Polynomial { degree } => {
                    let mut p = T::one();
                    for _ in 0..=degree {
                        row.push(p);
                        p *= dt;
                    }
                }
                BasisTerm::Periodic { omega } => {
                    let (s, c) = (omega * dt).sin_cos();
                    row.push(c);
                    row.push(s);
                }
                BasisTerm::Offset { epoch } => {
                    row.push(if t >= epoch { T::one() } else { T::zero() });
                }
            }
        }
        row
    }
}

/// N x M design matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    labels: Vec<ColumnLabel<T>>,
}

impl<T: Real> DesignMatrix<T> {
    /// Builds a design matrix from explicit columns.
    pub fn from_columns(columns: Vec<Vec<T>>, labels: Vec<ColumnLabel<T>>) -> Result<Self> {
        let cols = columns.len();
        if cols == 0 {
            return Err(Error::Specification("design matrix has no columns".into()));
        }
        if labels.len() != cols {
            return Err(Error::Dimension {
                expected: cols,
                found: labels.len(),
            });
        }
        let rows = columns[0].len();
        let mut data = Vec::with_capacity(rows * cols);
        for c in &columns {
            if c.len() != rows {
                return Err(Error::Dimension {
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(DesignMatrix {
            rows,
            cols,
            data,
            labels,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[ColumnLabel<T>] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    /// `A x`
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "coefficient count mismatch");
        let mut out = vec![T::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.column(j)) {
                *o += a * xj;
            }
        }
        out
    }

    /// Checks full column rank on the column-normalised Gram matrix and names
    /// the first column that is a combination of the preceding ones.
    pub fn check_rank(&self) -> Result<()> {
        let m = self.cols;
        let mut gram = SquareMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                let v: T = self
                    .column(i)
                    .iter()
                    .zip(self.column(j))
                    .map(|(&a, &b)| a * b)
                    .sum();
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
        for j in 0..m {
            if gram.get(j, j) == T::zero() {
                return Err(Error::Collinearity {
                    columns: vec![self.labels[j].to_string()],
                });
            }
        }
        cholesky_lower(&gram, T::lit(RANK_TOLERANCE)).map_err(|pivot| Error::Collinearity {
            columns: collinear_group(&self.labels, pivot),
        })?;
        Ok(())
    }
}

pub(crate) fn collinear_group<T: Real>(labels: &[ColumnLabel<T>], pivot: usize) -> Vec<String> {
    labels[..=pivot].iter().map(ToString::to_string).collect()
}

/// Evaluates the basis of `spec` at `epochs`.
pub fn build_design_matrix<T: Real>(
    spec: &TrajectoryModelSpec<T>,
    epochs: &[T],
) -> Result<DesignMatrix<T>> {
    spec.validate()?;
    if epochs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Specification("epochs must be strictly increasing".into()));
    }
    let (n, m) = (epochs.len(), spec.num_columns());
    if n < m {
        return Err(Error::UnderDetermined {
            observations: n,
            parameters: m,
        });
    }
    let mut data = vec![T::zero(); n * m];
    for (i, &t) in epochs.iter().enumerate() {
        for (j, v) in spec.row(t).into_iter().enumerate() {
            data[j * n + i] = v;
        }
    }
    let a = DesignMatrix {
        rows: n,
        cols: m,
        data,
        labels: spec.labels(),
    };
    a.check_rank()?;
    Ok(a)
}

/// Amplitude and phase lag of `c cos(wt) + s sin(wt) = b cos(wt - psi)`,
/// with `psi` in `(-pi, pi]`.
pub fn amp_phase<T: Real>(c: T, s: T) -> (T, T) {
    let b = c.hypot(s);
    if b == T::zero() {
        return (T::zero(), T::zero());
    }
    let mut psi = s.atan2(c);
    if psi <= -T::PI() {
        psi = T::PI();
    }
    (b, psi)
}

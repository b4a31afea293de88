//! Downhill simplex minimisation.

use crate::error::{Error, Result};
use crate::scalar::Real;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerOptions<T> {
    /// Stop once every vertex lies within this distance of the best one,
    /// coordinate-wise.
    pub xatol: T,
    pub max_iter: usize,
    /// Offset of the initial vertices from the start point along each axis.
    pub initial_simplex_scale: T,
}

impl<T: Real> Default for MinimizerOptions<T> {
    fn default() -> Self {
        MinimizerOptions {
            xatol: T::lit(0.01),
            max_iter: 1000,
            initial_simplex_scale: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when `max_iter` ran out first; `x` is then the best vertex found.
    pub converged: bool,
}

/// Minimises `objective` from `start`.
///
/// `+inf` marks an infeasible point and is simply never accepted; NaN or
/// `-inf` aborts the search with [`Error::Objective`].
pub fn nelder_mead<T, F>(mut objective: F, start: &[T], opts: &MinimizerOptions<T>) -> Result<Minimum<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let dim = start.len();
    if dim == 0 {
        return Err(Error::EmptyRequest("no parameters to minimise"));
    }
    if !(opts.xatol > T::zero()) {
        return Err(Error::Domain(format!("xatol must be positive, got {}", opts.xatol)));
    }
    let mut evaluations = 0;
    let mut eval = |x: &[T]| -> Result<T> {
        evaluations += 1;
        let v = objective(x);
        if v.is_nan() || v == T::neg_infinity() {
            return Err(Error::Objective(x.iter().map(|v| v.as_f64()).collect()));
        }
        Ok(v)
    };

    let f0 = eval(start)?;
    if !f0.is_finite() {
        return Err(Error::Objective(start.iter().map(|v| v.as_f64()).collect()));
    }
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f0));
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += opts.initial_simplex_scale;
        let fv = eval(&v)?;
        simplex.push((v, fv));
    }

    let lit = T::lit;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN in simplex"));
        let best = &simplex[0].0;
        let spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(best).map(|(&a, &b)| (a - b).abs()))
            .fold(T::zero(), T::max);
        if spread <= opts.xatol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); dim];
        for (v, _) in &simplex[..dim] {
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        let nf = T::from_usize_lossy(dim);
        centroid.iter_mut().for_each(|c| *c /= nf);

        let worst = simplex[dim].clone();
        // c + t (c - worst)
        let along = |t: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let xr = along(lit(REFLECT));
        let fr = eval(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(lit(REFLECT * EXPAND));
            let fe = eval(&xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let contracted = if fr < worst.1 {
            let xc = along(lit(REFLECT * CONTRACT));
            let fc = eval(&xc)?;
            (fc <= fr).then_some((xc, fc))
        } else {
            let xcc = along(lit(-CONTRACT));
            let fcc = eval(&xcc)?;
            (fcc < worst.1).then_some((xcc, fcc))
        };
        match contracted {
            Some(v) => simplex[dim] = v,
            None => {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<T> = anchor
                        .iter()
                        .zip(&vertex.0)
                        .map(|(&a, &x)| a + lit(SHRINK) * (x - a))
                        .collect();
                    let fs = eval(&shrunk)?;
                    *vertex = (shrunk, fs);
                }
            }
        }
    }

    let (x, value) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        value,
        iterations,
        evaluations,
        converged,
    })
}

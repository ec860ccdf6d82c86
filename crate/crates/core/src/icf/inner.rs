//! Concave maximization of the conditional log-likelihood over `{θ : Aθ = 0}`.

use nalgebra::{DMatrix, DVector};

use super::constraints::{ConditionalTheta, ConstraintMatrix};
use super::InnerMethod;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;
/// Largest admissible step is shortened by this factor to stay interior.
const BOUNDARY_FRACTION: f64 = 0.995;
const MIN_STEP: f64 = 1e-18;

#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    pub method: InnerMethod,
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_sigma: f64,
    pub armijo_beta: f64,
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub theta: ConditionalTheta,
    pub iterations: usize,
    /// `‖P g‖_∞` at the returned point, `P` the orthogonal projector onto `ker A`.
    pub projected_gradient: f64,
    /// Constraint rows found to be linearly dependent.
    pub dropped_rows: usize,
}

/// `Σ n0 log θ + n1 log(1 - θ)`, `-∞` outside `(0, 1)` where counts are positive.
pub fn conditional_objective(theta: &[f64], n0: &[f64], n1: &[f64]) -> f64 {
    let mut f = 0.0;
    for ((&t, &a), &b) in theta.iter().zip(n0).zip(n1) {
        if a > 0.0 {
            if !(t > 0.0) {
                return f64::NEG_INFINITY;
            }
            f += a * t.ln();
        }
        if b > 0.0 {
            if !(t < 1.0) {
                return f64::NEG_INFINITY;
            }
            f += b * (1.0 - t).ln();
        }
    }
    f
}

fn gradient(theta: &[f64], n0: &[f64], n1: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        theta.len(),
        theta
            .iter()
            .zip(n0)
            .zip(n1)
            .map(|((&t, &a), &b)| a / t - b / (1.0 - t)),
    )
}

/// Orthonormal basis (as columns) of the row space of `m`, and the number of
/// rows beyond its rank.
fn row_space_basis(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (rows, cols) = m.shape();
    if rows == 0 {
        return (DMatrix::zeros(cols, 0), 0);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return (DMatrix::zeros(cols, 0), rows);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    (basis, rows - keep.len())
}

fn project(basis: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    if basis.ncols() == 0 {
        return x.clone();
    }
    x - basis * (basis.transpose() * x)
}

/// Largest `t ≤ 1` keeping `θ + t·d` strictly inside the unit cube.
fn max_step(theta: &[f64], d: &DVector<f64>) -> f64 {
    let mut t = f64::INFINITY;
    for (&th, &di) in theta.iter().zip(d.iter()) {
        if di > 0.0 {
            t = t.min((1.0 - th) / di);
        } else if di < 0.0 {
            t = t.min(-th / di);
        }
    }
    (BOUNDARY_FRACTION * t).min(1.0)
}

/// Maximizes the conditional log-likelihood subject to `Aθ = 0`, starting
/// from a feasible interior `theta0`.
///
/// Dependent constraint rows are dropped (with a warning) rather than
/// assumed away.
pub fn solve_inner(
    theta0: &ConditionalTheta,
    a: &ConstraintMatrix,
    n0: &[f64],
    n1: &[f64],
    opts: &InnerOptions,
) -> Result<InnerSolution> {
    let m = theta0.theta.len();
    if a.matrix.ncols() != m || n0.len() != m || n1.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: a.matrix.ncols(),
        });
    }
    let v = theta0.vertex;

    if a.n_rows() == 0 {
        let theta = theta0
            .theta
            .iter()
            .zip(n0.iter().zip(n1))
            .map(|(&t, (&x, &y))| if x + y > 0.0 { x / (x + y) } else { t })
            .collect();
        return Ok(InnerSolution {
            theta: ConditionalTheta { vertex: v, theta },
            iterations: 1,
            projected_gradient: 0.0,
            dropped_rows: 0,
        });
    }

    let (basis, dropped_rows) = row_space_basis(&a.matrix);
    if dropped_rows > 0 {
        log::warn!(
            "vertex {}: {} of {} constraint rows are linearly dependent and were dropped",
            v,
            dropped_rows,
            a.n_rows()
        );
    }
    let slice_total: f64 = n0.iter().zip(n1).map(|(x, y)| x + y).sum();
    let threshold = opts.tol * slice_total.max(1.0);

    let mut theta = theta0.theta.clone();
    let mut f = conditional_objective(&theta, n0, n1);
    if !f.is_finite() {
        return Err(Error::InvalidDistribution(format!(
            "vertex {v}: inner start is not interior"
        )));
    }
    let mut g = gradient(&theta, n0, n1);
    let mut pg = project(&basis, &g).amax();

    for iter in 0..opts.max_iters {
        if pg <= threshold {
            return Ok(finish(v, theta, a, iter, pg, dropped_rows));
        }
        let d = match opts.method {
            InnerMethod::GradientProjection => project(&basis, &g) / slice_total.max(1.0),
            InnerMethod::ProjectedNewton => {
                // Scale by the inverse square root of the (diagonal) negative Hessian.
                let s: Vec<f64> = theta
                    .iter()
                    .zip(n0.iter().zip(n1))
                    .map(|(&t, (&x, &y))| {
                        let h = x / (t * t) + y / ((1.0 - t) * (1.0 - t));
                        1.0 / h.max(f64::MIN_POSITIVE).sqrt()
                    })
                    .collect();
                let mut scaled = a.matrix.clone();
                for (j, &sj) in s.iter().enumerate() {
                    scaled.column_mut(j).scale_mut(sj);
                }
                let (sb, _) = row_space_basis(&scaled);
                let gs = DVector::from_iterator(m, g.iter().zip(&s).map(|(gi, si)| gi * si));
                let ds = project(&sb, &gs);
                DVector::from_iterator(m, ds.iter().zip(&s).map(|(di, si)| di * si))
            }
        };
        let slope = g.dot(&d);
        if !(slope > 0.0) {
            // Ascent direction lost to round-off: coordinates are at working precision.
            return Ok(finish(v, theta, a, iter, pg, dropped_rows));
        }
        let mut t = max_step(&theta, &d);
        let accepted = loop {
            let trial: Vec<f64> = theta
                .iter()
                .zip(d.iter())
                .map(|(th, di)| th + t * di)
                .collect();
            let ft = conditional_objective(&trial, n0, n1);
            if ft >= f + opts.armijo_sigma * t * slope {
                break Some((trial, ft));
            }
            // By concavity, φ(t) - φ(0) ≥ t·φ'(t); this certifies the Armijo
            // condition when the change in f is below its rounding error.
            if ft.is_finite() && gradient(&trial, n0, n1).dot(&d) >= opts.armijo_sigma * slope {
                break Some((trial, ft.max(f)));
            }
            t *= opts.armijo_beta;
            if t < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some((trial, ft)) => {
                theta = trial;
                f = ft;
                g = gradient(&theta, n0, n1);
                pg = project(&basis, &g).amax();
            }
            None => {
                if slope * max_step(&theta, &d) <= 64.0 * f64::EPSILON * f.abs().max(1.0) {
                    return Ok(finish(v, theta, a, iter, pg, dropped_rows));
                }
                return Err(Error::InnerNoConvergence {
                    vertex: v,
                    iterations: iter,
                });
            }
        }
    }
    if pg <= threshold {
        return Ok(finish(v, theta, a, opts.max_iters, pg, dropped_rows));
    }
    Err(Error::InnerNoConvergence {
        vertex: v,
        iterations: opts.max_iters,
    })
}

fn finish(
    vertex: usize,
    theta: Vec<f64>,
    a: &ConstraintMatrix,
    iterations: usize,
    projected_gradient: f64,
    dropped_rows: usize,
) -> InnerSolution {
    let theta = restore_feasibility(theta, a);
    InnerSolution {
        theta: ConditionalTheta { vertex, theta },
        iterations,
        projected_gradient,
        dropped_rows,
    }
}

/// Removes accumulated drift from `Aθ = 0` with a minimum-norm correction.
fn restore_feasibility(theta: Vec<f64>, a: &ConstraintMatrix) -> Vec<f64> {
    let residual = a.residual(&theta);
    if residual <= 1e-14 {
        return theta;
    }
    let x = DVector::from_vec(theta.clone());
    let b = &a.matrix * &x;
    let svd = a.matrix.clone().svd(true, true);
    let eps = RANK_TOL * svd.singular_values.max();
    let delta = match svd.solve(&b, eps) {
        Ok(delta) => delta,
        Err(_) => return theta,
    };
    let corrected: Vec<f64> = (x - delta).iter().copied().collect();
    if corrected.iter().all(|&t| t > 0.0 && t < 1.0) && a.residual(&corrected) < residual {
        corrected
    } else {
        theta
    }
}

//! BFGS ascent on `x_C = log q_C`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{finish_fit, Algorithm, FitOptions, STATIONARITY_TOL};
use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, ConnectedSetCatalog, VertexSet};
use crate::likelihood::{hessian, loglik_raw, score, CountTable, FitResult};
use crate::mobius::{CellDistribution, ConnectedParams};

/// Largest change of any `log q_C` in a single step.
const MAX_LOG_STEP: f64 = 2.0;
const MIN_STEP: f64 = 1e-16;
/// Iterations between refreshes of the inverse-Hessian approximation.
const REFRESH: usize = 20;
const POLISH_STEPS: usize = 20;

struct Point {
    x: DVector<f64>,
    params: ConnectedParams,
    probs: Vec<f64>,
    loglik: f64,
    /// Gradient of `ℓ` with respect to `x`.
    grad: DVector<f64>,
}

fn evaluate(
    catalog: &Arc<ConnectedSetCatalog>,
    n: &CountTable,
    x: &DVector<f64>,
) -> Result<Option<Point>> {
    let values: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    if values.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
        return Ok(None);
    }
    let params = ConnectedParams::new(catalog.clone(), values)?;
    let probs = params.cell_probs_raw();
    if probs.iter().any(|&p| !(p > 0.0)) {
        return Ok(None);
    }
    let ll = loglik_raw(&probs, n.counts())?;
    let s = score(&params, n)?;
    let grad = DVector::from_iterator(s.len(), s.iter().zip(params.values()).map(|(s, q)| s * q));
    Ok(Some(Point {
        x: x.clone(),
        params,
        probs,
        loglik: ll,
        grad,
    }))
}

/// Inverse of the negative Hessian in `x`, shifted until positive definite.
fn curvature_inverse(p: &Point, n: &CountTable) -> Result<DMatrix<f64>> {
    let h = hessian(&p.params, n)?;
    let q = p.params.values();
    let k = q.len();
    let mut m = DMatrix::from_fn(k, k, |i, j| -q[i] * q[j] * h[(i, j)]);
    for i in 0..k {
        m[(i, i)] -= p.grad[i];
    }
    let scale = (0..k).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut shift = 0.0;
    loop {
        let mut shifted = m.clone();
        for i in 0..k {
            shifted[(i, i)] += shift;
        }
        if let Some(chol) = shifted.cholesky() {
            return Ok(chol.inverse());
        }
        shift = if shift == 0.0 {
            1e-10 * scale
        } else {
            shift * 10.0
        };
    }
}

/// Newton steps on the score equation, accepted when they reduce the score
/// without losing likelihood beyond round-off. Used once the likelihood can
/// no longer resolve further ascent.
fn polish(
    catalog: &Arc<ConnectedSetCatalog>,
    n: &CountTable,
    mut cur: Point,
    target: f64,
) -> Result<Point> {
    for _ in 0..POLISH_STEPS {
        let norm = score_norm(&cur);
        if norm <= target {
            break;
        }
        let h = hessian(&cur.params, n)?;
        let q = cur.params.values();
        let k = q.len();
        let mut neg = DMatrix::from_fn(k, k, |i, j| -q[i] * q[j] * h[(i, j)]);
        for i in 0..k {
            neg[(i, i)] -= cur.grad[i];
        }
        let Some(chol) = neg.cholesky() else { break };
        let d = chol.solve(&cur.grad);
        let slack = 1e-12 * cur.loglik.abs().max(1.0);
        let mut t = (MAX_LOG_STEP / d.amax()).min(1.0);
        let mut next = None;
        while t >= 1e-4 {
            if let Some(p) = evaluate(catalog, n, &(&cur.x + t * &d))? {
                if p.loglik >= cur.loglik - slack && score_norm(&p) < norm {
                    next = Some(p);
                    break;
                }
            }
            t *= 0.5;
        }
        match next {
            Some(p) => cur = p,
            None => break,
        }
    }
    Ok(cur)
}

fn score_norm(p: &Point) -> f64 {
    p.grad
        .iter()
        .zip(p.params.values())
        .fold(0.0f64, |m, (g, q)| m.max((g / q).abs()))
}

/// Fits `B(G)` by quasi-Newton ascent on `log q_C`. Errors with
/// `NoConvergence` when `max_cycles` iterations do not suffice.
pub fn gradient_fit(g: &BidirectedGraph, n: &CountTable, opts: &FitOptions) -> Result<FitResult> {
    let f = gradient_fit_report(g, n, opts)?;
    if f.converged {
        Ok(f)
    } else {
        Err(Error::NoConvergence {
            cycles: f.iterations,
        })
    }
}

/// Like [`gradient_fit`] but returns the last iterate with `converged = false`.
pub(crate) fn gradient_fit_report(
    g: &BidirectedGraph,
    n: &CountTable,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    if g.n() != n.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: n.n_vars(),
        });
    }
    let counts = opts.prepare_counts(n)?;
    let total = counts.total();
    let catalog = Arc::new(ConnectedSetCatalog::new(g)?);
    let dim = catalog.len();
    // Start from the independence fit, which lies in every model.
    let emp = counts.empirical();
    let log_zero: Vec<f64> = (0..g.n())
        .map(|v| {
            let s = VertexSet::singleton(v);
            emp.marginal(s, s).ln()
        })
        .collect();
    let x0 = DVector::from_iterator(
        dim,
        catalog
            .sets()
            .iter()
            .map(|c| c.iter().map(|v| log_zero[v]).sum::<f64>()),
    );
    let mut cur = evaluate(&catalog, &counts, &x0)?.expect("independence start is interior");
    let mut h = curvature_inverse(&cur, &counts)?;
    let mut since_refresh = 0;
    let mut converged = false;
    let mut iterations = 0;
    // Stationarity target, well inside the certificate checked by callers.
    let target = 1e-3 * opts.tol_outer * total;

    for iter in 1..=opts.max_cycles {
        iterations = iter;
        if score_norm(&cur) <= target {
            converged = true;
            break;
        }
        if since_refresh >= REFRESH {
            h = curvature_inverse(&cur, &counts)?;
            since_refresh = 0;
        }
        since_refresh += 1;
        let mut d = &h * &cur.grad;
        if cur.grad.dot(&d) <= 0.0 {
            h = curvature_inverse(&cur, &counts)?;
            since_refresh = 1;
            d = &h * &cur.grad;
        }
        let slope = cur.grad.dot(&d);
        let mut t = (MAX_LOG_STEP / d.amax()).min(1.0);
        let next = loop {
            let x = &cur.x + t * &d;
            if let Some(p) = evaluate(&catalog, &counts, &x)? {
                if p.loglik >= cur.loglik + opts.armijo_sigma * t * slope {
                    break Some(p);
                }
            }
            t *= opts.armijo_beta;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some(next) = next else {
            // No further ascent is representable; accept if the certificate holds.
            cur = polish(&catalog, &counts, cur, target)?;
            converged = score_norm(&cur) <= STATIONARITY_TOL * total;
            break;
        };
        let s = &next.x - &cur.x;
        let y = &cur.grad - &next.grad;
        let dq = cur
            .params
            .values()
            .iter()
            .zip(next.params.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dl = next.loglik - cur.loglik;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (rho * rho * yhy + rho) * (&s * s.transpose())
                - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        cur = next;
        if dq < opts.tol_outer && dl.abs() < opts.tol_outer * total {
            if score_norm(&cur) > STATIONARITY_TOL * total {
                cur = polish(&catalog, &counts, cur, target)?;
            }
            if score_norm(&cur) <= STATIONARITY_TOL * total {
                converged = true;
                break;
            }
        }
    }
    let p = CellDistribution::from_raw(g.n(), cur.probs);
    finish_fit(
        g,
        &catalog,
        &counts,
        p,
        iterations,
        converged,
        Algorithm::Gradient,
    )
}

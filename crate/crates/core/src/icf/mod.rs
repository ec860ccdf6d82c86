//! Maximum-likelihood fitting by iterative conditional fitting, with a
//! quasi-Newton fitter on `log q_C` as a second engine.

mod constraints;
mod gradient;
mod inner;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use constraints::{build_constraints, ConditionalTheta, ConstraintMatrix};
pub use gradient::gradient_fit;
pub use inner::{conditional_objective, solve_inner, InnerOptions, InnerSolution};

use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, ConnectedSetCatalog};
use crate::likelihood::{loglik, lr_test, saturated_loglik, score, CountTable, FitResult};
use crate::mobius::{CellDistribution, ConnectedParams};
use constraints::{cell_index, margin};

/// A fit counts as stationary when `max_C |∂ℓ/∂q_C| ≤ STATIONARITY_TOL · N`.
pub(crate) const STATIONARITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Icf,
    Gradient,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Icf => "icf",
            Algorithm::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InnerMethod {
    GradientProjection,
    ProjectedNewton,
}

impl InnerMethod {
    pub fn name(self) -> &'static str {
        match self {
            InnerMethod::GradientProjection => "gp",
            InnerMethod::ProjectedNewton => "newton",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub algorithm: Algorithm,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub max_cycles: usize,
    pub max_inner_iters: usize,
    pub armijo_sigma: f64,
    pub armijo_beta: f64,
    pub inner_method: InnerMethod,
    /// Added to every cell before fitting; without it zero counts are rejected.
    pub pseudo_count: Option<f64>,
    /// Number of starting points; the first is uniform, the rest random product distributions.
    pub multi_start: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            algorithm: Algorithm::Icf,
            tol_outer: 1e-8,
            tol_inner: 1e-10,
            max_cycles: 500,
            max_inner_iters: 200,
            armijo_sigma: 1e-4,
            armijo_beta: 0.5,
            inner_method: InnerMethod::ProjectedNewton,
            pseudo_count: None,
            multi_start: 1,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidOption(msg.to_string()));
        if !(self.tol_outer > 0.0) || !(self.tol_inner > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.armijo_beta > 0.0 && self.armijo_beta < 1.0) {
            return bad("armijo_beta must lie in (0, 1)");
        }
        if !(self.armijo_sigma > 0.0 && self.armijo_sigma < 1.0) {
            return bad("armijo_sigma must lie in (0, 1)");
        }
        if self.max_cycles == 0 || self.max_inner_iters == 0 {
            return bad("iteration limits must be positive");
        }
        if self.multi_start == 0 {
            return bad("multi_start must be at least 1");
        }
        if let Some(eps) = self.pseudo_count {
            if !(eps > 0.0) || !eps.is_finite() {
                return bad("pseudo_count must be positive");
            }
        }
        Ok(())
    }

    pub fn inner(&self) -> InnerOptions {
        InnerOptions {
            method: self.inner_method,
            tol: self.tol_inner,
            max_iters: self.max_inner_iters,
            armijo_sigma: self.armijo_sigma,
            armijo_beta: self.armijo_beta,
        }
    }

    /// The count table actually fitted: `n`, or `n + ε` cellwise.
    pub fn prepare_counts(&self, n: &CountTable) -> Result<CountTable> {
        match self.pseudo_count {
            Some(eps) => n.with_pseudo_count(eps),
            None if n.has_zero() => Err(Error::ZeroCountsRejected),
            None => Ok(n.clone()),
        }
    }
}

/// One ICF step for vertex `v`: keeps the `X_{-v}` margin and maximizes the
/// likelihood over the conditional of `X_v` within the model.
pub fn icf_update(
    p: &CellDistribution,
    v: usize,
    n: &CountTable,
    catalog: &ConnectedSetCatalog,
    opts: &FitOptions,
) -> Result<CellDistribution> {
    icf_update_inner(p, v, n, catalog, &opts.inner()).map(|(p, _)| p)
}

fn icf_update_inner(
    p: &CellDistribution,
    v: usize,
    n: &CountTable,
    catalog: &ConnectedSetCatalog,
    inner: &InnerOptions,
) -> Result<(CellDistribution, usize)> {
    if v >= p.n_vars() {
        return Err(Error::VertexOutOfRange {
            index: v,
            n: p.n_vars(),
        });
    }
    if n.n_vars() != p.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: p.n_vars(),
            found: n.n_vars(),
        });
    }
    let a = build_constraints(p, v, catalog)?;
    let theta0 = ConditionalTheta::from_distribution(p, v)?;
    let half = theta0.theta.len();
    let n0: Vec<f64> = (0..half).map(|r| n.get(cell_index(r, v, 0))).collect();
    let n1: Vec<f64> = (0..half).map(|r| n.get(cell_index(r, v, 1))).collect();
    let sol = solve_inner(&theta0, &a, &n0, &n1, inner)?;
    let m = margin(p, v);
    let mut probs = vec![0.0; p.probs().len()];
    for r in 0..half {
        let t = sol.theta.theta[r];
        probs[cell_index(r, v, 0)] = t * m[r];
        probs[cell_index(r, v, 1)] = (1.0 - t) * m[r];
    }
    Ok((
        CellDistribution::from_raw(p.n_vars(), probs),
        sol.iterations,
    ))
}

/// State passed to an observer after every ICF update.
#[derive(Debug)]
pub struct UpdateEvent<'a> {
    pub start: usize,
    pub cycle: usize,
    pub vertex: usize,
    pub before: &'a CellDistribution,
    pub after: &'a CellDistribution,
    pub loglik_before: f64,
    pub loglik_after: f64,
}

/// Fits `B(G)` by iterative conditional fitting. Errors with `NoConvergence`
/// when the cycle limit is reached; see [`icf_fit_report`] for a result in
/// that case.
pub fn icf_fit(g: &BidirectedGraph, n: &CountTable, opts: &FitOptions) -> Result<FitResult> {
    let fit = icf_fit_observed(g, n, opts, &mut |_| {})?;
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NoConvergence {
            cycles: fit.iterations,
        })
    }
}

/// Like [`icf_fit`] but returns the last iterate with `converged = false`
/// instead of failing when the cycle limit is reached.
pub fn icf_fit_report(g: &BidirectedGraph, n: &CountTable, opts: &FitOptions) -> Result<FitResult> {
    icf_fit_observed(g, n, opts, &mut |_| {})
}

/// Runs the engine selected by `opts.algorithm`, returning non-converged fits.
pub fn fit_report(g: &BidirectedGraph, n: &CountTable, opts: &FitOptions) -> Result<FitResult> {
    match opts.algorithm {
        Algorithm::Icf => icf_fit_report(g, n, opts),
        Algorithm::Gradient => gradient::gradient_fit_report(g, n, opts),
    }
}

/// Runs the engine selected by `opts.algorithm`.
pub fn fit(g: &BidirectedGraph, n: &CountTable, opts: &FitOptions) -> Result<FitResult> {
    let f = fit_report(g, n, opts)?;
    if f.converged {
        Ok(f)
    } else {
        Err(Error::NoConvergence {
            cycles: f.iterations,
        })
    }
}

/// [`icf_fit_report`] with a callback after each single-vertex update.
pub fn icf_fit_observed(
    g: &BidirectedGraph,
    n: &CountTable,
    opts: &FitOptions,
    observer: &mut dyn FnMut(&UpdateEvent),
) -> Result<FitResult> {
    opts.validate()?;
    if g.n() != n.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: n.n_vars(),
        });
    }
    let counts = opts.prepare_counts(n)?;
    let catalog = Arc::new(ConnectedSetCatalog::new(g)?);
    let mut best: Option<Run> = None;
    for (k, start) in starting_points(g.n(), opts).into_iter().enumerate() {
        let run = run_cycles(&catalog, &counts, start, k, opts, observer)?;
        log::debug!(
            "start {}: loglik {} after {} cycles",
            k,
            run.loglik,
            run.cycles
        );
        if best.as_ref().is_none_or(|b| run.loglik > b.loglik) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");
    finish_fit(
        g,
        &catalog,
        &counts,
        run.p,
        run.cycles,
        run.converged,
        Algorithm::Icf,
    )
}

fn starting_points(n_vars: usize, opts: &FitOptions) -> Vec<CellDistribution> {
    let mut starts = vec![CellDistribution::uniform(n_vars)];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 1..opts.multi_start {
        let probs: Vec<f64> = (0..n_vars).map(|_| rng.random_range(0.1..0.9)).collect();
        starts.push(CellDistribution::product(&probs));
    }
    starts
}

struct Run {
    p: CellDistribution,
    loglik: f64,
    cycles: usize,
    converged: bool,
}

fn run_cycles(
    catalog: &Arc<ConnectedSetCatalog>,
    n: &CountTable,
    start: CellDistribution,
    start_index: usize,
    opts: &FitOptions,
    observer: &mut dyn FnMut(&UpdateEvent),
) -> Result<Run> {
    let inner = opts.inner();
    let total = n.total();
    let mut p = start;
    let mut ll = loglik(&p, n)?;
    let mut q = ConnectedParams::from_distribution(catalog.clone(), &p);
    for cycle in 1..=opts.max_cycles {
        let ll_cycle_start = ll;
        for v in 0..p.n_vars() {
            let (next, _) = icf_update_inner(&p, v, n, catalog, &inner)?;
            let ll_next = loglik(&next, n)?;
            observer(&UpdateEvent {
                start: start_index,
                cycle,
                vertex: v,
                before: &p,
                after: &next,
                loglik_before: ll,
                loglik_after: ll_next,
            });
            p = next;
            ll = ll_next;
        }
        let q_next = ConnectedParams::from_distribution(catalog.clone(), &p);
        let dq = q
            .values()
            .iter()
            .zip(q_next.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let small_step =
            dq < opts.tol_outer && (ll - ll_cycle_start).abs() < opts.tol_outer * total;
        // Small steps alone can stall short of stationarity on skewed tables.
        if small_step && max_abs(&score(&q_next, n)?) <= STATIONARITY_TOL * total {
            return Ok(Run {
                p,
                loglik: ll,
                cycles: cycle,
                converged: true,
            });
        }
        q = q_next;
    }
    Ok(Run {
        p,
        loglik: ll,
        cycles: opts.max_cycles,
        converged: false,
    })
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, s| m.max(s.abs()))
}

/// Assembles a [`FitResult`] at `p`, tested against the saturated model of `n`.
pub(crate) fn finish_fit(
    g: &BidirectedGraph,
    catalog: &Arc<ConnectedSetCatalog>,
    n: &CountTable,
    p: CellDistribution,
    iterations: usize,
    converged: bool,
    algorithm: Algorithm,
) -> Result<FitResult> {
    let q_hat = ConnectedParams::from_distribution(catalog.clone(), &p);
    let ll = loglik(&p, n)?;
    let score_norm = max_abs(&score(&q_hat, n)?);
    let dim = catalog.len();
    let sat_dim = (1usize << g.n()) - 1;
    let test = lr_test(ll, dim, saturated_loglik(n), sat_dim)?;
    Ok(FitResult {
        graph: g.clone(),
        p_hat: p,
        q_hat,
        loglik: ll,
        dim,
        deviance: test.deviance,
        df: test.df,
        p_value: test.p_value,
        iterations,
        converged,
        score_norm,
        algorithm,
    })
}

//! Backward stepwise edge deletion with likelihood-ratio tests.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::BidirectedGraph;
use crate::icf::{fit, fit_report, FitOptions};
use crate::likelihood::{lr_test, CountTable, FitResult};

/// One accepted edge removal.
#[derive(Debug, Clone)]
pub struct Step {
    pub removed: (usize, usize),
    /// Deviance of the smaller model against the model before removal.
    pub deviance: f64,
    pub df: usize,
    pub p_value: f64,
    /// Dimension after removal.
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct StepwiseTrace {
    pub alpha: f64,
    pub steps: Vec<Step>,
    pub final_graph: BidirectedGraph,
    pub final_fit: FitResult,
    /// Candidates whose fit failed, as (step index, edge, error).
    pub skipped: Vec<(usize, (usize, usize), Error)>,
}

impl StepwiseTrace {
    /// Sum of the stepwise deviance increments.
    pub fn total_deviance(&self) -> f64 {
        self.steps.iter().map(|s| s.deviance).sum()
    }
}

struct Candidate {
    edge: (usize, usize),
    name: (String, String),
    fit: FitResult,
    deviance: f64,
    df: usize,
    p_value: f64,
}

/// Starts from the complete graph on the table's labels and repeatedly removes
/// the edge whose deletion has the largest p-value, while that p-value
/// exceeds `alpha`. Ties go to the lexicographically smallest edge label pair.
pub fn backward_stepwise(n: &CountTable, alpha: f64, opts: &FitOptions) -> Result<StepwiseTrace> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidOption(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    opts.validate()?;
    let mut graph = BidirectedGraph::complete(n.labels())?;
    let mut current = fit(&graph, n, opts)?;
    let mut steps = Vec::new();
    let mut skipped = Vec::new();
    loop {
        let edges = graph.edges();
        if edges.is_empty() {
            break;
        }
        let results: Vec<(usize, usize, Result<FitResult>)> = edges
            .par_iter()
            .map(|&(v, w)| (v, w, fit_report(&graph.without_edge(v, w), n, opts)))
            .collect();
        let mut candidates = Vec::with_capacity(results.len());
        for (v, w, r) in results {
            let outcome = r.and_then(|f| {
                if f.converged {
                    Ok(f)
                } else {
                    Err(Error::NoConvergence {
                        cycles: f.iterations,
                    })
                }
            });
            let tested = outcome.and_then(|f| {
                let t = lr_test(f.loglik, f.dim, current.loglik, current.dim)?;
                Ok((f, t))
            });
            match tested {
                Ok((f, t)) => {
                    let (a, b) = (graph.label(v).to_string(), graph.label(w).to_string());
                    let name = if a <= b { (a, b) } else { (b, a) };
                    candidates.push(Candidate {
                        edge: (v, w),
                        name,
                        fit: f,
                        deviance: t.deviance,
                        df: t.df,
                        p_value: t.p_value,
                    });
                }
                Err(e) => {
                    log::warn!(
                        "step {}: candidate {} <-> {} skipped: {}",
                        steps.len(),
                        graph.label(v),
                        graph.label(w),
                        e
                    );
                    skipped.push((steps.len(), (v, w), e));
                }
            }
        }
        let best = candidates.into_iter().reduce(|a, b| {
            if b.p_value > a.p_value || (b.p_value == a.p_value && b.name < a.name) {
                b
            } else {
                a
            }
        });
        let Some(best) = best else { break };
        if !(best.p_value > alpha) {
            break;
        }
        log::info!(
            "removing {} <-> {}: deviance {:.4} on {} df, p = {:.4}",
            graph.label(best.edge.0),
            graph.label(best.edge.1),
            best.deviance,
            best.df,
            best.p_value
        );
        graph.remove_edge(best.edge.0, best.edge.1);
        steps.push(Step {
            removed: best.edge,
            deviance: best.deviance,
            df: best.df,
            p_value: best.p_value,
            dim: best.fit.dim,
        });
        current = best.fit;
    }
    Ok(StepwiseTrace {
        alpha,
        steps,
        final_graph: graph,
        final_fit: current,
        skipped,
    })
}

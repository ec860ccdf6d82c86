//! Multinomial likelihood in cell and connected-set coordinates.

mod derivatives;
mod gamma;
mod inference;

pub use derivatives::{
    expected_information, hessian, hessian_case, observed_information, score, standard_errors,
    HessianCase,
};
pub use gamma::{chi_square_sf, ln_gamma, regularized_gamma_q};
pub use inference::{deviance_test, lr_test, pairwise_odds_ratios, FitResult, LrTest, OddsRatio};

use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, VertexSet, MAX_VERTICES};
use crate::mobius::{CellDistribution, MobiusVector};

/// Observed counts over the cells `{0,1}^V`, indexed like [`CellDistribution`].
///
/// Counts are real-valued so that group-averaged tables can be fitted directly.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    labels: Vec<String>,
    counts: Vec<f64>,
    total: f64,
}

impl CountTable {
    pub fn new<S: AsRef<str>>(labels: &[S], counts: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n > MAX_VERTICES {
            return Err(Error::TooManyVertices {
                n,
                limit: MAX_VERTICES,
            });
        }
        if counts.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: counts.len(),
            });
        }
        if let Some((i, c)) = counts
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(Error::InvalidCounts(format!("cell {i} has count {c}")));
        }
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidCounts("total count is zero".into()));
        }
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(CountTable {
            labels,
            counts,
            total,
        })
    }

    /// Table with labels `1..=n`.
    pub fn unlabeled(counts: Vec<f64>) -> Result<Self> {
        let n = counts.len().max(1).trailing_zeros() as usize;
        let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        Self::new(&labels, counts)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.counts[cell]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn has_zero(&self) -> bool {
        self.counts.iter().any(|&c| c == 0.0)
    }

    /// Adds `eps` to every cell.
    pub fn with_pseudo_count(&self, eps: f64) -> Result<Self> {
        Self::new(&self.labels, self.counts.iter().map(|c| c + eps).collect())
    }

    pub fn with_counts(&self, counts: Vec<f64>) -> Result<Self> {
        Self::new(&self.labels, counts)
    }

    /// `n(i)/n`.
    pub fn empirical(&self) -> CellDistribution {
        CellDistribution::from_raw(
            self.n_vars(),
            self.counts.iter().map(|c| c / self.total).collect(),
        )
    }

    /// Count table with variable `v` relabelled `0 <-> 1`.
    pub fn flip_labels(&self, v: usize) -> Self {
        let counts = (0..self.counts.len())
            .map(|i| self.counts[i ^ (1 << v)])
            .collect();
        CountTable {
            labels: self.labels.clone(),
            counts,
            total: self.total,
        }
    }

    /// Empty graph on this table's labels.
    pub fn graph_skeleton(&self) -> Result<BidirectedGraph> {
        BidirectedGraph::new(&self.labels)
    }
}

/// Kernel `Σ n(i) log p_i` of the multinomial log-likelihood.
pub fn loglik(p: &CellDistribution, n: &CountTable) -> Result<f64> {
    if p.n_vars() != n.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: n.n_vars(),
            found: p.n_vars(),
        });
    }
    loglik_raw(p.probs(), n.counts())
}

pub(crate) fn loglik_raw(p: &[f64], n: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (cell, (&pi, &ni)) in p.iter().zip(n).enumerate() {
        if ni > 0.0 {
            if !(pi > 0.0) {
                return Err(Error::LogOfZero { cell });
            }
            acc += ni * pi.ln();
        }
    }
    Ok(acc)
}

/// Log-likelihood of the saturated model, `Σ n(i) log(n(i)/n)`.
pub fn saturated_loglik(n: &CountTable) -> f64 {
    n.counts()
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| c * (c / n.total()).ln())
        .sum()
}

/// Whether `q_C` occurs in the expansion of `p^V_A`: `spo(C) ∩ (A ∖ C) = ∅`.
pub fn expansion_support(g: &BidirectedGraph, c: VertexSet, a: VertexSet) -> bool {
    g.spouses_unchecked(c).is_disjoint(a.difference(c))
}

/// `p^W_A = P(X_A = 0, X_{W∖A} = 1)` as an alternating sum over `q`.
pub fn marginal_prob(q: &MobiusVector, a: VertexSet, w: VertexSet) -> Result<f64> {
    if !a.is_subset(w) {
        return Err(Error::SetOutOfRange(a));
    }
    if !w.is_subset(VertexSet::full(q.n_vars())) {
        return Err(Error::SetOutOfRange(w));
    }
    Ok(q.marginal(a, w))
}

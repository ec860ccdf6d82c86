//! Analytic score and Hessian of `ℓ(q) = Σ_A n^V_A log p^V_A` with respect to
//! the connected-set parameters `q_C`.
//!
//! With `d_C(A) = (-1)^{|C∖A|} p^{V∖spo(C)}_{A∖C}` when `spo(C) ∩ (A∖C) = ∅`
//! (and zero otherwise), `∂p^V_A/∂q_C = d_C(A)`. Sums run over the cells with
//! positive count only; all other cells drop out of the kernel.

use nalgebra::DMatrix;

use super::CountTable;
use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, VertexSet};
use crate::mobius::ConnectedParams;

/// Classification of `∂²log p^V_A / ∂q_C ∂q_{C̄}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianCase {
    /// One of the parameters does not occur in the expansion of `p^V_A`.
    Zero,
    /// `C̄ ∩ spo(C) ≠ ∅`: only the product of first derivatives remains.
    Product,
    /// `C` and `C̄` are disjoint and non-adjacent: the mixed second
    /// derivative of `p^V_A` contributes as well.
    ProductPlusJoint,
}

pub fn hessian_case(
    g: &BidirectedGraph,
    c: VertexSet,
    cbar: VertexSet,
    a: VertexSet,
) -> HessianCase {
    let spo_c = g.spouses_unchecked(c);
    let spo_cbar = g.spouses_unchecked(cbar);
    if !spo_c.is_disjoint(a.difference(c)) || !spo_cbar.is_disjoint(a.difference(cbar)) {
        HessianCase::Zero
    } else if !cbar.is_disjoint(spo_c) {
        HessianCase::Product
    } else {
        HessianCase::ProductPlusJoint
    }
}

fn parity_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Per-parameter data shared by score and Hessian evaluations.
struct Derivatives<'a> {
    n_vars: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    spouses: Vec<VertexSet>,
    /// Cells with positive weight, as (zero-set A, weight).
    support: Vec<(VertexSet, f64)>,
    /// `first[k][s] = d_{C_k}(A_s)` over the support cells.
    first: Vec<Vec<f64>>,
    params: &'a ConnectedParams,
}

impl<'a> Derivatives<'a> {
    fn new(params: &'a ConnectedParams, weights: &[f64]) -> Result<Self> {
        let cat = params.catalog();
        let g = cat.graph();
        let n_vars = cat.n_vars();
        let full = VertexSet::full(n_vars);
        let q = params.extend_raw();
        let p = crate::mobius::inverse_raw(&q);
        let mut support = Vec::new();
        for (cell, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                if !(p[cell] > 0.0) || !p[cell].is_finite() {
                    return Err(Error::LogOfZero { cell });
                }
                support.push((full.difference(VertexSet::from_bits(cell as u32)), w));
            }
        }
        let spouses: Vec<VertexSet> = cat.sets().iter().map(|&c| g.spouses_unchecked(c)).collect();
        let mut marginal = vec![0.0; 1 << n_vars];
        let first = cat
            .sets()
            .iter()
            .zip(&spouses)
            .map(|(&c, &spo)| {
                let w = full.difference(spo);
                marginal.iter_mut().for_each(|m| *m = 0.0);
                for (cell, &pi) in p.iter().enumerate() {
                    marginal[cell & w.index()] += pi;
                }
                support
                    .iter()
                    .map(|&(a, _)| {
                        let rest = a.difference(c);
                        if spo.is_disjoint(rest) {
                            // X_rest = 0 and X_{W∖rest} = 1.
                            parity_sign(c.difference(a).len())
                                * marginal[w.difference(rest).index()]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Derivatives {
            n_vars,
            p,
            q,
            spouses,
            support,
            first,
            params,
        })
    }

    fn cell_prob(&self, a: VertexSet) -> f64 {
        self.p[VertexSet::full(self.n_vars).difference(a).index()]
    }

    /// `p^W_A`, by whichever of the two alternating or cell sums is shorter.
    fn marginal(&self, a: VertexSet, w: VertexSet) -> f64 {
        let full = VertexSet::full(self.n_vars);
        let free = w.difference(a);
        let outside = full.difference(w);
        if free.len() <= outside.len() {
            free.subsets()
                .map(|s| parity_sign(s.len()) * self.q[a.union(s).index()])
                .sum()
        } else {
            let ones = free.index();
            outside.subsets().map(|s| self.p[ones | s.index()]).sum()
        }
    }

    fn score(&self) -> Vec<f64> {
        self.first
            .iter()
            .map(|d| {
                self.support
                    .iter()
                    .zip(d)
                    .filter(|(_, &dv)| dv != 0.0)
                    .map(|(&(a, w), &dv)| w * dv / self.cell_prob(a))
                    .sum()
            })
            .collect()
    }

    fn hessian(&self) -> DMatrix<f64> {
        let sets = self.params.catalog().sets();
        let full = VertexSet::full(self.n_vars);
        let k = sets.len();
        let mut h = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let (c, cbar) = (sets[i], sets[j]);
                let joint = cbar.is_disjoint(self.spouses[i]);
                let union = c.union(cbar);
                let w_union = full.difference(self.spouses[i].union(self.spouses[j]));
                let mut acc = 0.0;
                for (s, &(a, wt)) in self.support.iter().enumerate() {
                    let (di, dj) = (self.first[i][s], self.first[j][s]);
                    // Both first derivatives nonzero iff both spouse conditions hold.
                    if !(self.supported(i, a) && self.supported(j, a)) {
                        continue;
                    }
                    let pa = self.cell_prob(a);
                    let mut term = -di * dj / (pa * pa);
                    if joint {
                        let m = self.marginal(a.difference(union), w_union);
                        term += parity_sign(union.difference(a).len()) * m / pa;
                    }
                    acc += wt * term;
                }
                h[(i, j)] = acc;
                h[(j, i)] = acc;
            }
        }
        h
    }

    fn supported(&self, k: usize, a: VertexSet) -> bool {
        let c = self.params.catalog().sets()[k];
        self.spouses[k].is_disjoint(a.difference(c))
    }
}

/// `∂ℓ/∂q_C` for every connected set, in catalog order.
pub fn score(params: &ConnectedParams, n: &CountTable) -> Result<Vec<f64>> {
    check_dims(params, n)?;
    Ok(Derivatives::new(params, n.counts())?.score())
}

/// Symmetric matrix of `∂²ℓ/∂q_C ∂q_{C̄}`.
pub fn hessian(params: &ConnectedParams, n: &CountTable) -> Result<DMatrix<f64>> {
    check_dims(params, n)?;
    Ok(Derivatives::new(params, n.counts())?.hessian())
}

/// Observed information `-∂²ℓ` at the given parameters.
pub fn observed_information(params: &ConnectedParams, n: &CountTable) -> Result<DMatrix<f64>> {
    Ok(-hessian(params, n)?)
}

/// Expected information: the observed form with `n^V_A` replaced by `n·p^V_A`.
pub fn expected_information(params: &ConnectedParams, total: f64) -> Result<DMatrix<f64>> {
    let p = params.cell_probs_raw();
    let weights: Vec<f64> = p.iter().map(|&x| total * x.max(0.0)).collect();
    Ok(-Derivatives::new(params, &weights)?.hessian())
}

/// Square roots of the diagonal of the inverse information.
pub fn standard_errors(information: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = information
        .clone()
        .cholesky()
        .ok_or(Error::SingularInformation)?;
    let inv = chol.inverse();
    let se: Vec<f64> = inv.diagonal().iter().map(|v| v.sqrt()).collect();
    if se.iter().all(|v| v.is_finite()) {
        Ok(se)
    } else {
        Err(Error::SingularInformation)
    }
}

fn check_dims(params: &ConnectedParams, n: &CountTable) -> Result<()> {
    if params.catalog().n_vars() != n.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: params.catalog().n_vars(),
            found: n.n_vars(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::ConnectedSetCatalog;
    use crate::mobius::{CellDistribution, ConnectedParams};

    fn catalog(g: &BidirectedGraph) -> Arc<ConnectedSetCatalog> {
        Arc::new(ConnectedSetCatalog::new(g).unwrap())
    }

    #[test]
    fn score_vanishes_at_saturated_mle() {
        let labels = ["a", "b", "c"];
        let g = BidirectedGraph::complete(&labels).unwrap();
        let n = CountTable::new(&labels, vec![5.0, 3.0, 8.0, 1.0, 2.0, 6.0, 4.0, 9.0]).unwrap();
        let params = ConnectedParams::from_distribution(catalog(&g), &n.empirical());
        let s = score(&params, &n).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-9), "{s:?}");
    }

    #[test]
    fn score_vanishes_for_exactly_independent_table() {
        // Dyadic marginals so that n_total · Π P(X_v = i_v) is an integer.
        let p = CellDistribution::product(&[0.5, 0.25, 0.75]);
        let counts: Vec<f64> = p.probs().iter().map(|x| x * 64.0).collect();
        let n = CountTable::unlabeled(counts).unwrap();
        let g = BidirectedGraph::with_vertices(3).unwrap();
        let params = ConnectedParams::from_distribution(catalog(&g), &p);
        let s = score(&params, &n).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-10), "{s:?}");
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let g = BidirectedGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let counts: Vec<f64> = (0..16).map(|i| (i * 7 % 11 + 1) as f64).collect();
        let n = CountTable::unlabeled(counts).unwrap();
        let params = ConnectedParams::from_distribution(catalog(&g), &n.empirical());
        let h = hessian(&params, &n).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn hessian_case_classification() {
        let g = BidirectedGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let s = VertexSet::singleton;
        // q_2 does not occur in p_{{1,2}}... with A = {1}: spo(2) = {1,2,4} meets A∖{2} = {1}.
        assert_eq!(hessian_case(&g, s(0), s(1), s(0)), HessianCase::Zero);
        assert_eq!(hessian_case(&g, s(0), s(0), s(0)), HessianCase::Product);
        // 1 and 4 are non-adjacent.
        assert_eq!(
            hessian_case(&g, s(0), s(3), s(0).union(s(3))),
            HessianCase::ProductPlusJoint
        );
        for a in 0..16u32 {
            let a = VertexSet::from_bits(a);
            for c in [s(0), s(1), s(0).union(s(1))] {
                for cb in [s(2), s(3), s(2).union(s(3))] {
                    assert_eq!(hessian_case(&g, c, cb, a), hessian_case(&g, cb, c, a));
                }
            }
        }
    }

    #[test]
    fn entries_are_zero_when_every_cell_is_case_zero() {
        let g = BidirectedGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let cat = catalog(&g);
        let full = VertexSet::full(4);
        // Counts only on the cells with zero-sets {1,2}, {4} and {1,2,3,4}.
        let observed = [
            VertexSet::from_indices([0, 1]),
            VertexSet::singleton(3),
            full,
        ];
        let mut counts = vec![0.0; 16];
        for (k, a) in observed.iter().enumerate() {
            counts[full.difference(*a).index()] = 3.0 + k as f64;
        }
        let n = CountTable::unlabeled(counts).unwrap();
        let interior: Vec<f64> = (0..16).map(|i| (i * 7 % 11 + 1) as f64).collect();
        let p = CellDistribution::from_weights(interior).unwrap();
        let params = ConnectedParams::from_distribution(cat.clone(), &p);
        let h = hessian(&params, &n).unwrap();
        let mut zero_entries = 0;
        for (i, &c) in cat.sets().iter().enumerate() {
            for (j, &cb) in cat.sets().iter().enumerate() {
                let all_zero = observed
                    .iter()
                    .all(|&a| hessian_case(&g, c, cb, a) == HessianCase::Zero);
                if all_zero {
                    zero_entries += 1;
                    assert_eq!(h[(i, j)], 0.0);
                } else {
                    assert_ne!(h[(i, j)], 0.0, "{c} {cb}");
                }
            }
        }
        assert!(zero_entries > 0);
    }

    #[test]
    fn zero_probability_on_positive_count_is_reported() {
        let g = BidirectedGraph::with_vertices(1).unwrap();
        let params = ConnectedParams::new(catalog(&g), vec![1.0]).unwrap();
        let n = CountTable::unlabeled(vec![1.0, 1.0]).unwrap();
        assert_eq!(score(&params, &n), Err(Error::LogOfZero { cell: 1 }));
    }

    #[test]
    fn information_is_positive_definite_at_saturated_mle() {
        let labels = ["a", "b"];
        let g = BidirectedGraph::complete(&labels).unwrap();
        let n = CountTable::new(&labels, vec![40.0, 10.0, 20.0, 30.0]).unwrap();
        let params = ConnectedParams::from_distribution(catalog(&g), &n.empirical());
        let obs = observed_information(&params, &n).unwrap();
        let exp = expected_information(&params, n.total()).unwrap();
        // At the saturated MLE n_A = n·p_A, so both forms coincide.
        assert!((&obs - &exp).abs().max() < 1e-8);
        let se = standard_errors(&obs).unwrap();
        assert_eq!(se.len(), 3);
        // SE of q_1 = P(X_1 = 0) is the binomial sqrt(q(1-q)/n).
        let q1 = 0.6;
        assert!((se[0] - (q1 * (1.0 - q1) / 100.0f64).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn singular_information_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(standard_errors(&m), Err(Error::SingularInformation));
    }
}

//! Permutation-symmetry models and their intersection with bi-directed graph models.

use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, ConnectedSetCatalog, VertexPermutationGroup, VertexSet};
use crate::icf::{fit_report, FitOptions};
use crate::likelihood::{loglik, lr_test, saturated_loglik, CountTable, FitResult};
use crate::mobius::{CellDistribution, ConnectedParams, MobiusVector};

/// Tolerance on `p_i = p_{σ(i)}` at a combined-model optimum.
pub const SYMMETRY_TOL: f64 = 1e-8;
const MOBIUS_SYMMETRY_TOL: f64 = 1e-10;

/// Partition of `{0,1}^V` into orbits of the cell action of a group.
#[derive(Debug, Clone)]
pub struct CellOrbitIndex {
    group: VertexPermutationGroup,
    orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
}

impl CellOrbitIndex {
    pub fn new(group: &VertexPermutationGroup) -> Self {
        let cells = 1usize << group.degree();
        let mut orbit_of = vec![usize::MAX; cells];
        let mut orbits = Vec::new();
        for i in 0..cells {
            if orbit_of[i] != usize::MAX {
                continue;
            }
            let orbit = group.orbit_of_cell(i);
            for &j in &orbit {
                orbit_of[j] = orbits.len();
            }
            orbits.push(orbit);
        }
        CellOrbitIndex {
            group: group.clone(),
            orbits,
            orbit_of,
        }
    }

    pub fn group(&self) -> &VertexPermutationGroup {
        &self.group
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_of(&self, cell: usize) -> usize {
        self.orbit_of[cell]
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    /// Replaces every entry by its orbit mean.
    pub fn average(&self, values: &[f64]) -> Vec<f64> {
        let means: Vec<f64> = self
            .orbits
            .iter()
            .map(|o| o.iter().map(|&j| values[j]).sum::<f64>() / o.len() as f64)
            .collect();
        (0..values.len()).map(|i| means[self.orbit_of[i]]).collect()
    }
}

fn check_degree(s: &VertexPermutationGroup, n_vars: usize) -> Result<()> {
    if s.degree() != n_vars {
        return Err(Error::DimensionMismatch {
            expected: n_vars,
            found: s.degree(),
        });
    }
    Ok(())
}

fn require_invariant(g: &BidirectedGraph, s: &VertexPermutationGroup) -> Result<()> {
    if g.is_invariant(s)? {
        Ok(())
    } else {
        Err(Error::GraphNotInvariant)
    }
}

/// Counts averaged over cell orbits.
pub fn averaged_counts(n: &CountTable, s: &VertexPermutationGroup) -> Result<CountTable> {
    check_degree(s, n.n_vars())?;
    n.with_counts(CellOrbitIndex::new(s).average(n.counts()))
}

/// MLE of the symmetry model: the orbit-averaged empirical distribution.
pub fn symmetry_mle(n: &CountTable, s: &VertexPermutationGroup) -> Result<CellDistribution> {
    check_degree(s, n.n_vars())?;
    let avg = CellOrbitIndex::new(s).average(n.counts());
    Ok(CellDistribution::from_raw(
        n.n_vars(),
        avg.iter().map(|c| c / n.total()).collect(),
    ))
}

/// Number of cell orbits minus one.
pub fn symmetry_model_dim(s: &VertexPermutationGroup, n_vars: usize) -> Result<usize> {
    check_degree(s, n_vars)?;
    Ok(CellOrbitIndex::new(s).len() - 1)
}

/// Orbits of connected sets, each listed in catalog order, ordered by first member.
pub fn connected_set_orbits(
    g: &BidirectedGraph,
    s: &VertexPermutationGroup,
) -> Result<Vec<Vec<VertexSet>>> {
    check_degree(s, g.n())?;
    require_invariant(g, s)?;
    let catalog = ConnectedSetCatalog::new(g)?;
    let mut seen = vec![false; catalog.len()];
    let mut orbits = Vec::new();
    for (k, &c) in catalog.sets().iter().enumerate() {
        if seen[k] {
            continue;
        }
        let mut orbit = s.orbit_of_set(c);
        orbit.sort_by_key(|d| catalog.position(*d));
        for d in &orbit {
            let pos = catalog
                .position(*d)
                .expect("invariant graph maps connected sets to connected sets");
            seen[pos] = true;
        }
        orbits.push(orbit);
    }
    Ok(orbits)
}

/// Dimension of `B(G) ∩ B(S)`: the number of orbits of connected sets.
pub fn symmetric_independence_dim(
    g: &BidirectedGraph,
    s: &VertexPermutationGroup,
) -> Result<usize> {
    Ok(connected_set_orbits(g, s)?.len())
}

/// Whether `q_C = q_{σ(C)}` for every connected set `C` and every group element.
pub fn check_symmetric_mobius(
    q: &MobiusVector,
    g: &BidirectedGraph,
    s: &VertexPermutationGroup,
) -> Result<bool> {
    check_degree(s, g.n())?;
    if q.n_vars() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: q.n_vars(),
        });
    }
    require_invariant(g, s)?;
    let catalog = ConnectedSetCatalog::new(g)?;
    for &c in catalog.sets() {
        for sigma in s.elements() {
            if (q.get(c) - q.get(sigma.apply_set(c))).abs() > MOBIUS_SYMMETRY_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `max_{i, σ} |p_i - p_{σ(i)}|`.
pub fn symmetry_violation(p: &CellDistribution, s: &VertexPermutationGroup) -> f64 {
    let mut worst = 0.0f64;
    for sigma in s.generators() {
        for i in 0..p.probs().len() {
            worst = worst.max((p.get(i) - p.get(sigma.apply_cell(i))).abs());
        }
    }
    worst
}

/// Fits `B(G) ∩ B(S)` by fitting `B(G)` to the orbit-averaged counts.
///
/// The log-likelihood, dimension and test against the saturated model refer
/// to the original counts. Errors with `NoConvergence` if the fit does not
/// converge.
pub fn combined_fit(
    g: &BidirectedGraph,
    s: &VertexPermutationGroup,
    n: &CountTable,
    opts: &FitOptions,
) -> Result<FitResult> {
    let f = combined_fit_report(g, s, n, opts)?;
    if f.converged {
        Ok(f)
    } else {
        Err(Error::NoConvergence {
            cycles: f.iterations,
        })
    }
}

/// Like [`combined_fit`] but returns non-converged fits.
pub fn combined_fit_report(
    g: &BidirectedGraph,
    s: &VertexPermutationGroup,
    n: &CountTable,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_degree(s, g.n())?;
    require_invariant(g, s)?;
    let averaged = averaged_counts(n, s)?;
    let mut fit = fit_report(g, &averaged, opts)?;
    if s.is_trivial() {
        return Ok(fit);
    }
    let violation = symmetry_violation(&fit.p_hat, s);
    if violation > SYMMETRY_TOL {
        return Err(Error::SymmetryViolatedAtOptimum {
            max_diff: violation,
        });
    }
    let counts = match opts.pseudo_count {
        Some(eps) => n.with_pseudo_count(eps)?,
        None => n.clone(),
    };
    fit.loglik = loglik(&fit.p_hat, &counts)?;
    fit.dim = symmetric_independence_dim(g, s)?;
    let test = lr_test(
        fit.loglik,
        fit.dim,
        saturated_loglik(&counts),
        (1 << g.n()) - 1,
    )?;
    fit.deviance = test.deviance;
    fit.df = test.df;
    fit.p_value = test.p_value;
    Ok(fit)
}

/// Symmetric connected-set parameters with one value per orbit, in orbit order.
pub fn symmetric_params(
    catalog: std::sync::Arc<ConnectedSetCatalog>,
    s: &VertexPermutationGroup,
    orbit_values: &[f64],
) -> Result<ConnectedParams> {
    let orbits = connected_set_orbits(catalog.graph(), s)?;
    if orbits.len() != orbit_values.len() {
        return Err(Error::DimensionMismatch {
            expected: orbits.len(),
            found: orbit_values.len(),
        });
    }
    let mut values = vec![0.0; catalog.len()];
    for (orbit, &x) in orbits.iter().zip(orbit_values) {
        for c in orbit {
            values[catalog.position(*c).expect("connected")] = x;
        }
    }
    ConnectedParams::new(catalog, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Permutation;

    fn twin() -> (BidirectedGraph, VertexPermutationGroup) {
        let g = BidirectedGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let swap = Permutation::from_cycles(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        (g, VertexPermutationGroup::generate(4, vec![swap]).unwrap())
    }

    #[test]
    fn identity_group_orbits_are_cells() {
        let s = VertexPermutationGroup::trivial(3);
        assert_eq!(CellOrbitIndex::new(&s).len(), 8);
        assert_eq!(symmetry_model_dim(&s, 3).unwrap(), 7);
        let n = CountTable::unlabeled(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(symmetry_mle(&n, &s).unwrap().probs(), n.empirical().probs());
    }

    #[test]
    fn twin_orbit_counts() {
        let (g, s) = twin();
        assert_eq!(CellOrbitIndex::new(&s).len(), 10);
        assert_eq!(symmetry_model_dim(&s, 4).unwrap(), 9);
        // Singletons 2, edges 3 ({A1,A2}, {D1,D2} fixed), triples 2, full set 1.
        assert_eq!(symmetric_independence_dim(&g, &s).unwrap(), 8);
        let orbits = connected_set_orbits(&g, &s).unwrap();
        let reciprocal: f64 = orbits
            .iter()
            .map(|o| o.len() as f64 * (1.0 / o.len() as f64))
            .sum();
        assert_eq!(reciprocal, 8.0);
        assert_eq!(orbits.iter().map(Vec::len).sum::<usize>(), 13);
    }

    #[test]
    fn non_invariant_graph_is_rejected() {
        let (_, s) = twin();
        let g = BidirectedGraph::from_edges(4, &[(0, 1), (0, 2)]).unwrap();
        assert_eq!(
            symmetric_independence_dim(&g, &s),
            Err(Error::GraphNotInvariant)
        );
        let n = CountTable::unlabeled(vec![1.0; 16]).unwrap();
        assert!(matches!(
            combined_fit(&g, &s, &n, &FitOptions::default()),
            Err(Error::GraphNotInvariant)
        ));
    }

    #[test]
    fn mle_is_exactly_symmetric() {
        let (_, s) = twin();
        let n = CountTable::unlabeled((0..16).map(|i| (i * 7 % 11 + 1) as f64).collect()).unwrap();
        let p = symmetry_mle(&n, &s).unwrap();
        for sigma in s.elements() {
            for i in 0..16 {
                assert_eq!(p.get(i), p.get(sigma.apply_cell(i)));
            }
        }
    }

    #[test]
    fn identity_combined_equals_plain_fit() {
        let g = BidirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let n = CountTable::unlabeled(vec![5.0, 3.0, 2.0, 8.0, 1.0, 4.0, 6.0, 7.0]).unwrap();
        let opts = FitOptions::default();
        let a = combined_fit(&g, &VertexPermutationGroup::trivial(3), &n, &opts).unwrap();
        let b = crate::icf::icf_fit(&g, &n, &opts).unwrap();
        assert_eq!(a.p_hat.probs(), b.p_hat.probs());
        assert_eq!(a.loglik, b.loglik);
        assert_eq!(a.dim, b.dim);
    }

    #[test]
    fn symmetric_parameters_give_symmetric_cells() {
        let (g, s) = twin();
        let catalog = std::sync::Arc::new(ConnectedSetCatalog::new(&g).unwrap());
        let orbits = connected_set_orbits(&g, &s).unwrap();
        let values: Vec<f64> = orbits
            .iter()
            .map(|o| 0.55f64.powi(o[0].len() as i32))
            .collect();
        let params = symmetric_params(catalog, &s, &values).unwrap();
        let p = crate::mobius::parametrize(&params).unwrap();
        assert!(symmetry_violation(&p, &s) < 1e-15);
        let q = crate::mobius::mobius_forward(&p);
        assert!(check_symmetric_mobius(&q, &g, &s).unwrap());
    }
}

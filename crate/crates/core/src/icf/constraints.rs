use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{ConnectedSetCatalog, VertexSet};
use crate::mobius::CellDistribution;

/// Index of the cell with `X_v = bit` and `X_{-v}` given by the compressed index `r`.
pub(crate) fn cell_index(r: usize, v: usize, bit: usize) -> usize {
    let low = r & ((1 << v) - 1);
    let high = r >> v;
    low | (bit << v) | (high << (v + 1))
}

/// Bitmask of `s ⊆ V ∖ {v}` in the compressed index space of `I_{-v}`.
pub(crate) fn compress(s: VertexSet, v: usize) -> usize {
    let bits = s.bits() as usize;
    let low = bits & ((1 << v) - 1);
    let high = bits >> (v + 1);
    low | (high << v)
}

/// The margin `P(X_{-v} = r)` over the compressed index.
pub(crate) fn margin(p: &CellDistribution, v: usize) -> Vec<f64> {
    let half = 1usize << (p.n_vars() - 1);
    (0..half)
        .map(|r| p.get(cell_index(r, v, 0)) + p.get(cell_index(r, v, 1)))
        .collect()
}

/// Conditional parameters `θ_v(i_{-v}) = P(X_v = 0 | X_{-v} = i_{-v})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTheta {
    pub vertex: usize,
    pub theta: Vec<f64>,
}

impl ConditionalTheta {
    /// Extracts `θ_v` from a distribution with positive `X_{-v}` margin.
    pub fn from_distribution(p: &CellDistribution, v: usize) -> Result<Self> {
        let m = margin(p, v);
        let theta = m
            .iter()
            .enumerate()
            .map(|(r, &mr)| {
                if mr > 0.0 {
                    Ok(p.get(cell_index(r, v, 0)) / mr)
                } else {
                    Err(Error::ZeroConditioningEvent {
                        set: VertexSet::full(p.n_vars()).without(v),
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(ConditionalTheta { vertex: v, theta })
    }
}

/// Linear constraints `Aθ = 0` on `θ_v` with the `X_{-v}` margin held fixed.
/// Row `r` belongs to the disconnected set `D_r ∋ v` with block `C_v(D_r)`.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub vertex: usize,
    pub rows: Vec<(VertexSet, VertexSet)>,
    pub matrix: DMatrix<f64>,
}

impl ConstraintMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// `max_r |(Aθ)_r|`.
    pub fn residual(&self, theta: &[f64]) -> f64 {
        (0..self.matrix.nrows())
            .map(|i| {
                self.matrix
                    .row(i)
                    .iter()
                    .zip(theta)
                    .map(|(a, t)| a * t)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the constraint matrix for vertex `v` under distribution `p`.
///
/// For a configuration `j` of `X_{-v}` with margin `m(j)`, the entry is
/// `m(j)·(1{j_{D∖v} = 0} / P(X_{D∖v} = 0) - 1{j_{C∖v} = 0} / P(X_{C∖v} = 0))`,
/// where an empty conditioning set has probability one.
pub fn build_constraints(
    p: &CellDistribution,
    v: usize,
    catalog: &ConnectedSetCatalog,
) -> Result<ConstraintMatrix> {
    if p.n_vars() != catalog.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: catalog.n_vars(),
            found: p.n_vars(),
        });
    }
    let rows = catalog.disconnected_containing(v)?.to_vec();
    let m = margin(p, v);
    let zero_prob = |mask: usize, set: VertexSet| -> Result<f64> {
        let total: f64 = m
            .iter()
            .enumerate()
            .filter(|(r, _)| r & mask == 0)
            .map(|(_, x)| x)
            .sum();
        if total > 0.0 {
            Ok(total)
        } else {
            Err(Error::ZeroConditioningEvent { set })
        }
    };
    let mut matrix = DMatrix::zeros(rows.len(), m.len());
    for (i, &(d, c)) in rows.iter().enumerate() {
        let d_rest = d.without(v);
        let c_rest = c.without(v);
        let (dm, cm) = (compress(d_rest, v), compress(c_rest, v));
        let pd = zero_prob(dm, d_rest)?;
        let pc = zero_prob(cm, c_rest)?;
        for (r, &mr) in m.iter().enumerate() {
            let mut a = 0.0;
            if r & dm == 0 {
                a += mr / pd;
            }
            if r & cm == 0 {
                a -= mr / pc;
            }
            matrix[(i, r)] = a;
        }
    }
    Ok(ConstraintMatrix {
        vertex: v,
        rows,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::BidirectedGraph;
    use crate::mobius::{parametrize, ConnectedParams};

    #[test]
    fn index_helpers_agree() {
        for v in 0..4 {
            for r in 0..8 {
                for bit in 0..2 {
                    let cell = cell_index(r, v, bit);
                    assert_eq!(cell >> v & 1, bit);
                    let s = VertexSet::from_bits(cell as u32).without(v);
                    assert_eq!(compress(s, v), r);
                }
            }
        }
    }

    #[test]
    fn complete_graph_has_no_rows() {
        let g = BidirectedGraph::complete(&["a", "b", "c"]).unwrap();
        let cat = ConnectedSetCatalog::new(&g).unwrap();
        let a = build_constraints(&CellDistribution::uniform(3), 1, &cat).unwrap();
        assert_eq!(a.n_rows(), 0);
    }

    #[test]
    fn four_cycle_vertex_one_under_uniform() {
        let g = BidirectedGraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let cat = ConnectedSetCatalog::new(&g).unwrap();
        let a = build_constraints(&CellDistribution::uniform(4), 0, &cat).unwrap();
        assert_eq!(
            a.rows,
            vec![(VertexSet::from_indices([0, 3]), VertexSet::singleton(0))]
        );
        // Compressed index over (X2, X3, X4): m(j) = 1/8, P(X4 = 0) = 1/2.
        for r in 0..8 {
            let x4_zero = r & 0b100 == 0;
            let expected = if x4_zero { 0.125 / 0.5 - 0.125 } else { -0.125 };
            assert!((a.matrix[(0, r)] - expected).abs() < 1e-15);
        }
        assert!(a.residual(&[0.5; 8]) < 1e-15);
    }

    #[test]
    fn members_satisfy_their_constraints() {
        let g = BidirectedGraph::from_edges(4, &[(0, 2), (2, 3), (3, 1)]).unwrap();
        let cat = Arc::new(ConnectedSetCatalog::new(&g).unwrap());
        let values: Vec<f64> = cat
            .sets()
            .iter()
            .map(|c| 0.6f64.powi(c.len() as i32) * (1.0 + 0.02 * c.bits() as f64 / 16.0))
            .collect();
        let params = ConnectedParams::new(cat.clone(), values).unwrap();
        let p = parametrize(&params).unwrap();
        for v in 0..4 {
            let a = build_constraints(&p, v, &cat).unwrap();
            let theta = ConditionalTheta::from_distribution(&p, v).unwrap();
            assert!(a.residual(&theta.theta) < 1e-12, "vertex {v}");
        }
    }

    #[test]
    fn zero_conditioning_event_is_reported() {
        let g = BidirectedGraph::from_edges(3, &[(1, 2)]).unwrap();
        let cat = ConnectedSetCatalog::new(&g).unwrap();
        // X_2 = 1 almost surely, so P(X_2 = 0) = 0.
        let p = CellDistribution::new(vec![0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            build_constraints(&p, 0, &cat),
            Err(Error::ZeroConditioningEvent { .. })
        ));
    }
}

//! Coordinate changes between cell probabilities `p`, Möbius parameters
//! `q_A = P(X_A = 0)` and the connected-set parameters of a graph model.
//!
//! Cell index `i` has bit `v` set when variable `v` takes the value 1, so the
//! cell `(0_A, 1_{V∖A})` has index `V ∖ A`. Under this encoding
//! `q_A = Σ_{i ⊆ V∖A} p_i`, and both directions reduce to subset sums over
//! the complemented index, computed in place with `|V|·2^{|V|-1}` additions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, ConnectedSetCatalog, VertexSet, MAX_VERTICES};

/// Entries below this value make a Möbius vector invalid; values in
/// `[-NEGATIVE_TOLERANCE, 0)` are treated as round-off and clamped.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

/// Tolerated deviation of `Σ p_i` from one when validating input.
const SUM_TOLERANCE: f64 = 1e-9;

fn n_vars_of_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidDistribution(format!(
            "length {len} is not a power of two"
        )));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_VERTICES {
        return Err(Error::TooManyVertices {
            n,
            limit: MAX_VERTICES,
        });
    }
    Ok(n)
}

/// A probability vector over the cells `{0,1}^V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDistribution {
    n_vars: usize,
    probs: Vec<f64>,
}

impl CellDistribution {
    /// Validates nonnegativity and normalization.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let n_vars = n_vars_of_len(probs.len())?;
        if let Some((i, &p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "cell {i} has value {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("cells sum to {total}")));
        }
        Ok(CellDistribution { n_vars, probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub(crate) fn from_raw(n_vars: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << n_vars);
        CellDistribution { n_vars, probs }
    }

    pub fn uniform(n_vars: usize) -> Self {
        let size = 1usize << n_vars;
        CellDistribution {
            n_vars,
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(n_vars: usize, cell: usize) -> Self {
        let mut probs = vec![0.0; 1 << n_vars];
        probs[cell] = 1.0;
        CellDistribution { n_vars, probs }
    }

    /// Product of independent Bernoulli variables with `P(X_v = 0) = zero_probs[v]`.
    pub fn product(zero_probs: &[f64]) -> Self {
        let n_vars = zero_probs.len();
        let probs = (0..1usize << n_vars)
            .map(|cell| {
                zero_probs
                    .iter()
                    .enumerate()
                    .map(|(v, &q)| if cell >> v & 1 == 0 { q } else { 1.0 - q })
                    .product()
            })
            .collect();
        CellDistribution { n_vars, probs }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.probs[cell]
    }

    /// Probability of the event `X_A = 0, X_{W∖A} = 1` for `A ⊆ W`, by summing cells.
    pub fn marginal(&self, a: VertexSet, w: VertexSet) -> f64 {
        let ones = w.difference(a).bits() as usize;
        let w = w.bits() as usize;
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| i & w == ones)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &CellDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Möbius parameters `q_A` for every subset, indexed by the subset bitmask.
/// The entry for `∅` is fixed at one.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusVector {
    n_vars: usize,
    q: Vec<f64>,
}

impl MobiusVector {
    /// Takes `q` indexed by subset; `q[0]` is overwritten with one.
    pub fn new(mut q: Vec<f64>) -> Result<Self> {
        let n_vars = n_vars_of_len(q.len())?;
        q[0] = 1.0;
        Ok(MobiusVector { n_vars, q })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn get(&self, a: VertexSet) -> f64 {
        self.q[a.index()]
    }

    /// All entries by subset index, `q_∅ = 1` first.
    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// The simplex vertex `t^(A)`: `t_B = 1` iff `B ⊆ A`.
    pub fn simplex_vertex(n_vars: usize, a: VertexSet) -> Self {
        let q = (0..1usize << n_vars)
            .map(|b| {
                if VertexSet::from_bits(b as u32).is_subset(a) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        MobiusVector { n_vars, q }
    }

    /// `P(X_A = 0, X_{W∖A} = 1) = Σ_{A ⊆ B ⊆ W} (-1)^{|B∖A|} q_B`.
    pub fn marginal(&self, a: VertexSet, w: VertexSet) -> f64 {
        let free = w.difference(a);
        let mut acc = 0.0;
        for s in free.subsets() {
            let term = self.q[a.union(s).index()];
            if s.len() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }
}

/// Superset-sum zeta transform: `f[S] ← Σ_{T ⊇ S} f[T]`.
fn superset_zeta(f: &mut [f64]) {
    let size = f.len();
    let mut bit = 1;
    while bit < size {
        for s in 0..size {
            if s & bit == 0 {
                f[s] += f[s | bit];
            }
        }
        bit <<= 1;
    }
}

/// Superset Möbius transform, the inverse of [`superset_zeta`].
fn superset_mobius(f: &mut [f64]) {
    let size = f.len();
    let mut bit = 1;
    while bit < size {
        for s in 0..size {
            if s & bit == 0 {
                f[s] -= f[s | bit];
            }
        }
        bit <<= 1;
    }
}

/// Reverses the index order, mapping `i` to `full ^ i`.
fn complement_index(f: &mut [f64]) {
    f.reverse();
}

/// `q_A = Σ_{i : i_A = 0} p_i` for all `A`, via the fast transform.
pub fn mobius_forward(p: &CellDistribution) -> MobiusVector {
    let mut q = p.probs.clone();
    complement_index(&mut q);
    superset_zeta(&mut q);
    q[0] = 1.0;
    MobiusVector {
        n_vars: p.n_vars,
        q,
    }
}

/// Alternating sums without any range check.
pub(crate) fn inverse_raw(q: &[f64]) -> Vec<f64> {
    let mut p = q.to_vec();
    p[0] = 1.0;
    superset_mobius(&mut p);
    complement_index(&mut p);
    p
}

/// Recovers `p` from `q`. Round-off negatives down to `-1e-10` are clamped;
/// anything below is reported as [`Error::OutsideSimplex`].
pub fn mobius_inverse(q: &MobiusVector) -> Result<CellDistribution> {
    let mut p = inverse_raw(&q.q);
    let mut clamped = false;
    for (cell, v) in p.iter_mut().enumerate() {
        if !v.is_finite() || *v < -NEGATIVE_TOLERANCE {
            return Err(Error::OutsideSimplex { cell, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
            clamped = true;
        }
    }
    if clamped {
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
    }
    Ok(CellDistribution {
        n_vars: q.n_vars,
        probs: p,
    })
}

/// Parameters `q_C` for the connected sets of a graph, in catalog order.
#[derive(Debug, Clone)]
pub struct ConnectedParams {
    catalog: Arc<ConnectedSetCatalog>,
    values: Vec<f64>,
}

impl ConnectedParams {
    pub fn new(catalog: Arc<ConnectedSetCatalog>, values: Vec<f64>) -> Result<Self> {
        if values.len() != catalog.len() {
            return Err(Error::DimensionMismatch {
                expected: catalog.len(),
                found: values.len(),
            });
        }
        Ok(ConnectedParams { catalog, values })
    }

    /// Reads `q_C` off a distribution (not necessarily in the model).
    pub fn from_distribution(catalog: Arc<ConnectedSetCatalog>, p: &CellDistribution) -> Self {
        Self::from_mobius(catalog, &mobius_forward(p))
    }

    pub fn from_mobius(catalog: Arc<ConnectedSetCatalog>, q: &MobiusVector) -> Self {
        let values = catalog.sets().iter().map(|&c| q.get(c)).collect();
        ConnectedParams { catalog, values }
    }

    /// `q_C = 2^{-|C|}`, the parameters of the uniform distribution.
    pub fn uniform(catalog: Arc<ConnectedSetCatalog>) -> Self {
        let values = catalog
            .sets()
            .iter()
            .map(|c| 0.5f64.powi(c.len() as i32))
            .collect();
        ConnectedParams { catalog, values }
    }

    pub fn catalog(&self) -> &Arc<ConnectedSetCatalog> {
        &self.catalog
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, c: VertexSet) -> Option<f64> {
        self.catalog.position(c).map(|k| self.values[k])
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.catalog.clone(), values)
    }

    /// Full-lattice `q` with disconnected sets set to products over their blocks.
    pub(crate) fn extend_raw(&self) -> Vec<f64> {
        let cat = &self.catalog;
        let size = 1usize << cat.n_vars();
        let mut q = vec![0.0; size];
        q[0] = 1.0;
        for (c, &v) in cat.sets().iter().zip(&self.values) {
            q[c.index()] = v;
        }
        // Increasing numeric order visits D ∖ first_block(D) before D.
        for d in 1..size {
            let ds = VertexSet::from_bits(d as u32);
            let block = cat.first_block(ds);
            if block != ds {
                q[d] = q[block.index()] * q[ds.difference(block).index()];
            }
        }
        q
    }

    /// Formal cell probabilities of the multilinear parametrization, no range check.
    pub(crate) fn cell_probs_raw(&self) -> Vec<f64> {
        inverse_raw(&self.extend_raw())
    }
}

/// Extends connected-set parameters to every subset through `q_D = Π_j q_{C_j}`.
pub fn extend_connected(params: &ConnectedParams) -> MobiusVector {
    MobiusVector {
        n_vars: params.catalog.n_vars(),
        q: params.extend_raw(),
    }
}

/// The Möbius parametrization `ν_G`; fails when the parameters do not
/// describe a probability distribution.
pub fn parametrize(params: &ConnectedParams) -> Result<CellDistribution> {
    mobius_inverse(&extend_connected(params))
}

/// Largest factorization residuals `r_D = q_D - Π q_{C_j}` of a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub max_residual: f64,
    pub member: bool,
    /// Residuals above the tolerance, in numeric order of `D`.
    pub violations: Vec<(VertexSet, f64)>,
}

pub fn check_membership(
    p: &CellDistribution,
    g: &BidirectedGraph,
    tol: f64,
) -> Result<MembershipReport> {
    if p.n_vars() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: p.n_vars(),
        });
    }
    let catalog = ConnectedSetCatalog::new(g)?;
    Ok(check_membership_with(p, &catalog, tol))
}

pub fn check_membership_with(
    p: &CellDistribution,
    catalog: &ConnectedSetCatalog,
    tol: f64,
) -> MembershipReport {
    let q = mobius_forward(p);
    let mut max_residual: f64 = 0.0;
    let mut violations = Vec::new();
    for d in 1..q.q.len() {
        let ds = VertexSet::from_bits(d as u32);
        if catalog.is_connected(ds) {
            continue;
        }
        let product: f64 = catalog.blocks(ds).iter().map(|b| q.get(*b)).product();
        let r = q.q[d] - product;
        max_residual = max_residual.max(r.abs());
        if r.abs() > tol {
            violations.push((ds, r));
        }
    }
    MembershipReport {
        max_residual,
        member: max_residual <= tol,
        violations,
    }
}

/// Dependence ratios `τ_A = q_A / Π_{v ∈ A} q_v` for `|A| ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceRatios {
    pub ratios: Vec<(VertexSet, f64)>,
}

impl DependenceRatios {
    pub fn get(&self, a: VertexSet) -> Option<f64> {
        self.ratios.iter().find(|(s, _)| *s == a).map(|&(_, t)| t)
    }
}

pub fn dependence_ratios(q: &MobiusVector) -> Result<DependenceRatios> {
    let n = q.n_vars;
    if let Some(v) = (0..n).find(|&v| q.get(VertexSet::singleton(v)) <= 0.0) {
        return Err(Error::ZeroMarginal(v));
    }
    let mut ratios: Vec<(VertexSet, f64)> = (1..1u32 << n)
        .map(VertexSet::from_bits)
        .filter(|a| a.len() >= 2)
        .map(|a| {
            let denom: f64 = a.iter().map(|v| q.get(VertexSet::singleton(v))).product();
            (a, q.get(a) / denom)
        })
        .collect();
    ratios.sort_by_key(|(a, _)| (a.len(), a.bits()));
    Ok(DependenceRatios { ratios })
}

/// Swaps the two labels of variable `v`.
pub fn flip_labels(p: &CellDistribution, v: usize) -> CellDistribution {
    let probs = (0..p.probs.len()).map(|i| p.probs[i ^ (1 << v)]).collect();
    CellDistribution {
        n_vars: p.n_vars,
        probs,
    }
}

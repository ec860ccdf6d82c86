//! Bi-directed graphs over at most [`MAX_VERTICES`] vertices, with vertex
//! subsets encoded as bitmasks.
//!
//! Bit `v` of a [`VertexSet`] stands for the vertex with index `v`. The same
//! encoding indexes cells of the binary table: bit `v` of a cell index is the
//! value taken by variable `v`.

mod catalog;
mod group;
mod union_find;

use std::fmt;

pub use catalog::{ConnectedSetCatalog, DisconnectedPartition};
pub use group::{Permutation, VertexPermutationGroup, MAX_GROUP_ORDER};
pub use union_find::UnionFind;

use crate::error::{Error, Result};

/// Hard limit on the number of vertices; tables of size `2^|V|` are materialized.
pub const MAX_VERTICES: usize = 20;

/// A subset of the vertex set, one bit per vertex index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexSet(u32);

impl VertexSet {
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn from_bits(bits: u32) -> Self {
        VertexSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Bits as a table index.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn singleton(v: usize) -> Self {
        VertexSet(1 << v)
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 32 {
            VertexSet(u32::MAX)
        } else {
            VertexSet((1u32 << n) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSet(iter.into_iter().fold(0, |acc, v| acc | (1 << v)))
    }

    pub fn contains(self, v: usize) -> bool {
        v < 32 && self.0 >> v & 1 == 1
    }

    pub fn with(self, v: usize) -> Self {
        VertexSet(self.0 | (1 << v))
    }

    pub fn without(self, v: usize) -> Self {
        VertexSet(self.0 & !(1 << v))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        VertexSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        VertexSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        VertexSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest member, if any.
    pub fn min(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    /// All subsets of `self`, including `∅` and `self`, in increasing numeric order.
    pub fn subsets(self) -> impl Iterator<Item = VertexSet> {
        let mask = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask {
                None
            } else {
                Some((cur | !mask).wrapping_add(1) & mask)
            };
            Some(VertexSet(cur))
        })
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, v) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

/// An undirected (bi-directed) simple graph with labelled vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidirectedGraph {
    labels: Vec<String>,
    adj: Vec<VertexSet>,
}

impl BidirectedGraph {
    /// A graph without edges on the given labels.
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.len() > MAX_VERTICES {
            return Err(Error::TooManyVertices {
                n: labels.len(),
                limit: MAX_VERTICES,
            });
        }
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let n = labels.len();
        Ok(BidirectedGraph {
            labels,
            adj: vec![VertexSet::EMPTY; n],
        })
    }

    /// Unlabelled graph on `n` vertices named `1..=n`.
    pub fn with_vertices(n: usize) -> Result<Self> {
        let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        Self::new(&labels)
    }

    /// Graph on `n` vertices named `1..=n` with 0-based edge endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::with_vertices(n)?;
        for &(v, w) in edges {
            g.add_edge(v, w)?;
        }
        Ok(g)
    }

    pub fn from_labeled_edges<S: AsRef<str>>(labels: &[S], edges: &[(&str, &str)]) -> Result<Self> {
        let mut g = Self::new(labels)?;
        for &(a, b) in edges {
            let v = g.index_of(a)?;
            let w = g.index_of(b)?;
            g.add_edge(v, w)?;
        }
        Ok(g)
    }

    pub fn complete<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut g = Self::new(labels)?;
        let n = g.n();
        for v in 0..n {
            g.adj[v] = VertexSet::full(n).without(v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn full_set(&self) -> VertexSet {
        VertexSet::full(self.n())
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                index: v,
                n: self.n(),
            })
        }
    }

    pub(crate) fn check_set(&self, a: VertexSet) -> Result<()> {
        if a.is_subset(self.full_set()) {
            Ok(())
        } else {
            Err(Error::SetOutOfRange(a))
        }
    }

    pub fn add_edge(&mut self, v: usize, w: usize) -> Result<()> {
        self.check_vertex(v)?;
        self.check_vertex(w)?;
        if v == w {
            return Err(Error::SelfLoop(self.labels[v].clone()));
        }
        self.adj[v] = self.adj[v].with(w);
        self.adj[w] = self.adj[w].with(v);
        Ok(())
    }

    pub fn remove_edge(&mut self, v: usize, w: usize) {
        self.adj[v] = self.adj[v].without(w);
        self.adj[w] = self.adj[w].without(v);
    }

    /// Copy of the graph with the edge `v <-> w` removed.
    pub fn without_edge(&self, v: usize, w: usize) -> Self {
        let mut g = self.clone();
        g.remove_edge(v, w);
        g
    }

    pub fn has_edge(&self, v: usize, w: usize) -> bool {
        v < self.n() && self.adj[v].contains(w)
    }

    pub fn neighbors(&self, v: usize) -> VertexSet {
        self.adj[v]
    }

    /// Edges as pairs `(v, w)` with `v < w`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.n() {
            for w in self.adj[v].iter().filter(|&w| w > v) {
                out.push((v, w));
            }
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// `spo(A)`: `A` together with every vertex adjacent to a member of `A`.
    pub fn spouse_set(&self, a: VertexSet) -> Result<VertexSet> {
        self.check_set(a)?;
        Ok(self.spouses_unchecked(a))
    }

    pub(crate) fn spouses_unchecked(&self, a: VertexSet) -> VertexSet {
        a.iter().fold(a, |acc, v| acc.union(self.adj[v]))
    }

    /// Whether the induced subgraph on `a` is connected. The empty set is not.
    pub fn is_connected(&self, a: VertexSet) -> Result<bool> {
        self.check_set(a)?;
        Ok(self.connected_unchecked(a))
    }

    pub(crate) fn connected_unchecked(&self, a: VertexSet) -> bool {
        match a.min() {
            None => false,
            Some(v) => self.component_within(a, v) == a,
        }
    }

    /// Inclusion-maximal connected subset of `a` containing `v` (with `v ∈ a`).
    pub(crate) fn component_within(&self, a: VertexSet, v: usize) -> VertexSet {
        let mut comp = VertexSet::singleton(v);
        let mut frontier = comp;
        while !frontier.is_empty() {
            let grown = frontier
                .iter()
                .fold(VertexSet::EMPTY, |acc, u| acc.union(self.adj[u]))
                .intersection(a)
                .difference(comp);
            comp = comp.union(grown);
            frontier = grown;
        }
        comp
    }

    /// Partition of a nonempty set into the maximal connected components of
    /// its induced subgraph, computed by merging the endpoints of every edge
    /// inside `a`. Blocks are ordered by their minimum member.
    pub fn maximal_connected_partition(&self, a: VertexSet) -> Result<DisconnectedPartition> {
        self.check_set(a)?;
        if a.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut uf = UnionFind::new(self.n());
        for v in a.iter() {
            for w in self.adj[v].intersection(a).iter().filter(|&w| w > v) {
                uf.union(v, w);
            }
        }
        let mut blocks: Vec<VertexSet> = Vec::new();
        let mut roots: Vec<usize> = Vec::new();
        for v in a.iter() {
            let r = uf.find(v);
            match roots.iter().position(|&x| x == r) {
                Some(k) => blocks[k] = blocks[k].with(v),
                None => {
                    roots.push(r);
                    blocks.push(VertexSet::singleton(v));
                }
            }
        }
        Ok(DisconnectedPartition { set: a, blocks })
    }

    /// Whether every two members of `a` are adjacent.
    pub fn is_complete_set(&self, a: VertexSet) -> bool {
        a.iter().all(|v| a.without(v).is_subset(self.adj[v]))
    }

    /// Number of nonempty complete sets (cliques), singletons included.
    pub fn count_complete_sets(&self) -> usize {
        // Extend cliques one vertex at a time, always adding a larger index.
        fn grow(g: &BidirectedGraph, clique: VertexSet, candidates: VertexSet) -> usize {
            candidates
                .iter()
                .map(|v| {
                    let next = candidates.intersection(g.adj[v]);
                    let next = VertexSet::from_bits(next.bits() & !((2u32 << v) - 1));
                    1 + grow(g, clique.with(v), next)
                })
                .sum()
        }
        grow(self, VertexSet::EMPTY, self.full_set())
    }

    /// Whether every permutation in the group maps the edge set onto itself.
    pub fn is_invariant(&self, group: &VertexPermutationGroup) -> Result<bool> {
        if group.degree() != self.n() {
            return Err(Error::NotAPermutation(format!(
                "group acts on {} points but the graph has {} vertices",
                group.degree(),
                self.n()
            )));
        }
        Ok(group.generators().iter().all(|s| {
            self.edges()
                .iter()
                .all(|&(v, w)| self.has_edge(s.apply(v), s.apply(w)))
        }))
    }
}

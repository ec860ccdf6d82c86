use std::sync::OnceLock;

use super::{BidirectedGraph, VertexSet, MAX_VERTICES};
use crate::error::{Error, Result};

const NOT_CONNECTED: u32 = u32::MAX;

/// A set together with its maximal connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisconnectedPartition {
    pub set: VertexSet,
    /// Components ordered by minimum member.
    pub blocks: Vec<VertexSet>,
}

impl DisconnectedPartition {
    pub fn is_connected(&self) -> bool {
        self.blocks.len() == 1
    }

    /// The block containing `v`, if `v` is in the set.
    pub fn block_of(&self, v: usize) -> Option<VertexSet> {
        self.blocks.iter().copied().find(|b| b.contains(v))
    }
}

/// All nonempty connected sets of a graph, ordered by cardinality and then
/// by numeric subset value, with dense lookup tables over the subset lattice.
#[derive(Debug)]
pub struct ConnectedSetCatalog {
    graph: BidirectedGraph,
    sets: Vec<VertexSet>,
    position: Vec<u32>,
    // first_block[D]: component of D containing min(D); ∅ for D = ∅.
    first_block: Vec<VertexSet>,
    disconnected: Vec<OnceLock<Vec<(VertexSet, VertexSet)>>>,
}

impl Clone for ConnectedSetCatalog {
    fn clone(&self) -> Self {
        ConnectedSetCatalog {
            graph: self.graph.clone(),
            sets: self.sets.clone(),
            position: self.position.clone(),
            first_block: self.first_block.clone(),
            disconnected: (0..self.graph.n()).map(|_| OnceLock::new()).collect(),
        }
    }
}

impl ConnectedSetCatalog {
    pub fn new(graph: &BidirectedGraph) -> Result<Self> {
        Self::with_limit(graph, MAX_VERTICES)
    }

    pub fn with_limit(graph: &BidirectedGraph, limit: usize) -> Result<Self> {
        let n = graph.n();
        if n > limit.min(MAX_VERTICES) {
            return Err(Error::TooManyVertices {
                n,
                limit: limit.min(MAX_VERTICES),
            });
        }
        let size = 1usize << n;
        let mut first_block = vec![VertexSet::EMPTY; size];
        let mut connected = Vec::new();
        for bits in 1..size {
            let d = VertexSet::from_bits(bits as u32);
            let v = d.min().expect("nonempty");
            let block = graph.component_within(d, v);
            first_block[bits] = block;
            if block == d {
                connected.push(d);
            }
        }
        connected.sort_by_key(|s| (s.len(), s.bits()));
        let mut position = vec![NOT_CONNECTED; size];
        for (k, s) in connected.iter().enumerate() {
            position[s.index()] = k as u32;
        }
        Ok(ConnectedSetCatalog {
            graph: graph.clone(),
            sets: connected,
            position,
            first_block,
            disconnected: (0..n).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn graph(&self) -> &BidirectedGraph {
        &self.graph
    }

    pub fn n_vars(&self) -> usize {
        self.graph.n()
    }

    /// Number of connected sets, the dimension of the model.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[VertexSet] {
        &self.sets
    }

    pub fn position(&self, a: VertexSet) -> Option<usize> {
        match self.position.get(a.index()) {
            Some(&p) if p != NOT_CONNECTED => Some(p as usize),
            _ => None,
        }
    }

    pub fn is_connected(&self, a: VertexSet) -> bool {
        self.position(a).is_some()
    }

    /// The component of `d` containing its smallest member.
    pub fn first_block(&self, d: VertexSet) -> VertexSet {
        self.first_block[d.index()]
    }

    /// Maximal connected components of a nonempty `d`, ordered by minimum member.
    pub fn blocks(&self, d: VertexSet) -> Vec<VertexSet> {
        let mut rest = d;
        let mut out = Vec::new();
        while !rest.is_empty() {
            let b = self.first_block(rest);
            out.push(b);
            rest = rest.difference(b);
        }
        out
    }

    /// Every disconnected `D ∋ v` paired with `C_v(D)`, the maximal connected
    /// subset of `D` containing `v`. Ordered by the numeric value of `D`;
    /// computed on first use and cached.
    pub fn disconnected_containing(&self, v: usize) -> Result<&[(VertexSet, VertexSet)]> {
        if v >= self.n_vars() {
            return Err(Error::VertexOutOfRange {
                index: v,
                n: self.n_vars(),
            });
        }
        Ok(self.disconnected[v].get_or_init(|| {
            let others = self.graph.full_set().without(v);
            others
                .subsets()
                .map(|s| s.with(v))
                .filter(|&d| !self.is_connected(d))
                .map(|d| (d, self.graph.component_within(d, v)))
                .collect()
        }))
    }
}

use std::collections::{BTreeSet, HashSet, VecDeque};

use super::VertexSet;
use crate::error::{Error, Result};

/// Upper bound on the order of an expanded permutation group.
pub const MAX_GROUP_ORDER: usize = 1 << 16;

/// A bijection of `{0, .., n-1}`, stored as its image table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    /// `images[v]` is the image of `v`.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &w in &images {
            if w >= n || seen[w] {
                return Err(Error::NotAPermutation(format!("{images:?}")));
            }
            seen[w] = true;
        }
        Ok(Permutation(images))
    }

    /// Builds a permutation on `n` points from disjoint cycles.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut moved = vec![false; n];
        for cycle in cycles {
            for (k, &v) in cycle.iter().enumerate() {
                if v >= n || moved[v] {
                    return Err(Error::NotAPermutation(format!("cycles {cycles:?}")));
                }
                moved[v] = true;
                images[v] = cycle[(k + 1) % cycle.len()];
            }
        }
        Permutation::new(images)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(v, &w)| v == w)
    }

    /// `(self ∘ other)(v) = self(other(v))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&w| self.0[w]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (v, &w) in self.0.iter().enumerate() {
            inv[w] = v;
        }
        Permutation(inv)
    }

    /// Image `σ(C) = {σ(v) : v ∈ C}` of a vertex set.
    pub fn apply_set(&self, c: VertexSet) -> VertexSet {
        VertexSet::from_indices(c.iter().map(|v| self.0[v]))
    }

    /// Action on cells, `σ(i) = (i_{σ(v)} | v ∈ V)`.
    pub fn apply_cell(&self, cell: usize) -> usize {
        (0..self.0.len()).fold(0, |acc, v| acc | ((cell >> self.0[v] & 1) << v))
    }

    /// Disjoint cycles of length at least two, each starting at its minimum.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.0.len()];
        let mut out = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] || self.0[start] == start {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut v = self.0[start];
            while v != start {
                seen[v] = true;
                cycle.push(v);
                v = self.0[v];
            }
            out.push(cycle);
        }
        out
    }
}

/// A permutation group on the vertex indices, kept both as generators and
/// as its fully expanded element list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPermutationGroup {
    degree: usize,
    generators: Vec<Permutation>,
    elements: Vec<Permutation>,
}

impl VertexPermutationGroup {
    pub fn trivial(n: usize) -> Self {
        VertexPermutationGroup {
            degree: n,
            generators: Vec::new(),
            elements: vec![Permutation::identity(n)],
        }
    }

    /// Closure of the generators under composition.
    pub fn generate(n: usize, generators: Vec<Permutation>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.degree() != n) {
            return Err(Error::NotAPermutation(format!(
                "generator {:?} does not act on {n} points",
                g.images()
            )));
        }
        let id = Permutation::identity(n);
        let mut seen: HashSet<Permutation> = HashSet::from([id.clone()]);
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in &generators {
                let y = g.compose(&x);
                if seen.insert(y.clone()) {
                    if seen.len() > MAX_GROUP_ORDER {
                        return Err(Error::GroupTooLarge {
                            limit: MAX_GROUP_ORDER,
                        });
                    }
                    queue.push_back(y);
                }
            }
        }
        let mut elements: Vec<Permutation> = seen.into_iter().collect();
        elements.sort();
        Ok(VertexPermutationGroup {
            degree: n,
            generators,
            elements,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// `S(C)`: distinct images of `c`, in numeric order.
    pub fn orbit_of_set(&self, c: VertexSet) -> Vec<VertexSet> {
        let orbit: BTreeSet<VertexSet> = self.elements.iter().map(|s| s.apply_set(c)).collect();
        orbit.into_iter().collect()
    }

    /// `S(i)`: distinct images of a cell, in numeric order.
    pub fn orbit_of_cell(&self, cell: usize) -> Vec<usize> {
        let orbit: BTreeSet<usize> = self.elements.iter().map(|s| s.apply_cell(cell)).collect();
        orbit.into_iter().collect()
    }
}

//! Bundled example data: a twin study on alcoholism and depression, and a
//! social survey on trust and confidence in institutions.

use crate::graph::{BidirectedGraph, Permutation, VertexPermutationGroup};
use crate::likelihood::CountTable;

pub const TWIN_LABELS: [&str; 4] = ["A1", "A2", "D1", "D2"];

/// Rows `(A1, A2)` = 00, 01, 10, 11; columns `(D1, D2)` = 00, 01, 10, 11.
const TWIN_COUNTS: [[u32; 4]; 4] = [
    [288, 80, 92, 51],
    [15, 9, 7, 10],
    [8, 4, 8, 9],
    [3, 2, 4, 7],
];

/// Twin pairs: alcoholism `A` and depression `D` for each twin, 1 = present.
pub fn twin_counts() -> CountTable {
    let mut counts = vec![0.0; 16];
    for (row, values) in TWIN_COUNTS.iter().enumerate() {
        let (a1, a2) = (row >> 1, row & 1);
        for (col, &c) in values.iter().enumerate() {
            let (d1, d2) = (col >> 1, col & 1);
            counts[a1 | a2 << 1 | d1 << 2 | d2 << 3] = c as f64;
        }
    }
    CountTable::new(&TWIN_LABELS, counts).expect("embedded table is valid")
}

/// Four-cycle missing `A1 <-> D2` and `A2 <-> D1`.
pub fn twin_graph() -> BidirectedGraph {
    BidirectedGraph::from_labeled_edges(
        &TWIN_LABELS,
        &[("A1", "A2"), ("A1", "D1"), ("A2", "D2"), ("D1", "D2")],
    )
    .expect("embedded graph is valid")
}

/// Exchanges the two twins.
pub fn twin_group() -> VertexPermutationGroup {
    let swap = Permutation::from_cycles(4, &[vec![0, 1], vec![2, 3]]).expect("valid cycles");
    VertexPermutationGroup::generate(4, vec![swap]).expect("order two")
}

pub const TRUST_LABELS: [&str; 7] = [
    "ConBus",
    "ConClerg",
    "ConLegis",
    "MemChurch",
    "MemUnion",
    "Helpful",
    "Trust",
];

/// Rows run over (ConBus, ConClerg, ConLegis, MemChurch, MemUnion) from
/// all-Yes to all-No with the last variable fastest; columns are
/// (Helpful, Trust) = YY, YN, NY, NN.
const TRUST_COUNTS: [[u32; 4]; 32] = [
    [18, 4, 5, 5],
    [79, 47, 17, 30],
    [8, 9, 1, 15],
    [88, 55, 22, 79],
    [22, 11, 10, 13],
    [194, 95, 33, 77],
    [31, 10, 13, 23],
    [179, 82, 58, 122],
    [7, 5, 1, 3],
    [40, 27, 11, 23],
    [9, 10, 1, 12],
    [68, 56, 33, 73],
    [15, 13, 6, 14],
    [188, 117, 52, 100],
    [32, 28, 22, 35],
    [366, 185, 120, 312],
    [7, 5, 2, 6],
    [62, 32, 11, 48],
    [5, 9, 2, 12],
    [38, 37, 11, 64],
    [40, 26, 17, 34],
    [270, 187, 73, 281],
    [25, 33, 11, 50],
    [202, 216, 84, 356],
    [5, 2, 3, 11],
    [51, 32, 17, 59],
    [15, 18, 7, 33],
    [104, 79, 40, 172],
    [74, 62, 27, 108],
    [603, 469, 177, 654],
    [199, 181, 84, 305],
    [1002, 920, 460, 1818],
];

/// Survey responses coded Yes = 1, No = 0.
pub fn trust_counts() -> CountTable {
    let mut counts = vec![0.0; 128];
    for (row, values) in TRUST_COUNTS.iter().enumerate() {
        let mut base = 0;
        for v in 0..5 {
            // Row bit 4 - v is 0 for Yes.
            let yes = (row >> (4 - v)) & 1 == 0;
            if yes {
                base |= 1 << v;
            }
        }
        for (col, &c) in values.iter().enumerate() {
            let helpful = col < 2;
            let trust = col % 2 == 0;
            let cell = base | (helpful as usize) << 5 | (trust as usize) << 6;
            counts[cell] = c as f64;
        }
    }
    CountTable::new(&TRUST_LABELS, counts).expect("embedded table is valid")
}

pub const TRUST_EDGES: [(&str, &str); 14] = [
    ("ConBus", "MemChurch"),
    ("ConBus", "Helpful"),
    ("ConBus", "Trust"),
    ("ConBus", "ConLegis"),
    ("ConBus", "ConClerg"),
    ("ConBus", "MemUnion"),
    ("MemChurch", "Helpful"),
    ("MemChurch", "ConClerg"),
    ("MemChurch", "Trust"),
    ("MemChurch", "MemUnion"),
    ("ConClerg", "Helpful"),
    ("ConClerg", "Trust"),
    ("ConClerg", "ConLegis"),
    ("Trust", "Helpful"),
];

/// Selected bi-directed graph for the survey data.
pub fn trust_graph() -> BidirectedGraph {
    BidirectedGraph::from_labeled_edges(&TRUST_LABELS, &TRUST_EDGES)
        .expect("embedded graph is valid")
}

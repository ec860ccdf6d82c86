mod common;

use binmarg::icf::{build_constraints, solve_inner, ConditionalTheta, FitOptions, InnerMethod};
use binmarg::{BidirectedGraph, CellDistribution, ConnectedSetCatalog};
use common::*;
use rand::Rng;

fn check_instance(g: &BidirectedGraph, seed: u64, method: InnerMethod) -> f64 {
    let mut r = rng(seed);
    let q = random_interior(&mut r, g, 0.02);
    let p = CellDistribution::new(naive_parametrize(g, &q)).unwrap();
    let catalog = ConnectedSetCatalog::new(g).unwrap();
    let nv = g.n();
    let mut worst = 0.0f64;
    for v in 0..nv {
        let a = build_constraints(&p, v, &catalog).unwrap();
        let half = 1 << (nv - 1);
        let n0: Vec<f64> = (0..half).map(|_| r.random_range(1..50) as f64).collect();
        let n1: Vec<f64> = (0..half).map(|_| r.random_range(1..50) as f64).collect();
        let start = ConditionalTheta::from_distribution(&p, v).unwrap();
        let opts = FitOptions {
            inner_method: method,
            max_inner_iters: 20_000,
            tol_inner: 1e-11,
            ..FitOptions::default()
        }
        .inner();
        let sol = solve_inner(&start, &a, &n0, &n1, &opts).unwrap();
        let oracle = penalty_inner(&a.matrix, &n0, &n1);
        for (x, y) in sol.theta.theta.iter().zip(&oracle) {
            worst = worst.max((x - y).abs());
        }
        assert!(a.residual(&sol.theta.theta) < 1e-10);
    }
    worst
}

#[test]
fn newton_inner_matches_penalty_oracle_on_three_variables() {
    let graphs = [
        BidirectedGraph::from_edges(3, &[(0, 1)]).unwrap(),
        BidirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap(),
        BidirectedGraph::from_edges(3, &[(0, 2), (1, 2)]).unwrap(),
        BidirectedGraph::with_vertices(3).unwrap(),
    ];
    for (k, g) in graphs.iter().enumerate() {
        for seed in 0..5 {
            let err = check_instance(g, 100 * k as u64 + seed, InnerMethod::ProjectedNewton);
            assert!(err < 1e-6, "graph {k} seed {seed}: max |Δθ| {err:.2e}");
        }
    }
}

#[test]
fn gradient_projection_inner_matches_penalty_oracle() {
    let g = BidirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    for seed in 0..5 {
        let err = check_instance(&g, 900 + seed, InnerMethod::GradientProjection);
        assert!(err < 1e-6, "seed {seed}: max |Δθ| {err:.2e}");
    }
}

#[test]
fn four_cycle_inner_matches_penalty_oracle() {
    let g = BidirectedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    for seed in 0..3 {
        let err = check_instance(&g, 500 + seed, InnerMethod::ProjectedNewton);
        assert!(err < 1e-6, "seed {seed}: max |Δθ| {err:.2e}");
    }
}

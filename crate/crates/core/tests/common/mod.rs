//! Independent reference implementations used as test oracles. Nothing here
//! calls the transforms or fitters under test.
#![allow(dead_code)]

use binmarg::{BidirectedGraph, CountTable};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connectivity of `set` by breadth-first search over `has_edge`.
pub fn connected(g: &BidirectedGraph, set: u32) -> bool {
    if set == 0 {
        return false;
    }
    let start = set.trailing_zeros() as usize;
    let mut reached = 1u32 << start;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for w in 0..g.n() {
            if set >> w & 1 == 1 && reached >> w & 1 == 0 && g.has_edge(v, w) {
                reached |= 1 << w;
                stack.push(w);
            }
        }
    }
    reached == set
}

/// Connected components of `set`, each as a bitmask.
pub fn components(g: &BidirectedGraph, set: u32) -> Vec<u32> {
    let mut rest = set;
    let mut out = Vec::new();
    while rest != 0 {
        let start = rest.trailing_zeros() as usize;
        let mut comp = 1u32 << start;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for w in 0..g.n() {
                if rest >> w & 1 == 1 && comp >> w & 1 == 0 && g.has_edge(v, w) {
                    comp |= 1 << w;
                    stack.push(w);
                }
            }
        }
        out.push(comp);
        rest &= !comp;
    }
    out
}

pub fn connected_sets(g: &BidirectedGraph) -> Vec<u32> {
    (1u32..1 << g.n()).filter(|&s| connected(g, s)).collect()
}

/// `q_A = Σ_{i : i_A = 0} p_i` by direct summation.
pub fn naive_forward(p: &[f64]) -> Vec<f64> {
    let k = p.len();
    (0..k)
        .map(|a| (0..k).filter(|i| i & a == 0).map(|i| p[i]).sum())
        .collect()
}

/// `p_i = Σ_{B ⊆ V∖A} (-1)^{|B|} q_{A∪B}` with `A` the zero set of `i`.
pub fn naive_inverse(q: &[f64]) -> Vec<f64> {
    let k = q.len();
    let full = k - 1;
    (0..k)
        .map(|i| {
            let a = full & !i;
            let rest = full & !a;
            (0..k)
                .filter(|b| b & !rest == 0)
                .map(|b| {
                    let sign = if (b as u32).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    sign * q[a | b]
                })
                .sum()
        })
        .collect()
}

/// Cell probabilities from connected-set values (indexed by subset bitmask),
/// completing disconnected sets as products over components.
pub fn naive_parametrize(g: &BidirectedGraph, q_connected: &[f64]) -> Vec<f64> {
    let k = 1usize << g.n();
    let mut q = vec![0.0; k];
    q[0] = 1.0;
    for s in 1..k {
        q[s] = components(g, s as u32)
            .iter()
            .map(|&c| q_connected[c as usize])
            .product();
    }
    naive_inverse(&q)
}

pub fn naive_loglik(p: &[f64], n: &[f64]) -> f64 {
    p.iter()
        .zip(n)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&pi, &c)| c * pi.ln())
        .sum()
}

pub fn random_graph(r: &mut ChaCha8Rng, n: usize, edge_prob: f64) -> BidirectedGraph {
    let mut g = BidirectedGraph::with_vertices(n).unwrap();
    for v in 0..n {
        for w in v + 1..n {
            if r.random_bool(edge_prob) {
                g.add_edge(v, w).unwrap();
            }
        }
    }
    g
}

pub fn random_counts(r: &mut ChaCha8Rng, n: usize, lo: u32, hi: u32) -> CountTable {
    CountTable::unlabeled(
        (0..1 << n)
            .map(|_| r.random_range(lo..=hi) as f64)
            .collect(),
    )
    .unwrap()
}

/// Random interior point of the model: connected-set values (by bitmask, zero
/// elsewhere) whose cell probabilities are all at least `min_prob`.
pub fn random_interior(r: &mut ChaCha8Rng, g: &BidirectedGraph, min_prob: f64) -> Vec<f64> {
    let k = 1usize << g.n();
    loop {
        let u: Vec<f64> = (0..g.n()).map(|_| r.random_range(0.3..0.7)).collect();
        let mut q = vec![0.0; k];
        for s in connected_sets(g) {
            let base: f64 = (0..g.n())
                .filter(|v| s >> v & 1 == 1)
                .map(|v| u[v])
                .product();
            q[s as usize] = if s.count_ones() > 1 {
                base * (0.3 * (r.random::<f64>() - 0.5)).exp()
            } else {
                base
            };
        }
        let p = naive_parametrize(g, &q);
        if p.iter().all(|&x| x >= min_prob) {
            return q;
        }
    }
}

/// Maximizes `Σ n log p` over the simplex subject to the factorization
/// `q_D = Π q_{blocks}` for every disconnected `D`, by a quadratic penalty with
/// continuation to `μ = 1e8` and damped Newton steps in `p`.
pub fn penalty_mle(g: &BidirectedGraph, n: &CountTable) -> (Vec<f64>, f64) {
    let k = 1usize << g.n();
    let w: Vec<f64> = n.counts().iter().map(|c| c / n.total()).collect();
    // Constraint list: (D, blocks); the normalization is handled separately.
    let cons: Vec<(usize, Vec<usize>)> = (1..k)
        .filter(|&d| !connected(g, d as u32))
        .map(|d| {
            (
                d,
                components(g, d as u32)
                    .into_iter()
                    .map(|b| b as usize)
                    .collect(),
            )
        })
        .collect();
    let q_of = |p: &[f64], a: usize| -> f64 { (0..k).filter(|i| i & a == 0).map(|i| p[i]).sum() };
    let ind = |a: usize| -> DVector<f64> {
        DVector::from_fn(k, |i, _| if i & a == 0 { 1.0 } else { 0.0 })
    };

    let eval = |p: &[f64], mu: f64| -> f64 {
        if p.iter().any(|&x| !(x > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let mut f: f64 = p.iter().zip(&w).map(|(x, wi)| wi * x.ln()).sum();
        let s: f64 = p.iter().sum::<f64>() - 1.0;
        f -= 0.5 * mu * s * s;
        for (d, blocks) in &cons {
            let c = q_of(p, *d) - blocks.iter().map(|&b| q_of(p, b)).product::<f64>();
            f -= 0.5 * mu * c * c;
        }
        f
    };

    let mut p = vec![1.0 / k as f64; k];
    let mut mu = 1.0;
    while mu <= 1e8 {
        for _ in 0..200 {
            let mut grad = DVector::from_fn(k, |i, _| w[i] / p[i]);
            let mut h = DMatrix::from_fn(
                k,
                k,
                |i, j| if i == j { -w[i] / (p[i] * p[i]) } else { 0.0 },
            );
            let mut h_exact_extra = DMatrix::<f64>::zeros(k, k);
            let ones = DVector::from_element(k, 1.0);
            let s: f64 = p.iter().sum::<f64>() - 1.0;
            grad -= mu * s * &ones;
            h -= mu * &ones * ones.transpose();
            for (d, blocks) in &cons {
                let qb: Vec<f64> = blocks.iter().map(|&b| q_of(&p, b)).collect();
                let prod: f64 = qb.iter().product();
                let c = q_of(&p, *d) - prod;
                let mut jac = ind(*d);
                for (i, &b) in blocks.iter().enumerate() {
                    let others: f64 = qb
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, x)| x)
                        .product();
                    jac -= others * ind(b);
                }
                grad -= mu * c * &jac;
                h -= mu * &jac * jac.transpose();
                for i in 0..blocks.len() {
                    for j in 0..blocks.len() {
                        if i == j {
                            continue;
                        }
                        let others: f64 = qb
                            .iter()
                            .enumerate()
                            .filter(|&(l, _)| l != i && l != j)
                            .map(|(_, x)| x)
                            .product();
                        // ∂²c/∂p∂p = -Σ_{i≠j} Π_{l≠i,j} q_l e_i e_jᵀ
                        h_exact_extra +=
                            mu * c * others * ind(blocks[i]) * ind(blocks[j]).transpose();
                    }
                }
            }
            let exact = &h + &h_exact_extra;
            let dir = match (-exact).cholesky() {
                Some(ch) => ch.solve(&grad),
                None => (-h.clone())
                    .cholesky()
                    .expect("Gauss-Newton matrix is definite")
                    .solve(&grad),
            };
            let slope = grad.dot(&dir);
            if slope < 1e-20 {
                break;
            }
            let f0 = eval(&p, mu);
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let trial: Vec<f64> = p.iter().zip(dir.iter()).map(|(x, d)| x + t * d).collect();
                if eval(&trial, mu) >= f0 + 1e-4 * t * slope {
                    p = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        mu *= 10.0;
    }
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let ll = naive_loglik(&p, n.counts());
    (p, ll)
}

/// Maximizes `Σ n0 log θ + n1 log(1 - θ)` with a quadratic penalty on `Aθ`,
/// continuation to `μ = 1e8`, exact Newton steps.
pub fn penalty_inner(a: &DMatrix<f64>, n0: &[f64], n1: &[f64]) -> Vec<f64> {
    let m = n0.len();
    let total: f64 = n0.iter().chain(n1).sum();
    let obj = |t: &DVector<f64>, mu: f64| -> f64 {
        if t.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return f64::NEG_INFINITY;
        }
        let mut f = 0.0;
        for i in 0..m {
            f += (n0[i] * t[i].ln() + n1[i] * (1.0 - t[i]).ln()) / total;
        }
        let r = a * t;
        f - 0.5 * mu * r.norm_squared()
    };
    let mut theta = DVector::from_fn(m, |i, _| (n0[i] + 0.5) / (n0[i] + n1[i] + 1.0));
    let ata = a.transpose() * a;
    let mut mu = 1.0;
    while mu <= 1e8 {
        for _ in 0..200 {
            let g = DVector::from_fn(m, |i, _| {
                (n0[i] / theta[i] - n1[i] / (1.0 - theta[i])) / total
            }) - mu * &ata * &theta;
            let neg_h = DMatrix::from_fn(m, m, |i, j| {
                let d = if i == j {
                    (n0[i] / (theta[i] * theta[i]) + n1[i] / ((1.0 - theta[i]) * (1.0 - theta[i])))
                        / total
                } else {
                    0.0
                };
                d + mu * ata[(i, j)]
            });
            let dir = neg_h
                .cholesky()
                .expect("negative Hessian is definite")
                .solve(&g);
            let slope = g.dot(&dir);
            if slope < 1e-24 {
                break;
            }
            let f0 = obj(&theta, mu);
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-14 {
                let trial = &theta + t * &dir;
                if obj(&trial, mu) >= f0 + 1e-4 * t * slope {
                    theta = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        mu *= 10.0;
    }
    theta.iter().copied().collect()
}

//! JSON report assembly. Keys are sorted (serde_json's default map) and every
//! float is rounded to 10 significant digits, so identical runs give
//! byte-identical output.

use binmarg::likelihood::{pairwise_odds_ratios, FitResult, LrTest};
use binmarg::mobius::{dependence_ratios, mobius_forward};
use binmarg::{BidirectedGraph, CellDistribution, FitOptions, VertexSet};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// `x` rounded to 10 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    json!(rounded)
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn set_labels(g: &BidirectedGraph, s: VertexSet) -> Value {
    json!(s.iter().map(|v| g.label(v)).collect::<Vec<_>>())
}

/// Cell pattern as a 0/1 string, variables in label order.
pub fn cell_pattern(n_vars: usize, cell: usize) -> String {
    (0..n_vars)
        .map(|v| if cell >> v & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn model_block(g: &BidirectedGraph, dim: usize) -> Value {
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|&(v, w)| json!([g.label(v), g.label(w)]))
        .collect();
    json!({
        "vertices": g.labels(),
        "edges": edges,
        "dimension": dim,
        "complete_sets": g.count_complete_sets(),
        "df_vs_saturated": ((1usize << g.n()) - 1).saturating_sub(dim),
    })
}

pub fn test_block(t: &LrTest) -> Value {
    json!({
        "deviance": num(t.deviance),
        "df": t.df,
        "p_value": num(t.p_value),
    })
}

pub fn fit_block(f: &FitResult, opts: &FitOptions) -> Value {
    json!({
        "loglik": num(f.loglik),
        "deviance": num(f.deviance),
        "df": f.df,
        "p_value": num(f.p_value),
        "iterations": f.iterations,
        "converged": f.converged,
        "score_norm": num(f.score_norm),
        "algorithm": f.algorithm.name(),
        "tol_outer": num(opts.tol_outer),
        "tol_inner": num(opts.tol_inner),
    })
}

pub fn cells(g: &BidirectedGraph, p: &CellDistribution) -> Value {
    let mut m = Map::new();
    for (i, &x) in p.probs().iter().enumerate() {
        m.insert(cell_pattern(g.n(), i), num(x));
    }
    Value::Object(m)
}

pub fn estimates_block(g: &BidirectedGraph, f: &FitResult) -> Value {
    let q: Vec<Value> = f
        .q_hat
        .catalog()
        .sets()
        .iter()
        .zip(f.q_hat.values())
        .map(|(&c, &x)| json!({ "set": set_labels(g, c), "q": num(x) }))
        .collect();
    let catalog = f.q_hat.catalog();
    let ratios: Vec<Value> = match dependence_ratios(&mobius_forward(&f.p_hat)) {
        Ok(r) => r
            .ratios
            .iter()
            .filter(|(a, _)| catalog.is_connected(*a))
            .map(|&(a, t)| json!({ "set": set_labels(g, a), "tau": num(t) }))
            .collect(),
        Err(_) => Vec::new(),
    };
    let ors: Vec<Value> = match pairwise_odds_ratios(&f.p_hat) {
        Ok(o) => o
            .iter()
            .map(|o| json!({ "pair": [g.label(o.v), g.label(o.w)], "odds_ratio": num(o.value) }))
            .collect(),
        Err(_) => Vec::new(),
    };
    json!({
        "cells": cells(g, &f.p_hat),
        "q": q,
        "dependence_ratios": ratios,
        "odds_ratios": ors,
    })
}

pub fn options_block(opts: &FitOptions) -> Value {
    json!({
        "algorithm": opts.algorithm.name(),
        "inner": opts.inner_method.name(),
        "tol": num(opts.tol_outer),
        "tol_inner": num(opts.tol_inner),
        "max_iter": opts.max_cycles,
        "pseudo_count": opts.pseudo_count.map_or(Value::Null, num),
        "multi_start": opts.multi_start,
        "seed": opts.seed,
    })
}

/// Wraps command output with the schema version and provenance.
pub fn envelope(
    command: &str,
    body: Map<String, Value>,
    inputs: Map<String, Value>,
    options: Value,
) -> Value {
    let mut m = body;
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert(
        "provenance".into(),
        json!({
            "inputs": Value::Object(inputs),
            "options": options,
            "version": env!("CARGO_PKG_VERSION"),
        }),
    );
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_ten_significant_digits() {
        assert_eq!(num(0.123456789012345), json!(0.1234567890));
        assert_eq!(num(-51702.5711895188), json!(-51702.57119));
        assert_eq!(num(f64::INFINITY), Value::Null);
    }

    #[test]
    fn patterns_list_variables_in_order() {
        assert_eq!(cell_pattern(3, 0b001), "100");
        assert_eq!(cell_pattern(3, 0b110), "011");
    }
}

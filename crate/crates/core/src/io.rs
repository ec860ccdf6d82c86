//! Text formats for datasets, graphs and symmetry groups.
//!
//! * Dataset: CSV with a header of variable labels followed by `n`; each row
//!   gives a 0/1 pattern and a nonnegative count. Absent cells count zero.
//! * Graph: one edge per line, `A <-> B`; vertices come from the dataset.
//! * Group: one generator per line in cycle notation, `(A1 A2)(D1 D2)`.
//!
//! Blank lines and `#` comments are ignored in graph and group files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, Permutation, VertexPermutationGroup, MAX_VERTICES};
use crate::likelihood::CountTable;

/// Parses a dataset into a count table over all `2^|V|` cells.
pub fn parse_dataset(text: &str) -> Result<CountTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::BadHeader(e.to_string()))?
        .clone();
    let fields: Vec<&str> = header.iter().collect();
    match fields.last() {
        Some(&"n") => {}
        _ => return Err(Error::BadHeader("last column must be `n`".into())),
    }
    let labels: Vec<String> = fields[..fields.len() - 1]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if labels.is_empty() {
        return Err(Error::BadHeader("no variable columns".into()));
    }
    if labels.iter().any(|l| l.is_empty()) {
        return Err(Error::BadHeader("empty variable label".into()));
    }
    if labels.len() > MAX_VERTICES {
        return Err(Error::TooManyVertices {
            n: labels.len(),
            limit: MAX_VERTICES,
        });
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::BadHeader(format!("duplicate label `{l}`")));
        }
    }
    let n = labels.len();
    let mut counts = vec![0.0; 1 << n];
    let mut seen = vec![false; 1 << n];
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", n + 1, record.len()),
            });
        }
        let mut cell = 0usize;
        for (v, value) in record.iter().take(n).enumerate() {
            match value {
                "0" => {}
                "1" => cell |= 1 << v,
                other => {
                    return Err(Error::NonBinaryValue {
                        line,
                        value: other.to_string(),
                    })
                }
            }
        }
        let raw = &record[n];
        let count: f64 = raw.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("count `{raw}` is not a number"),
        })?;
        if !count.is_finite() || count < 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("count `{raw}` must be finite and nonnegative"),
            });
        }
        if seen[cell] {
            return Err(Error::DuplicateCell { line });
        }
        seen[cell] = true;
        counts[cell] = count;
    }
    CountTable::new(&labels, counts)
}

/// Writes every cell, first variable varying slowest.
pub fn write_dataset(n: &CountTable) -> String {
    let mut out = String::new();
    let k = n.n_vars();
    for l in n.labels() {
        out.push_str(l);
        out.push(',');
    }
    out.push_str("n\n");
    for rank in 0..(1usize << k) {
        let mut cell = 0;
        for v in 0..k {
            let bit = (rank >> (k - 1 - v)) & 1;
            cell |= bit << v;
            let _ = write!(out, "{bit},");
        }
        let _ = writeln!(out, "{}", n.get(cell));
    }
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Parses an edge list over the given vertex labels.
pub fn parse_graph<S: AsRef<str>>(text: &str, labels: &[S]) -> Result<BidirectedGraph> {
    let mut g = BidirectedGraph::new(labels)?;
    for (line, l) in content_lines(text) {
        let (a, b) = l.split_once("<->").ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `A <-> B`, found `{l}`"),
        })?;
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty()
            || b.is_empty()
            || a.contains(char::is_whitespace)
            || b.contains(char::is_whitespace)
        {
            return Err(Error::Parse {
                line,
                msg: format!("expected `A <-> B`, found `{l}`"),
            });
        }
        let (v, w) = (g.index_of(a)?, g.index_of(b)?);
        g.add_edge(v, w)?;
    }
    Ok(g)
}

pub fn write_graph(g: &BidirectedGraph) -> String {
    let mut out = String::new();
    for (v, w) in g.edges() {
        let _ = writeln!(out, "{} <-> {}", g.label(v), g.label(w));
    }
    out
}

/// Parses one generator per line and generates the group they span.
pub fn parse_group<S: AsRef<str>>(text: &str, labels: &[S]) -> Result<VertexPermutationGroup> {
    let labels: Vec<&str> = labels.iter().map(|s| s.as_ref()).collect();
    let n = labels.len();
    let index = |line: usize, tok: &str| -> Result<usize> {
        labels
            .iter()
            .position(|l| *l == tok)
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown vertex label `{tok}`"),
            })
    };
    let mut generators = Vec::new();
    for (line, l) in content_lines(text) {
        let mut cycles = Vec::new();
        let mut rest = l;
        while !rest.is_empty() {
            let open = rest.strip_prefix('(').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `(` in `{l}`"),
            })?;
            let (body, tail) = open.split_once(')').ok_or_else(|| Error::Parse {
                line,
                msg: format!("unbalanced parentheses in `{l}`"),
            })?;
            let cycle = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| index(line, t))
                .collect::<Result<Vec<_>>>()?;
            cycles.push(cycle);
            rest = tail.trim_start();
        }
        generators.push(Permutation::from_cycles(n, &cycles)?);
    }
    VertexPermutationGroup::generate(n, generators)
}

pub fn write_group<S: AsRef<str>>(s: &VertexPermutationGroup, labels: &[S]) -> String {
    let mut out = String::new();
    for g in s.generators() {
        let cycles = g.cycles();
        if cycles.is_empty() {
            out.push_str("()");
        }
        for c in cycles {
            let names: Vec<&str> = c.iter().map(|&v| labels[v].as_ref()).collect();
            let _ = write!(out, "({})", names.join(" "));
        }
        out.push('\n');
    }
    out
}

//! Plain-text debug format for a graph and its weights.
//!
//! ```text
//! agents 3
//! edges 2
//! 0 1
//! 1 2
//! weights
//! 0.6666666666666666 0.3333333333333333 0.0
//! 0.3333333333333333 0.3333333333333333 0.3333333333333333
//! 0.0 0.3333333333333333 0.6666666666666666
//! ```
//!
//! Weights use Rust's shortest round-trip float formatting, so parsing a dump
//! recovers the matrix bit for bit.

use std::fmt::Write;

use crate::{Error, Result};

use super::{CommGraph, ConsensusWeights};

pub fn to_debug_text(graph: &CommGraph, weights: &ConsensusWeights) -> String {
    let n = graph.n_agents();
    let mut out = String::new();
    writeln!(out, "agents {n}").unwrap();
    writeln!(out, "edges {}", graph.edges().len()).unwrap();
    for (a, b) in graph.edges() {
        writeln!(out, "{a} {b}").unwrap();
    }
    writeln!(out, "weights").unwrap();
    for i in 0..n {
        let row: Vec<String> = weights.dense_row(i).iter().map(|w| format!("{w:?}")).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

/// Parses [`to_debug_text`] output into the graph and the dense weight rows.
pub fn parse_debug_text(text: &str) -> Result<(CommGraph, Vec<Vec<f64>>)> {
    let bad = |msg: String| Error::Parse {
        what: "graph debug text",
        msg,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut header = |name: &str| -> Result<usize> {
        let line = lines.next().ok_or_else(|| bad(format!("missing `{name}` line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name) {
            return Err(bad(format!("expected `{name}`, found `{line}`")));
        }
        parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("bad count in `{line}`")))
    };
    let n = header("agents")?;
    let n_edges = header("edges")?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let line = lines.next().ok_or_else(|| bad("truncated edge list".into()))?;
        let ends: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad edge `{line}`"))))
            .collect::<Result<_>>()?;
        if ends.len() != 2 {
            return Err(bad(format!("bad edge `{line}`")));
        }
        edges.push((ends[0], ends[1]));
    }
    if lines.next().map(str::trim) != Some("weights") {
        return Err(bad("missing `weights` line".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| bad("truncated weight matrix".into()))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad weight `{t}`"))))
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(bad(format!("weight row has {} entries, expected {n}", row.len())));
        }
        rows.push(row);
    }
    Ok((CommGraph::new(n, &edges)?, rows))
}

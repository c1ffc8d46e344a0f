use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{build_thm1_graph, build_thm2_graph};
use crate::tvg::{Footprint, GraphError, NodeId};

/// Graph families used by scenarios and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphKind {
    Ring { n: usize },
    /// The three-agent impossibility construction; carries its own black
    /// hole.
    CliqueChain { p: usize },
    /// The scattered impossibility construction; carries its own black hole.
    Thm2 { p: usize },
    RandomConnected { n: usize, m: usize, seed: u64 },
    /// Node 0 is the centre.
    Star { n: usize },
    Grid { a: usize, b: usize },
}

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::Ring { .. } => "ring",
            GraphKind::CliqueChain { .. } => "clique_chain",
            GraphKind::Thm2 { .. } => "thm2",
            GraphKind::RandomConnected { .. } => "random",
            GraphKind::Star { .. } => "star",
            GraphKind::Grid { .. } => "grid",
        }
    }

    /// Whether the construction fixes the black hole itself.
    pub fn has_builtin_black_hole(&self) -> bool {
        matches!(self, GraphKind::CliqueChain { .. } | GraphKind::Thm2 { .. })
    }
}

fn infeasible(msg: String) -> GraphError {
    GraphError::Infeasible(msg)
}

pub fn ring(n: usize) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
    if n < 3 {
        return Err(infeasible(format!("a ring needs at least 3 nodes, got {n}")));
    }
    Ok((0..n).map(|i| (i, (i + 1) % n)).collect())
}

pub fn star(n: usize) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
    if n < 2 {
        return Err(infeasible(format!("a star needs at least 2 nodes, got {n}")));
    }
    Ok((1..n).map(|i| (0, i)).collect())
}

pub fn grid(a: usize, b: usize) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
    if a == 0 || b == 0 || a * b < 2 {
        return Err(infeasible(format!("a {a}x{b} grid has fewer than 2 nodes")));
    }
    let id = |r: usize, c: usize| r * b + c;
    let mut edges = Vec::new();
    for r in 0..a {
        for c in 0..b {
            if c + 1 < b {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < a {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Ok(edges)
}

/// A uniformly random labelled spanning tree (random attachment order)
/// plus `m - (n - 1)` further edges drawn uniformly from the non-edges.
pub fn random_connected(n: usize, m: usize, seed: u64) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
    if n < 2 {
        return Err(infeasible(format!("a random graph needs at least 2 nodes, got {n}")));
    }
    let max = n * (n - 1) / 2;
    if m < n - 1 || m > max {
        return Err(infeasible(format!("{m} edges cannot form a connected simple graph on {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (u, v) = (order[i], order[j]);
        edges.insert((u.min(v), u.max(v)));
    }
    let mut rest: Vec<(NodeId, NodeId)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|e| !edges.contains(e))
        .collect();
    rest.shuffle(&mut rng);
    edges.extend(rest.into_iter().take(m - (n - 1)));
    Ok(edges.into_iter().collect())
}

/// Builds the footprint of `kind`. `black_hole` must be `None` for the
/// constructions that place their own.
pub fn generate_graph(kind: &GraphKind, black_hole: Option<NodeId>) -> Result<Footprint, GraphError> {
    let (n, edges) = match *kind {
        GraphKind::CliqueChain { p } | GraphKind::Thm2 { p } => {
            let g = if let GraphKind::CliqueChain { .. } = kind {
                build_thm1_graph(p)?
            } else {
                build_thm2_graph(p)?
            };
            if black_hole.is_some_and(|v| Some(v) != g.footprint.black_hole()) {
                return Err(infeasible(format!("{} fixes its own black hole", kind.name())));
            }
            return Ok(g.footprint);
        }
        GraphKind::Ring { n } => (n, ring(n)?),
        GraphKind::Star { n } => (n, star(n)?),
        GraphKind::Grid { a, b } => (a * b, grid(a, b)?),
        GraphKind::RandomConnected { n, m, seed } => (n, random_connected(n, m, seed)?),
    };
    Footprint::canonical(n, &edges, black_hole)
}

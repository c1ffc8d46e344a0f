//! Time-varying graph model.
//!
//! A [`Footprint`] is the static, port-labeled underlying graph. Every round an
//! [`Adversary`] picks the set of footprint edges that are absent; the result
//! is a [`Snapshot`], which must keep the graph connected and may miss at most
//! [`ELL`] edges.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::WorldView;

pub type NodeId = usize;
pub type Port = usize;
pub type EdgeId = usize;

/// Maximum number of edges an adversary may remove in one round.
pub const ELL: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("node {node} out of range")]
    NodeOutOfRange { node: NodeId },
    #[error("self-loop at node {node}")]
    SelfLoop { node: NodeId },
    #[error("duplicate edge {u}-{v}")]
    DuplicateEdge { u: NodeId, v: NodeId },
    #[error("bad port bijection at node {node}")]
    BadPortBijection { node: NodeId },
    #[error("footprint is disconnected")]
    Disconnected,
    #[error("invalid black-hole id {node}")]
    InvalidBlackHole { node: NodeId },
    #[error("port {port} out of range at node {node}")]
    PortOutOfRange { node: NodeId, port: Port },
    #[error("{u}-{v} is not an edge")]
    NotAnEdge { u: NodeId, v: NodeId },
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("graph file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("round {round}: adversary removed {count} edges (limit {ELL})")]
    TooManyMissing { round: u64, count: usize },
    #[error("round {round}: unknown edge id {edge}")]
    UnknownEdge { round: u64, edge: EdgeId },
    #[error("round {round}: removing {edges:?} disconnects the graph")]
    Disconnects { round: u64, edges: Vec<EdgeId> },
}

/// Footprint description before validation. `port_map[v]` lists
/// `(neighbor, label)` pairs for every edge incident to `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFootprint {
    pub node_count: usize,
    pub edges: Vec<(NodeId, NodeId)>,
    pub port_map: Vec<Vec<(NodeId, Port)>>,
    pub black_hole: Option<NodeId>,
}

impl RawFootprint {
    /// Port map where each node labels its incident edges 0,1,2,... in order of
    /// increasing far-endpoint id.
    pub fn canonical(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        black_hole: Option<NodeId>,
    ) -> Self {
        let mut nbrs: Vec<Vec<NodeId>> = vec![Vec::new(); node_count];
        for &(u, v) in edges {
            if u < node_count && v < node_count {
                nbrs[u].push(v);
                nbrs[v].push(u);
            }
        }
        let port_map = nbrs
            .into_iter()
            .map(|mut list| {
                list.sort_unstable();
                list.into_iter().enumerate().map(|(p, w)| (w, p)).collect()
            })
            .collect();
        RawFootprint {
            node_count,
            edges: edges.to_vec(),
            port_map,
            black_hole,
        }
    }
}

/// Checks every footprint invariant and reports the first violation.
pub fn validate_footprint(raw: &RawFootprint) -> Result<(), GraphError> {
    let n = raw.node_count;
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let mut seen = BTreeSet::new();
    for &(u, v) in &raw.edges {
        for w in [u, v] {
            if w >= n {
                return Err(GraphError::NodeOutOfRange { node: w });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop { node: u });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(GraphError::DuplicateEdge {
                u: u.min(v),
                v: u.max(v),
            });
        }
    }
    if raw.port_map.len() != n {
        return Err(GraphError::BadPortBijection {
            node: raw.port_map.len().min(n),
        });
    }
    let mut incident: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    for &(u, v) in &seen {
        incident[u].insert(v);
        incident[v].insert(u);
    }
    for (v, labels) in raw.port_map.iter().enumerate() {
        let deg = incident[v].len();
        let far: BTreeSet<NodeId> = labels.iter().map(|&(w, _)| w).collect();
        let ports: BTreeSet<Port> = labels.iter().map(|&(_, p)| p).collect();
        let bijective = labels.len() == deg
            && far == incident[v]
            && ports.len() == deg
            && ports.iter().all(|&p| p < deg);
        if !bijective {
            return Err(GraphError::BadPortBijection { node: v });
        }
    }
    let adj: Vec<Vec<NodeId>> = incident.iter().map(|s| s.iter().copied().collect()).collect();
    if !connected(n, |v| adj[v].iter().copied()) {
        return Err(GraphError::Disconnected);
    }
    if let Some(bh) = raw.black_hole {
        if bh >= n {
            return Err(GraphError::InvalidBlackHole { node: bh });
        }
    }
    Ok(())
}

fn connected<I, F>(n: usize, mut nbrs: F) -> bool
where
    F: FnMut(NodeId) -> I,
    I: Iterator<Item = NodeId>,
{
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for w in nbrs(v) {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    far: NodeId,
    edge: EdgeId,
}

/// A validated, port-labeled static graph with an optional black hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    ports: Vec<Vec<Slot>>,
    black_hole: Option<NodeId>,
}

impl Footprint {
    pub fn new(raw: RawFootprint) -> Result<Self, GraphError> {
        validate_footprint(&raw)?;
        let mut edges: Vec<(NodeId, NodeId)> =
            raw.edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        edges.sort_unstable();
        let mut ports = Vec::with_capacity(raw.node_count);
        for (v, labels) in raw.port_map.iter().enumerate() {
            let mut row = vec![Slot { far: 0, edge: 0 }; labels.len()];
            for &(w, p) in labels {
                let key = (v.min(w), v.max(w));
                let edge = edges.binary_search(&key).expect("validated edge");
                row[p] = Slot { far: w, edge };
            }
            ports.push(row);
        }
        Ok(Footprint {
            node_count: raw.node_count,
            edges,
            ports,
            black_hole: raw.black_hole,
        })
    }

    /// Footprint with canonical port labels.
    pub fn canonical(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        black_hole: Option<NodeId>,
    ) -> Result<Self, GraphError> {
        Footprint::new(RawFootprint::canonical(node_count, edges, black_hole))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (NodeId, NodeId) {
        self.edges[id]
    }

    pub fn edge_id(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn black_hole(&self) -> Option<NodeId> {
        self.black_hole
    }

    pub fn with_black_hole(mut self, bh: Option<NodeId>) -> Result<Self, GraphError> {
        if let Some(b) = bh {
            if b >= self.node_count {
                return Err(GraphError::InvalidBlackHole { node: b });
            }
        }
        self.black_hole = bh;
        Ok(self)
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.ports[v].len()
    }

    /// Degree of the black hole, 0 when there is none.
    pub fn black_hole_degree(&self) -> usize {
        self.black_hole.map_or(0, |b| self.degree(b))
    }

    pub fn neighbor_via_port(&self, v: NodeId, p: Port) -> Result<NodeId, GraphError> {
        self.ports
            .get(v)
            .ok_or(GraphError::NodeOutOfRange { node: v })?
            .get(p)
            .map(|s| s.far)
            .ok_or(GraphError::PortOutOfRange { node: v, port: p })
    }

    /// Edge id behind port `p` at `v`.
    pub fn edge_via_port(&self, v: NodeId, p: Port) -> Result<EdgeId, GraphError> {
        self.ports
            .get(v)
            .and_then(|row| row.get(p))
            .map(|s| s.edge)
            .ok_or(GraphError::PortOutOfRange { node: v, port: p })
    }

    /// Label at `u` of the edge `(v, u)`: the port through which an agent
    /// coming from `v` enters `u`.
    pub fn entry_port(&self, v: NodeId, u: NodeId) -> Result<Port, GraphError> {
        self.ports
            .get(u)
            .and_then(|row| row.iter().position(|s| s.far == v))
            .ok_or(GraphError::NotAnEdge { u: v, v: u })
    }

    /// Neighbors of `v` ordered by port.
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.ports[v].iter().map(|s| s.far)
    }

    /// Whether `(V, E \ missing)` is connected.
    pub fn connected_without(&self, missing: &[EdgeId]) -> bool {
        connected(self.node_count, |v| {
            self.ports[v]
                .iter()
                .filter(|s| !missing.contains(&s.edge))
                .map(|s| s.far)
                .collect::<Vec<_>>()
                .into_iter()
        })
    }

    /// Edges whose individual removal keeps the footprint connected.
    pub fn removable_edges(&self) -> Vec<EdgeId> {
        (0..self.edges.len())
            .filter(|&e| self.connected_without(&[e]))
            .collect()
    }

    /// Checks a candidate missing-edge set against ℓ-bounded 1-interval
    /// connectivity.
    pub fn check_missing(&self, round: u64, missing: &[EdgeId]) -> Result<(), SnapshotError> {
        let distinct: BTreeSet<EdgeId> = missing.iter().copied().collect();
        if distinct.len() > ELL {
            return Err(SnapshotError::TooManyMissing {
                round,
                count: distinct.len(),
            });
        }
        if let Some(&edge) = distinct.iter().find(|&&e| e >= self.edges.len()) {
            return Err(SnapshotError::UnknownEdge { round, edge });
        }
        let list: Vec<EdgeId> = distinct.into_iter().collect();
        if !self.connected_without(&list) {
            return Err(SnapshotError::Disconnects { round, edges: list });
        }
        Ok(())
    }

    /// Serializes into the line-oriented graph file format.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.node_count,
            self.edges.len(),
            self.black_hole.map_or(-1, |b| b as i64)
        );
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the graph file format; ports are labeled canonically.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphError::Parse {
                line: hline,
                msg: "header must be `n m bh`".into(),
            });
        }
        let parse = |s: &str, line: usize| -> Result<i64, GraphError> {
            s.parse::<i64>().map_err(|e| GraphError::Parse {
                line,
                msg: format!("{s:?}: {e}"),
            })
        };
        let n = parse(fields[0], hline)?;
        let m = parse(fields[1], hline)?;
        let bh = parse(fields[2], hline)?;
        if n < 0 || m < 0 || bh < -1 {
            return Err(GraphError::Parse {
                line: hline,
                msg: "negative header field".into(),
            });
        }
        let mut edges = Vec::with_capacity(m as usize);
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 2 {
                return Err(GraphError::Parse {
                    line,
                    msg: "edge line must be `u v`".into(),
                });
            }
            let u = parse(f[0], line)?;
            let v = parse(f[1], line)?;
            if u < 0 || v < 0 {
                return Err(GraphError::Parse {
                    line,
                    msg: "negative node id".into(),
                });
            }
            edges.push((u as usize, v as usize));
        }
        if edges.len() != m as usize {
            return Err(GraphError::Parse {
                line: hline,
                msg: format!("header says {m} edges, found {}", edges.len()),
            });
        }
        let bh = (bh >= 0).then_some(bh as usize);
        Footprint::canonical(n as usize, &edges, bh)
    }
}

/// The footprint as seen in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub round: u64,
    pub missing: Vec<EdgeId>,
}

impl Snapshot {
    pub fn full(round: u64) -> Self {
        Snapshot {
            round,
            missing: Vec::new(),
        }
    }

    pub fn is_missing(&self, edge: EdgeId) -> bool {
        self.missing.contains(&edge)
    }
}

/// Omniscient per-round edge-removal strategy.
pub trait Adversary: Send {
    fn name(&self) -> String;

    /// Whether [`WorldView::intents`] should be populated before
    /// [`Adversary::missing_edges`] is called.
    fn wants_intents(&self) -> bool {
        false
    }

    fn missing_edges(&mut self, round: u64, view: &WorldView<'_>) -> Vec<EdgeId>;
}

/// Asks the adversary for round `round` and rejects illegal choices.
pub fn snapshot_for_round(
    footprint: &Footprint,
    adversary: &mut dyn Adversary,
    round: u64,
    view: &WorldView<'_>,
) -> Result<Snapshot, SnapshotError> {
    let mut missing = adversary.missing_edges(round, view);
    missing.sort_unstable();
    missing.dedup();
    footprint.check_missing(round, &missing)?;
    Ok(Snapshot { round, missing })
}

impl fmt::Display for Footprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Footprint(n={}, m={}, bh={:?})",
            self.node_count,
            self.edges.len(),
            self.black_hole
        )
    }
}

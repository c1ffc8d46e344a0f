use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tvg::{NodeId, Port};

use super::AgentId;

/// Whose DFS a whiteboard entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Namespace {
    G1,
    G2,
    Agent(AgentId),
}

/// DFS bookkeeping left at a node: the port through which the walker first
/// entered it (`None` at a DFS root) and, for restartable walkers, the label
/// of the DFS that wrote it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfsEntry {
    pub parent: Option<Port>,
    pub label: Option<u32>,
}

/// A single-agent cautious-move marker: "`writer` left this node through
/// `port`".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cm1Record {
    pub writer: AgentId,
    pub port: Port,
    pub written_round: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Board {
    dfs: BTreeMap<Namespace, DfsEntry>,
    cm1: Vec<Cm1Record>,
}

impl Board {
    pub fn dfs(&self, ns: Namespace) -> Option<&DfsEntry> {
        self.dfs.get(&ns)
    }

    pub fn cm1(&self) -> &[Cm1Record] {
        &self.cm1
    }

    pub fn is_empty(&self) -> bool {
        self.dfs.is_empty() && self.cm1.is_empty()
    }
}

/// One whiteboard change as it appears in a round trace. A `None` value
/// means the record was erased.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WbDelta {
    Dfs {
        node: NodeId,
        ns: Namespace,
        entry: Option<DfsEntry>,
    },
    Cm1 {
        node: NodeId,
        writer: AgentId,
        record: Option<Cm1Record>,
    },
}

impl WbDelta {
    fn key(&self) -> (NodeId, u8, u64) {
        match self {
            WbDelta::Dfs { node, ns, .. } => {
                let k = match ns {
                    Namespace::G1 => 0,
                    Namespace::G2 => 1,
                    Namespace::Agent(a) => 2 + u64::from(*a),
                };
                (*node, 0, k)
            }
            WbDelta::Cm1 { node, writer, .. } => (*node, 1, u64::from(*writer)),
        }
    }
}

/// Per-node storage for the whole graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Whiteboards {
    boards: Vec<Board>,
    pending: Vec<WbDelta>,
}

impl Whiteboards {
    pub fn new(node_count: usize) -> Self {
        Whiteboards {
            boards: vec![Board::default(); node_count],
            pending: Vec::new(),
        }
    }

    pub fn at(&self, v: NodeId) -> &Board {
        &self.boards[v]
    }

    pub fn dfs(&self, v: NodeId, ns: Namespace) -> Option<DfsEntry> {
        self.boards[v].dfs.get(&ns).copied()
    }

    /// Writes (or overwrites) the single entry of `ns` at `v`.
    pub fn set_dfs(&mut self, v: NodeId, ns: Namespace, entry: DfsEntry) {
        self.boards[v].dfs.insert(ns, entry);
        self.pending.push(WbDelta::Dfs {
            node: v,
            ns,
            entry: Some(entry),
        });
    }

    pub fn cm1(&self, v: NodeId) -> &[Cm1Record] {
        &self.boards[v].cm1
    }

    /// Adds a record, replacing any earlier record by the same writer.
    pub fn add_cm1(&mut self, v: NodeId, record: Cm1Record) {
        let list = &mut self.boards[v].cm1;
        list.retain(|r| r.writer != record.writer);
        list.push(record);
        list.sort_by_key(|r| r.writer);
        self.pending.push(WbDelta::Cm1 {
            node: v,
            writer: record.writer,
            record: Some(record),
        });
    }

    /// Erases the record of `writer` at `v`; returns whether one existed.
    pub fn remove_cm1(&mut self, v: NodeId, writer: AgentId) -> bool {
        let list = &mut self.boards[v].cm1;
        let before = list.len();
        list.retain(|r| r.writer != writer);
        let removed = list.len() != before;
        if removed {
            self.pending.push(WbDelta::Cm1 {
                node: v,
                writer,
                record: None,
            });
        }
        removed
    }

    /// All CM1 records in the graph as `(node, record)`.
    pub fn all_cm1(&self) -> impl Iterator<Item = (NodeId, &Cm1Record)> {
        self.boards
            .iter()
            .enumerate()
            .flat_map(|(v, b)| b.cm1.iter().map(move |r| (v, r)))
    }

    /// Changes since the last call, reduced to the final value per record.
    pub fn drain_deltas(&mut self) -> Vec<WbDelta> {
        let mut last: BTreeMap<(NodeId, u8, u64), WbDelta> = BTreeMap::new();
        for d in self.pending.drain(..) {
            last.insert(d.key(), d);
        }
        last.into_values().collect()
    }

    pub fn discard_deltas(&mut self) {
        self.pending.clear();
    }
}

//! Whiteboard-assisted depth-first traversal of a port-labeled graph.
//!
//! A walker in `Explore` mode that reaches a node it has already visited
//! bounces straight back through the port it came in by; the return arrival
//! is then processed like a backtrack arrival. At a fresh node the walker
//! records its entry port as the node's parent and leaves through the next
//! port in cyclic order. Reaching the parent port again means every other
//! port has been tried, so the walker backtracks. At a root (no parent) the
//! traversal is complete once the port order wraps around to 0.
//!
//! Restartable walkers tag their whiteboard entries with a DFS label; an
//! entry carrying an older label is treated as unvisited.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::DfsEntry;
use crate::tvg::Port;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Explore,
    Backtrack,
}

/// Whether a chosen move may lead somewhere new (`Forward`) or returns to a
/// node the walker has already stood on (`Return`: a backtrack or a bounce).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Forward,
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfsError {
    #[error("backtracking into a node with no entry for DFS label {label}")]
    InconsistentWhiteboard { label: u32 },
    #[error("bounce requested with no entry port")]
    BounceWithoutEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfsState {
    pub mode: Mode,
    /// Port through which the walker entered its current node; `None` at the
    /// start of a traversal.
    pub prt_in: Option<Port>,
    /// Port chosen at the current node, once computed.
    pub prt_out: Option<Port>,
    /// Parent port of the current node (the port of its first entry).
    pub first_entry: Option<Port>,
    pub label: u32,
    /// Whether whiteboard entries carry `label`.
    pub labeled: bool,
}

impl DfsState {
    pub fn new(labeled: bool) -> Self {
        DfsState {
            mode: Mode::Explore,
            prt_in: None,
            prt_out: None,
            first_entry: None,
            label: 1,
            labeled,
        }
    }

    /// Records a successful traversal that entered the new node via `port`.
    pub fn arrived(&mut self, port: Port) {
        self.prt_in = Some(port);
        self.prt_out = None;
        self.first_entry = None;
    }

    /// The entry this walker counts as "visited", filtering stale labels.
    pub fn visible(&self, entry: Option<DfsEntry>) -> Option<DfsEntry> {
        entry.filter(|e| !self.labeled || e.label == Some(self.label))
    }

    fn entry(&self, parent: Option<Port>) -> DfsEntry {
        DfsEntry {
            parent,
            label: self.labeled.then_some(self.label),
        }
    }
}

/// The walker's local view of its current node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeView {
    pub degree: usize,
    /// The whiteboard entry of this walker's namespace, if any.
    pub entry: Option<DfsEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DfsStep {
    pub state: DfsState,
    /// `None` when the traversal is complete.
    pub port: Option<Port>,
    pub kind: MoveKind,
    /// Entry to write at the current node before leaving.
    pub write: Option<DfsEntry>,
}

impl DfsStep {
    pub fn is_done(&self) -> bool {
        self.port.is_none()
    }
}

fn advance(s: DfsState, degree: usize, from: Option<Port>, parent: Option<Port>) -> DfsStep {
    let mut state = s;
    state.first_entry = parent;
    if degree == 0 {
        state.prt_out = None;
        return DfsStep {
            state,
            port: None,
            kind: MoveKind::Return,
            write: None,
        };
    }
    let next = from.map_or(0, |q| (q + 1) % degree);
    let (port, mode, kind) = match parent {
        Some(pp) if next == pp => (Some(pp), Mode::Backtrack, MoveKind::Return),
        None if from.is_some() && next == 0 => (None, Mode::Backtrack, MoveKind::Return),
        _ => (Some(next), Mode::Explore, MoveKind::Forward),
    };
    state.mode = mode;
    state.prt_out = port;
    DfsStep {
        state,
        port,
        kind,
        write: None,
    }
}

/// One decision of the traversal at the current node.
pub fn dfs_step(s: &DfsState, view: &NodeView) -> Result<DfsStep, DfsError> {
    let entry = s.visible(view.entry);
    match s.mode {
        Mode::Explore => match (entry, s.prt_in) {
            // fresh root of the current traversal (after a restart)
            (Some(e), None) => Ok(advance(*s, view.degree, None, e.parent)),
            (Some(e), Some(q)) => {
                let mut state = *s;
                state.mode = Mode::Backtrack;
                state.prt_out = Some(q);
                state.first_entry = e.parent;
                Ok(DfsStep {
                    state,
                    port: Some(q),
                    kind: MoveKind::Return,
                    write: None,
                })
            }
            (None, from) => {
                let mut step = advance(*s, view.degree, from, from);
                step.write = Some(s.entry(from));
                Ok(step)
            }
        },
        Mode::Backtrack => {
            let e = entry.ok_or(DfsError::InconsistentWhiteboard { label: s.label })?;
            let from = s.prt_in.ok_or(DfsError::BounceWithoutEntry)?;
            Ok(advance(*s, view.degree, Some(from), e.parent))
        }
    }
}

/// Outcome of skipping a missing edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    Next(DfsStep),
    /// No other port exists; wait and retry.
    Stay,
}

/// Treats forward port `p` as explored and bounced, choosing the next port
/// in cyclic order.
pub fn skip_edge(s: &DfsState, view: &NodeView, p: Port) -> Skip {
    if view.degree <= 1 {
        return Skip::Stay;
    }
    let parent = s.visible(view.entry).and_then(|e| e.parent);
    Skip::Next(advance(*s, view.degree, Some(p), parent))
}

/// Starts a new traversal rooted at the current node. Returns the new state
/// and the root entry to write there.
pub fn restart_dfs(s: &DfsState) -> (DfsState, DfsEntry) {
    let state = DfsState {
        mode: Mode::Explore,
        prt_in: None,
        prt_out: None,
        first_entry: None,
        label: s.label + 1,
        labeled: s.labeled,
    };
    let entry = state.entry(None);
    (state, entry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tvg::{Footprint, NodeId};

    fn view(degree: usize, entry: Option<DfsEntry>) -> NodeView {
        NodeView { degree, entry }
    }

    /// Runs one walker on a static graph; returns (moves until every node is
    /// visited, moves until the traversal reports completion).
    fn walk(g: &Footprint, root: NodeId) -> (usize, usize) {
        let mut wb: Vec<Option<DfsEntry>> = vec![None; g.node_count()];
        let mut s = DfsState::new(false);
        let mut at = root;
        let mut seen = vec![false; g.node_count()];
        seen[root] = true;
        let mut covered = if g.node_count() == 1 { 0 } else { usize::MAX };
        for moves in 0.. {
            let step = dfs_step(&s, &view(g.degree(at), wb[at])).unwrap();
            if let Some(e) = step.write {
                wb[at] = Some(e);
            }
            s = step.state;
            let Some(p) = step.port else { return (covered, moves) };
            let next = g.neighbor_via_port(at, p).unwrap();
            s.arrived(g.entry_port(at, next).unwrap());
            at = next;
            if !seen[at] {
                seen[at] = true;
                if seen.iter().all(|&x| x) {
                    covered = moves + 1;
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn k2_root() {
        let s = DfsState::new(false);
        let step = dfs_step(&s, &view(1, None)).unwrap();
        assert_eq!(step.write, Some(DfsEntry { parent: None, label: None }));
        assert_eq!(step.port, Some(0));
        // the leaf: its only port is its parent, so it backtracks at once
        let mut leaf = step.state;
        leaf.arrived(0);
        let step = dfs_step(&leaf, &view(1, None)).unwrap();
        assert_eq!((step.port, step.state.mode), (Some(0), Mode::Backtrack));
        let mut back = step.state;
        back.arrived(0);
        let done = dfs_step(&back, &view(1, Some(DfsEntry { parent: None, label: None }))).unwrap();
        assert!(done.is_done());
        let g = Footprint::canonical(2, &[(0, 1)], None).unwrap();
        assert_eq!(walk(&g, 0), (1, 2));
    }

    #[test]
    fn explore_into_visited_node_bounces() {
        let mut s = DfsState::new(false);
        s.arrived(2);
        let e = DfsEntry { parent: Some(0), label: None };
        let step = dfs_step(&s, &view(4, Some(e))).unwrap();
        assert_eq!(step.port, Some(2));
        assert_eq!(step.kind, MoveKind::Return);
        assert_eq!(step.write, None);
    }

    #[test]
    fn triangle_walk_matches_hand_trace() {
        // 0 -> 1 -> 2 -> 0 (bounce) -> 2 -> 1 -> 0 -> 2 (bounce) -> 0, done
        let g = Footprint::canonical(3, &[(0, 1), (1, 2), (0, 2)], None).unwrap();
        assert_eq!(walk(&g, 0), (2, 8));
        assert!(8 <= 4 * g.edge_count());
    }

    #[test]
    fn skip_arithmetic() {
        let mut s = DfsState::new(false);
        s.arrived(0);
        let e = Some(DfsEntry { parent: Some(0), label: None });
        match skip_edge(&s, &view(3, e), 1) {
            Skip::Next(step) => {
                assert_eq!(step.port, Some(2));
                assert_eq!(step.state.mode, Mode::Explore);
            }
            Skip::Stay => panic!(),
        }
        match skip_edge(&s, &view(2, e), 1) {
            Skip::Next(step) => {
                assert_eq!(step.port, Some(0));
                assert_eq!(step.state.mode, Mode::Backtrack);
            }
            Skip::Stay => panic!(),
        }
        let root = DfsState::new(false);
        let re = Some(DfsEntry { parent: None, label: None });
        assert_eq!(skip_edge(&root, &view(1, re), 0), Skip::Stay);
    }

    #[test]
    fn restart_increments_label_and_ignores_stale_entries() {
        let s = DfsState::new(true);
        let (s2, root) = restart_dfs(&s);
        assert_eq!(s2.label, 2);
        assert_eq!(root, DfsEntry { parent: None, label: Some(2) });
        let stale = DfsEntry { parent: Some(1), label: Some(1) };
        assert_eq!(s2.visible(Some(stale)), None);
        // stepping at a node holding only a stale entry treats it as new
        let mut moved = s2;
        moved.arrived(1);
        let step = dfs_step(&moved, &view(3, Some(stale))).unwrap();
        assert_eq!(step.write, Some(DfsEntry { parent: Some(1), label: Some(2) }));
        let (s3, _) = restart_dfs(&s2);
        assert_eq!(s3.label, 3);
        // a fresh restart root continues from port 0
        let step = dfs_step(&s3, &view(3, Some(DfsEntry { parent: None, label: Some(3) }))).unwrap();
        assert_eq!(step.port, Some(0));
    }

    #[test]
    fn backtrack_without_entry_is_inconsistent() {
        let mut s = DfsState::new(true);
        s.mode = Mode::Backtrack;
        s.arrived(0);
        assert_eq!(
            dfs_step(&s, &view(2, None)),
            Err(DfsError::InconsistentWhiteboard { label: 1 })
        );
    }

    /// Every labeled connected graph on up to 6 nodes, from every root.
    #[test]
    fn static_bound_exhaustive_small() {
        for n in 1..=6usize {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            for mask in 0u32..(1 << pairs.len()) {
                let edges: Vec<_> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                let Ok(g) = Footprint::canonical(n, &edges, None) else { continue };
                for root in 0..n {
                    let (covered, done) = walk(&g, root);
                    assert!(covered <= 4 * edges.len() && done <= 4 * edges.len(), "{edges:?} root {root}");
                }
            }
        }
    }
}

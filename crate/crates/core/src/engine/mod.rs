//! The synchronous Communicate-Compute-Move round loop.
//!
//! Each round the engine asks the adversary for the missing edges, builds one
//! [`Observation`] per live agent according to the protocol's visibility and
//! communication model, lets the protocol compute, and resolves all moves
//! simultaneously. Agents that enter the black hole are destroyed at the end
//! of the Move step and vanish from every later observation.

mod trace;
mod whiteboard;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tvg::{snapshot_for_round, Adversary, EdgeId, Footprint, NodeId, Port, Snapshot, SnapshotError};

pub use trace::{
    read_trace, trace_to_string, write_trace, AgentStart, AgentTrace, Event, RoundTrace,
    TraceHeader, TraceLine,
};
pub use whiteboard::{Board, Cm1Record, DfsEntry, Namespace, WbDelta, Whiteboards};

pub type AgentId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MoveResult {
    #[default]
    None,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentRecord {
    pub id: AgentId,
    /// `None` once the agent has been destroyed.
    pub position: Option<NodeId>,
    pub last_move: MoveResult,
    /// Port of the current node through which the last successful move
    /// entered it.
    pub entered_via: Option<Port>,
}

impl AgentRecord {
    pub fn new(id: AgentId, node: NodeId) -> Self {
        AgentRecord {
            id,
            position: Some(node),
            last_move: MoveResult::None,
            entered_via: None,
        }
    }

    pub fn alive(&self) -> bool {
        self.position.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    ZeroHop,
    OneHop,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Communication {
    FaceToFace,
    Global,
}

/// What 1-hop visibility reveals about one port. Agents at the far end are
/// visible only while the edge is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortView {
    pub present: bool,
    pub far_agents: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullView {
    pub snapshot: Snapshot,
    pub positions: Vec<(AgentId, NodeId)>,
}

/// Everything one agent perceives at the start of its Compute step.
///
/// Nodes are anonymous: `here` is only the address of the local whiteboard
/// and a co-location key, never a label the algorithm reasons about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub agent: AgentId,
    pub here: NodeId,
    pub degree: usize,
    /// Other live agents at the same node, ascending.
    pub co_located: Vec<AgentId>,
    pub last_move: MoveResult,
    pub entered_via: Option<Port>,
    /// Per-port view under 1-hop (and full) visibility.
    pub ports: Option<Vec<PortView>>,
    pub full: Option<FullView>,
    /// Ids of every live agent under global communication.
    pub alive: Option<Vec<AgentId>>,
}

impl Observation {
    /// Edge presence through `p`, if the visibility model reveals it.
    pub fn port_present(&self, p: Port) -> Option<bool> {
        self.ports.as_ref().map(|v| v[p].present)
    }

    pub fn sees_across(&self, p: Port, agent: AgentId) -> bool {
        self.ports
            .as_ref()
            .is_some_and(|v| v[p].present && v[p].far_agents.contains(&agent))
    }

    pub fn is_alive(&self, agent: AgentId) -> Option<bool> {
        self.alive.as_ref().map(|a| a.binary_search(&agent).is_ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "port", rename_all = "snake_case")]
pub enum Action {
    Stay,
    Move(Port),
    /// The agent, at its current node, names the port leading to the black
    /// hole.
    Declare(Port),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub agent: AgentId,
    pub node: NodeId,
    pub port: Port,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTag {
    pub role: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeathRecord {
    pub agent: AgentId,
    pub from: NodeId,
    pub port: Port,
    pub round: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("round {round}: protocol violation: {msg}")]
    Violation { round: u64, msg: String },
    #[error("round {round}: agent {agent} chose port {port} at a node of degree {degree}")]
    InvalidPort {
        round: u64,
        agent: AgentId,
        port: Port,
        degree: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("illegal adversary: {0}")]
    IllegalAdversary(#[from] SnapshotError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("scenario error: {0}")]
    Scenario(String),
}

/// A distributed algorithm driven by the engine. `compute` receives the
/// observations of all live agents in ascending id order and returns one
/// action per agent; whiteboard writes are applied in the order they are
/// issued.
pub trait Protocol: Send {
    fn name(&self) -> String;
    fn visibility(&self) -> Visibility;
    fn communication(&self) -> Communication;

    fn compute(
        &mut self,
        round: u64,
        observations: &[Observation],
        boards: &mut Whiteboards,
        events: &mut Vec<Event>,
    ) -> Result<Vec<(AgentId, Action)>, ProtocolError>;

    fn tags(&self) -> Vec<(AgentId, AgentTag)>;

    /// Exploration-only protocols report completion here.
    fn is_finished(&self) -> bool {
        false
    }

    fn clone_box(&self) -> Box<dyn Protocol>;
}

/// The adversary's omniscient view of the world at the start of a round.
pub struct WorldView<'a> {
    pub round: u64,
    pub footprint: &'a Footprint,
    pub agents: &'a [AgentRecord],
    pub tags: &'a [(AgentId, AgentTag)],
    pub boards: &'a Whiteboards,
    /// Moves the agents would make this round if no edge were missing.
    pub intents: &'a [Intent],
    pub deaths: &'a [DeathRecord],
}

impl WorldView<'_> {
    pub fn alive_at(&self, v: NodeId) -> usize {
        self.agents.iter().filter(|a| a.position == Some(v)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Solved {
        agent: AgentId,
        node: NodeId,
        port: Port,
    },
    /// Exploration protocols ran to completion.
    Explored,
    /// Every agent was destroyed.
    Failed,
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub rounds_used: u64,
    pub deaths: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    pub trace: Vec<TraceLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveOutcome {
    pub node: NodeId,
    pub result: MoveResult,
    pub entered_via: Option<Port>,
    pub died: bool,
}

/// Resolves the simultaneous moves of one round. `moves[i]` is the current
/// node of agent `i` and the port it tries, if any.
pub fn resolve_moves(
    footprint: &Footprint,
    moves: &[(NodeId, Option<Port>)],
    snapshot: &Snapshot,
) -> Vec<MoveOutcome> {
    let bh = footprint.black_hole();
    moves
        .iter()
        .map(|&(v, port)| match port {
            None => MoveOutcome {
                node: v,
                result: MoveResult::None,
                entered_via: None,
                died: false,
            },
            Some(p) => {
                let edge = footprint.edge_via_port(v, p).expect("port checked by engine");
                if snapshot.is_missing(edge) {
                    MoveOutcome {
                        node: v,
                        result: MoveResult::Failed,
                        entered_via: None,
                        died: false,
                    }
                } else {
                    let u = footprint.neighbor_via_port(v, p).expect("port checked");
                    MoveOutcome {
                        node: u,
                        result: MoveResult::Succeeded,
                        entered_via: Some(footprint.entry_port(v, u).expect("edge")),
                        died: Some(u) == bh,
                    }
                }
            }
        })
        .collect()
}

/// Builds the observation of `agents[idx]`, which must be alive.
pub fn observe(
    footprint: &Footprint,
    agents: &[AgentRecord],
    idx: usize,
    snapshot: &Snapshot,
    visibility: Visibility,
    communication: Communication,
) -> Observation {
    let me = &agents[idx];
    let here = me.position.expect("observe called on a dead agent");
    let at = |v: NodeId| -> Vec<AgentId> {
        agents
            .iter()
            .filter(|a| a.position == Some(v))
            .map(|a| a.id)
            .collect()
    };
    let co_located: Vec<AgentId> = at(here).into_iter().filter(|&a| a != me.id).collect();
    let ports = matches!(visibility, Visibility::OneHop | Visibility::Full).then(|| {
        (0..footprint.degree(here))
            .map(|p| {
                let edge = footprint.edge_via_port(here, p).expect("valid port");
                let present = !snapshot.is_missing(edge);
                let far = footprint.neighbor_via_port(here, p).expect("valid port");
                PortView {
                    present,
                    far_agents: if present { at(far) } else { Vec::new() },
                }
            })
            .collect()
    });
    let full = (visibility == Visibility::Full).then(|| FullView {
        snapshot: snapshot.clone(),
        positions: agents
            .iter()
            .filter_map(|a| a.position.map(|v| (a.id, v)))
            .collect(),
    });
    let alive = (communication == Communication::Global).then(|| {
        let mut ids: Vec<AgentId> = agents.iter().filter(|a| a.alive()).map(|a| a.id).collect();
        ids.sort_unstable();
        ids
    });
    Observation {
        agent: me.id,
        here,
        degree: footprint.degree(here),
        co_located,
        last_move: me.last_move,
        entered_via: me.entered_via,
        ports,
        full,
        alive,
    }
}

pub struct Simulation {
    footprint: Footprint,
    protocol: Box<dyn Protocol>,
    adversary: Box<dyn Adversary>,
    agents: Vec<AgentRecord>,
    boards: Whiteboards,
    deaths: Vec<DeathRecord>,
    max_rounds: u64,
    keep_trace: bool,
}

impl Simulation {
    /// `placements` lists `(agent id, start node)`; ids must be distinct and
    /// every start node safe.
    pub fn new(
        footprint: Footprint,
        protocol: Box<dyn Protocol>,
        adversary: Box<dyn Adversary>,
        placements: &[(AgentId, NodeId)],
        max_rounds: u64,
    ) -> Result<Self, SimError> {
        let mut agents: Vec<AgentRecord> = placements
            .iter()
            .map(|&(id, v)| AgentRecord::new(id, v))
            .collect();
        agents.sort_by_key(|a| a.id);
        if agents.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(SimError::Scenario("agent ids are not distinct".into()));
        }
        if agents.iter().any(|a| a.id == 0) {
            return Err(SimError::Scenario("agent ids start at 1".into()));
        }
        for a in &agents {
            let v = a.position.expect("fresh agent");
            if v >= footprint.node_count() {
                return Err(SimError::Scenario(format!("agent {} placed on unknown node {v}", a.id)));
            }
            if Some(v) == footprint.black_hole() {
                return Err(SimError::Scenario(format!("agent {} placed on the black hole", a.id)));
            }
        }
        let boards = Whiteboards::new(footprint.node_count());
        Ok(Simulation {
            footprint,
            protocol,
            adversary,
            agents,
            boards,
            deaths: Vec::new(),
            max_rounds,
            keep_trace: true,
        })
    }

    pub fn keep_trace(mut self, keep: bool) -> Self {
        self.keep_trace = keep;
        self
    }

    pub fn footprint(&self) -> &Footprint {
        &self.footprint
    }

    fn observations(&self, snapshot: &Snapshot) -> Vec<Observation> {
        let vis = self.protocol.visibility();
        let comm = self.protocol.communication();
        (0..self.agents.len())
            .filter(|&i| self.agents[i].alive())
            .map(|i| observe(&self.footprint, &self.agents, i, snapshot, vis, comm))
            .collect()
    }

    fn check_actions(
        &self,
        round: u64,
        observations: &[Observation],
        actions: &[(AgentId, Action)],
    ) -> Result<Vec<Action>, ProtocolError> {
        let mut per_agent = vec![Action::Stay; self.agents.len()];
        for &(id, action) in actions {
            let idx = self
                .agents
                .binary_search_by_key(&id, |a| a.id)
                .map_err(|_| ProtocolError::Violation {
                    round,
                    msg: format!("action for unknown agent {id}"),
                })?;
            let obs = observations
                .iter()
                .find(|o| o.agent == id)
                .ok_or_else(|| ProtocolError::Violation {
                    round,
                    msg: format!("action for dead agent {id}"),
                })?;
            if let Action::Move(p) | Action::Declare(p) = action {
                if p >= obs.degree {
                    return Err(ProtocolError::InvalidPort {
                        round,
                        agent: id,
                        port: p,
                        degree: obs.degree,
                    });
                }
            }
            per_agent[idx] = action;
        }
        Ok(per_agent)
    }

    /// Moves the protocol would issue this round on a fully present graph.
    fn dry_run_intents(&self, round: u64) -> Result<Vec<Intent>, ProtocolError> {
        let mut protocol = self.protocol.clone_box();
        let mut boards = self.boards.clone();
        let obs = self.observations(&Snapshot::full(round));
        let actions = protocol.compute(round, &obs, &mut boards, &mut Vec::new())?;
        Ok(actions
            .into_iter()
            .filter_map(|(agent, a)| match a {
                Action::Move(port) => {
                    let node = obs.iter().find(|o| o.agent == agent)?.here;
                    Some(Intent { agent, node, port })
                }
                _ => None,
            })
            .collect())
    }

    fn agent_traces(&self) -> Vec<AgentTrace> {
        let tags = self.protocol.tags();
        self.agents
            .iter()
            .map(|a| {
                let tag = tags.iter().find(|(id, _)| *id == a.id).map(|(_, t)| t.clone());
                AgentTrace {
                    id: a.id,
                    node: a.position,
                    alive: a.alive(),
                    role: tag.as_ref().map_or_else(String::new, |t| t.role.clone()),
                    state: tag.map_or_else(String::new, |t| t.state),
                }
            })
            .collect()
    }

    pub fn run(mut self) -> Result<RunReport, SimError> {
        let mut trace = Vec::new();
        if self.keep_trace {
            trace.push(TraceLine::Init(TraceHeader {
                algorithm: self.protocol.name(),
                adversary: self.adversary.name(),
                node_count: self.footprint.node_count(),
                edge_count: self.footprint.edge_count(),
                black_hole: self.footprint.black_hole(),
                agents: self
                    .agents
                    .iter()
                    .map(|a| AgentStart {
                        id: a.id,
                        node: a.position.expect("fresh agent"),
                    })
                    .collect(),
            }));
        }
        let mut verdict = Verdict::TimedOut;
        let mut rounds_used = self.max_rounds;
        for round in 0..self.max_rounds {
            // (1) the adversary fixes the missing edges
            let intents = if self.adversary.wants_intents() {
                self.dry_run_intents(round)?
            } else {
                Vec::new()
            };
            let tags = self.protocol.tags();
            let view = WorldView {
                round,
                footprint: &self.footprint,
                agents: &self.agents,
                tags: &tags,
                boards: &self.boards,
                intents: &intents,
                deaths: &self.deaths,
            };
            let snapshot = snapshot_for_round(&self.footprint, self.adversary.as_mut(), round, &view)?;

            // (2) communicate, (3) compute
            let observations = self.observations(&snapshot);
            let mut events = Vec::new();
            let actions = self
                .protocol
                .compute(round, &observations, &mut self.boards, &mut events)?;
            let actions = self.check_actions(round, &observations, &actions)?;

            let declared = self.agents.iter().zip(&actions).find_map(|(a, act)| match act {
                Action::Declare(p) => Some((a.id, a.position.expect("alive"), *p)),
                _ => None,
            });
            if let Some((agent, node, port)) = declared {
                events.push(Event::Declared { agent, node, port });
            }

            // (4) move
            let moves: Vec<(NodeId, Option<Port>)> = self
                .agents
                .iter()
                .zip(&actions)
                .map(|(a, act)| match (a.position, act) {
                    (Some(v), Action::Move(p)) => (v, Some(*p)),
                    (Some(v), _) => (v, None),
                    (None, _) => (usize::MAX, None),
                })
                .collect();
            let live_moves: Vec<(NodeId, Option<Port>)> = moves
                .iter()
                .map(|&(v, p)| if v == usize::MAX { (0, None) } else { (v, p) })
                .collect();
            let outcomes = resolve_moves(&self.footprint, &live_moves, &snapshot);
            for ((agent, out), &(from, port)) in self.agents.iter_mut().zip(outcomes).zip(&moves) {
                if !agent.alive() {
                    continue;
                }
                agent.last_move = out.result;
                agent.entered_via = out.entered_via;
                if out.died {
                    agent.position = None;
                    events.push(Event::Death {
                        agent: agent.id,
                        node: out.node,
                    });
                    self.deaths.push(DeathRecord {
                        agent: agent.id,
                        from,
                        port: port.expect("died while moving"),
                        round,
                    });
                } else {
                    agent.position = Some(out.node);
                }
            }

            if self.keep_trace {
                let missing = snapshot
                    .missing
                    .iter()
                    .map(|&e: &EdgeId| self.footprint.edge(e))
                    .collect();
                trace.push(TraceLine::Round(RoundTrace {
                    round,
                    missing,
                    agents: self.agent_traces(),
                    whiteboard: self.boards.drain_deltas(),
                    events,
                }));
            } else {
                self.boards.discard_deltas();
            }

            if let Some((agent, node, port)) = declared {
                verdict = Verdict::Solved { agent, node, port };
                rounds_used = round + 1;
                break;
            }
            if self.agents.iter().all(|a| !a.alive()) {
                verdict = Verdict::Failed;
                rounds_used = round + 1;
                break;
            }
            if self.protocol.is_finished() {
                verdict = Verdict::Explored;
                rounds_used = round + 1;
                break;
            }
        }
        let outcome = Outcome {
            verdict,
            rounds_used,
            deaths: self.deaths.len(),
        };
        if self.keep_trace {
            trace.push(TraceLine::Outcome(outcome));
        }
        Ok(RunReport { outcome, trace })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(bh: Option<NodeId>) -> Footprint {
        Footprint::canonical(3, &[(0, 1), (1, 2), (0, 2)], bh).unwrap()
    }

    #[test]
    fn swap_across_one_edge() {
        let g = triangle(None);
        let out = resolve_moves(&g, &[(0, Some(0)), (1, Some(0))], &Snapshot::full(0));
        assert_eq!((out[0].node, out[1].node), (1, 0));
        assert!(out.iter().all(|o| o.result == MoveResult::Succeeded));
        assert_eq!(out[0].entered_via, Some(0));
    }

    #[test]
    fn move_over_missing_edge_fails_in_place() {
        let g = triangle(None);
        let e = g.edge_via_port(0, 0).unwrap();
        let snap = Snapshot { round: 0, missing: vec![e] };
        let out = resolve_moves(&g, &[(0, Some(0))], &snap);
        assert_eq!(out[0].node, 0);
        assert_eq!(out[0].result, MoveResult::Failed);
    }

    #[test]
    fn both_entrants_of_the_black_hole_die() {
        let g = triangle(Some(2));
        let out = resolve_moves(&g, &[(0, Some(1)), (1, Some(1))], &Snapshot::full(0));
        assert!(out[0].died && out[1].died);
    }

    fn agents(list: &[(AgentId, NodeId)]) -> Vec<AgentRecord> {
        list.iter().map(|&(id, v)| AgentRecord::new(id, v)).collect()
    }

    #[test]
    fn zero_hop_reveals_nothing_about_edges() {
        let g = Footprint::canonical(4, &[(0, 1), (0, 2), (0, 3)], None).unwrap();
        let a = agents(&[(1, 0), (7, 1)]);
        let o = observe(&g, &a, 0, &Snapshot::full(0), Visibility::ZeroHop, Communication::FaceToFace);
        assert!(o.co_located.is_empty());
        assert_eq!(o.degree, 3);
        assert!(o.ports.is_none() && o.alive.is_none());
        assert_eq!(o.port_present(0), None);
    }

    #[test]
    fn one_hop_hides_agents_across_missing_edges() {
        let g = Footprint::canonical(3, &[(0, 1), (1, 2), (0, 2)], None).unwrap();
        let a = agents(&[(1, 0), (7, 1), (8, 2)]);
        let snap = Snapshot { round: 0, missing: vec![g.edge_id(0, 1).unwrap()] };
        let o = observe(&g, &a, 0, &snap, Visibility::OneHop, Communication::FaceToFace);
        let ports = o.ports.unwrap();
        assert_eq!(ports[0], PortView { present: false, far_agents: vec![] });
        assert_eq!(ports[1], PortView { present: true, far_agents: vec![8] });
    }

    #[test]
    fn global_alive_set_excludes_the_dead() {
        let g = triangle(None);
        let mut a = agents(&[(1, 0), (3, 1), (4, 1)]);
        a[1].position = None;
        let o = observe(&g, &a, 2, &Snapshot::full(0), Visibility::ZeroHop, Communication::Global);
        assert_eq!(o.alive, Some(vec![1, 4]));
        assert_eq!(o.is_alive(3), Some(false));
        assert!(o.co_located.is_empty());
    }
}

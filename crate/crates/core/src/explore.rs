//! Pure exploration protocols (no black hole handling): a single DFS walker
//! and the two-walker strategy in which one walker never deviates from its
//! traversal while the other skips missing forward edges and restarts when a
//! return edge is missing.

use crate::dfs::{dfs_step, restart_dfs, skip_edge, DfsState, MoveKind, NodeView, Skip};
use crate::engine::{
    Action, AgentId, AgentTag, Communication, Event, MoveResult, Namespace, Observation, Protocol,
    ProtocolError, Visibility, Whiteboards,
};
use crate::tvg::Port;

/// A DFS walker bound to one whiteboard namespace.
#[derive(Debug, Clone)]
pub struct Walker {
    pub id: AgentId,
    pub ns: Namespace,
    pub state: DfsState,
    /// Port chosen at the current node and not yet traversed.
    pub pending: Option<(Port, MoveKind)>,
    /// Skips and restarts instead of waiting.
    pub deviates: bool,
    pub finished: bool,
    pub restarts: u32,
}

impl Walker {
    pub fn new(id: AgentId, ns: Namespace, deviates: bool) -> Self {
        Walker {
            id,
            ns,
            state: DfsState::new(deviates),
            pending: None,
            deviates,
            finished: false,
            restarts: 0,
        }
    }

    fn violation(round: u64, id: AgentId, e: impl std::fmt::Display) -> ProtocolError {
        ProtocolError::Violation {
            round,
            msg: format!("agent {id}: {e}"),
        }
    }

    /// Computes and records the next DFS decision at the current node.
    fn plan(&mut self, round: u64, obs: &Observation, boards: &mut Whiteboards) -> Result<(), ProtocolError> {
        let view = NodeView {
            degree: obs.degree,
            entry: boards.dfs(obs.here, self.ns),
        };
        let step = dfs_step(&self.state, &view).map_err(|e| Self::violation(round, self.id, e))?;
        if let Some(entry) = step.write {
            boards.set_dfs(obs.here, self.ns, entry);
        }
        self.state = step.state;
        self.pending = step.port.map(|p| (p, step.kind));
        Ok(())
    }

    pub fn restart(&mut self, obs: &Observation, boards: &mut Whiteboards, events: &mut Vec<Event>, reason: &str) {
        let (state, root) = restart_dfs(&self.state);
        self.state = state;
        self.pending = None;
        self.restarts += 1;
        boards.set_dfs(obs.here, self.ns, root);
        events.push(Event::DfsRestart {
            agent: self.id,
            label: state.label,
            reason: reason.into(),
        });
    }

    /// Folds the result of last round's move into the DFS state.
    pub fn absorb_move(&mut self, obs: &Observation) -> bool {
        if self.pending.is_some() {
            match obs.last_move {
                MoveResult::Succeeded => {
                    let port = obs.entered_via.expect("successful move has an entry port");
                    self.state.arrived(port);
                    self.pending = None;
                }
                MoveResult::Failed => return true,
                MoveResult::None => {}
            }
        }
        false
    }

    /// One round of plain (non-cautious) walking.
    pub fn decide(
        &mut self,
        round: u64,
        obs: &Observation,
        boards: &mut Whiteboards,
        events: &mut Vec<Event>,
    ) -> Result<Action, ProtocolError> {
        let failed = self.absorb_move(obs);
        if self.finished {
            return Ok(Action::Stay);
        }
        let mut known_missing = failed;
        for _ in 0..4 * obs.degree + 4 {
            if self.pending.is_none() {
                self.plan(round, obs, boards)?;
                known_missing = false;
            }
            let Some((p, kind)) = self.pending else {
                if self.deviates {
                    self.restart(obs, boards, events, "exhausted");
                    continue;
                }
                self.finished = true;
                return Ok(Action::Stay);
            };
            let missing = obs.port_present(p) == Some(false) || known_missing;
            if !missing {
                return Ok(Action::Move(p));
            }
            if !self.deviates {
                // waits on the same edge; without visibility it just retries
                return Ok(if obs.ports.is_some() { Action::Stay } else { Action::Move(p) });
            }
            match kind {
                MoveKind::Forward => {
                    let view = NodeView {
                        degree: obs.degree,
                        entry: boards.dfs(obs.here, self.ns),
                    };
                    match skip_edge(&self.state, &view, p) {
                        Skip::Next(step) => {
                            self.state = step.state;
                            self.pending = step.port.map(|q| (q, step.kind));
                            known_missing = false;
                        }
                        Skip::Stay => {
                            return Ok(if obs.ports.is_some() { Action::Stay } else { Action::Move(p) })
                        }
                    }
                }
                MoveKind::Return => self.restart(obs, boards, events, "missing return edge"),
            }
        }
        Ok(Action::Stay)
    }

    pub fn tag(&self, role: &str) -> AgentTag {
        AgentTag {
            role: role.into(),
            state: format!(
                "{:?} label={} out={:?}{}",
                self.state.mode,
                self.state.label,
                self.pending.map(|(p, _)| p),
                if self.finished { " done" } else { "" }
            ),
        }
    }
}

/// One agent running the DFS on its own.
#[derive(Debug, Clone)]
pub struct SingleDfs {
    walker: Walker,
}

impl SingleDfs {
    pub fn new(id: AgentId) -> Self {
        SingleDfs {
            walker: Walker::new(id, Namespace::G1, false),
        }
    }
}

impl Protocol for SingleDfs {
    fn name(&self) -> String {
        "dfs1".into()
    }

    fn visibility(&self) -> Visibility {
        Visibility::OneHop
    }

    fn communication(&self) -> Communication {
        Communication::FaceToFace
    }

    fn compute(
        &mut self,
        round: u64,
        observations: &[Observation],
        boards: &mut Whiteboards,
        events: &mut Vec<Event>,
    ) -> Result<Vec<(AgentId, Action)>, ProtocolError> {
        let Some(obs) = observations.iter().find(|o| o.agent == self.walker.id) else {
            return Ok(Vec::new());
        };
        let action = self.walker.decide(round, obs, boards, events)?;
        Ok(vec![(self.walker.id, action)])
    }

    fn tags(&self) -> Vec<(AgentId, AgentTag)> {
        vec![(self.walker.id, self.walker.tag("walker"))]
    }

    fn is_finished(&self) -> bool {
        self.walker.finished
    }

    fn clone_box(&self) -> Box<dyn Protocol> {
        Box::new(self.clone())
    }
}

/// Two independent walkers: the smaller id (`A1`) never deviates, the other
/// (`A2`) skips and restarts. Runs until `A1` completes its traversal.
#[derive(Debug, Clone)]
pub struct TwoWalkers {
    steady: Walker,
    deviating: Walker,
}

impl TwoWalkers {
    pub fn new(a: AgentId, b: AgentId) -> Self {
        let (lo, hi) = (a.min(b), a.max(b));
        TwoWalkers {
            steady: Walker::new(lo, Namespace::G1, false),
            deviating: Walker::new(hi, Namespace::G2, true),
        }
    }
}

impl Protocol for TwoWalkers {
    fn name(&self) -> String {
        "explore2".into()
    }

    fn visibility(&self) -> Visibility {
        Visibility::OneHop
    }

    fn communication(&self) -> Communication {
        Communication::FaceToFace
    }

    fn compute(
        &mut self,
        round: u64,
        observations: &[Observation],
        boards: &mut Whiteboards,
        events: &mut Vec<Event>,
    ) -> Result<Vec<(AgentId, Action)>, ProtocolError> {
        let mut out = Vec::new();
        for w in [&mut self.steady, &mut self.deviating] {
            if let Some(obs) = observations.iter().find(|o| o.agent == w.id) {
                out.push((w.id, w.decide(round, obs, boards, events)?));
            }
        }
        Ok(out)
    }

    fn tags(&self) -> Vec<(AgentId, AgentTag)> {
        vec![
            (self.steady.id, self.steady.tag("A1")),
            (self.deviating.id, self.deviating.tag("A2")),
        ]
    }

    fn is_finished(&self) -> bool {
        self.steady.finished
    }

    fn clone_box(&self) -> Box<dyn Protocol> {
        Box::new(self.clone())
    }
}

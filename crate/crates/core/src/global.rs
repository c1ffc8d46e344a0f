//! Scattered agents with 0-hop visibility and global communication.
//!
//! The two smallest ids explore: `A1` never deviates from its DFS, `A2`
//! skips and restarts. Every forward move is a single-agent cautious move:
//! the walker leaves a record `(id, port)` on the whiteboard, crosses, comes
//! back to erase the record, and crosses again. A walker destroyed in the
//! black hole leaves its record behind, and any agent that later reads a
//! record whose writer is missing from the alive set declares that port.
//! Idle agents hold position until a death frees an exploring role.
//!
//! With 0-hop visibility a missing edge is learned only from a failed move.
//! `A2` never waits: when a return leg of its cautious move fails it
//! broadcasts that its record is void and carries on from the far node.

use std::collections::{BTreeMap, BTreeSet};

use crate::dfs::{dfs_step, restart_dfs, skip_edge, DfsState, MoveKind, NodeView, Skip};
use crate::engine::{
    Action, AgentId, AgentTag, Cm1Record, Communication, Event, MoveResult, Namespace, Observation,
    Protocol, ProtocolError, Visibility, Whiteboards,
};
use crate::tvg::{NodeId, Port};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    A1,
    A2,
}

/// Where an exploring agent is within its current move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Leg {
    /// At a node with no move in progress.
    Ready,
    /// Record written at `origin`; crossing through `port`.
    Out { port: Port, origin: NodeId, written: u64 },
    /// Survived the crossing; heading back through `back` to erase the
    /// record.
    Back { back: Port, port: Port, origin: NodeId, written: u64 },
    /// Record erased; crossing `port` for good.
    Final { port: Port },
    /// Uncautious move to a node known to be safe.
    Direct { port: Port, kind: MoveKind },
    /// Waiting for a co-located walker with a smaller id to probe `port`.
    Follow { port: Port, leader: AgentId },
}

#[derive(Debug, Clone)]
struct Walker {
    id: AgentId,
    role: Role,
    dfs: DfsState,
    pending: Option<(Port, MoveKind)>,
    leg: Leg,
    finished: bool,
}

impl Walker {
    fn new(id: AgentId, role: Role) -> Self {
        Walker {
            id,
            role,
            dfs: DfsState::new(role == Role::A2),
            pending: None,
            leg: Leg::Ready,
            finished: false,
        }
    }

    fn ns(&self) -> Namespace {
        Namespace::Agent(self.id)
    }
}

/// The scattered algorithm.
#[derive(Debug, Clone)]
pub struct GlobalBhs {
    walkers: Vec<Walker>,
    idle: BTreeSet<AgentId>,
    /// Records `(writer, written round)` their writers announced void.
    void: BTreeSet<(AgentId, u64)>,
    /// An unfillable vacancy is a protocol violation.
    strict: bool,
}

struct Ctx<'a> {
    round: u64,
    obs: BTreeMap<AgentId, &'a Observation>,
    alive: Vec<AgentId>,
}

impl Ctx<'_> {
    fn violation(&self, msg: impl Into<String>) -> ProtocolError {
        ProtocolError::Violation {
            round: self.round,
            msg: msg.into(),
        }
    }
}

impl GlobalBhs {
    /// The two smallest ids explore; the rest wait. With `strict` set the
    /// run aborts when a dead explorer cannot be replaced.
    pub fn new(agents: &[AgentId], strict: bool) -> Result<Self, String> {
        let mut ids = agents.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != agents.len() || ids.len() < 2 {
            return Err(format!("the global algorithm needs at least 2 distinct agents, got {}", agents.len()));
        }
        Ok(GlobalBhs {
            walkers: vec![Walker::new(ids[0], Role::A1), Walker::new(ids[1], Role::A2)],
            idle: ids[2..].iter().copied().collect(),
            void: BTreeSet::new(),
            strict,
        })
    }

    /// Cases 1-3: the smallest idle ids fill the roles of dead walkers,
    /// `A1` first.
    fn replace_dead(&mut self, ctx: &Ctx, events: &mut Vec<Event>) -> Result<(), ProtocolError> {
        let alive = |id: AgentId| ctx.alive.binary_search(&id).is_ok();
        let mut vacant: Vec<Role> = self.walkers.iter().filter(|w| !alive(w.id)).map(|w| w.role).collect();
        if vacant.is_empty() {
            return Ok(());
        }
        vacant.sort_by_key(|r| *r as u8);
        self.walkers.retain(|w| alive(w.id));
        self.idle.retain(|&id| alive(id));
        for role in vacant {
            let Some(&next) = self.idle.iter().next() else {
                if self.strict {
                    return Err(ctx.violation("an exploring role fell vacant with no idle agent left"));
                }
                continue;
            };
            self.idle.remove(&next);
            self.walkers.push(Walker::new(next, role));
            events.push(Event::Activated {
                agent: next,
                role: format!("{role:?}"),
            });
        }
        self.walkers.sort_by_key(|w| w.role as u8);
        Ok(())
    }

    /// A readable record whose writer is gone marks the port into the black
    /// hole.
    fn tombstone(&self, ctx: &Ctx, boards: &Whiteboards, v: NodeId) -> Option<Port> {
        boards
            .cm1(v)
            .iter()
            .find(|r| ctx.alive.binary_search(&r.writer).is_err() && !self.void.contains(&(r.writer, r.written_round)))
            .map(|r| r.port)
    }

    fn plan(w: &mut Walker, ctx: &Ctx, o: &Observation, boards: &mut Whiteboards, events: &mut Vec<Event>) -> Result<(), ProtocolError> {
        for _ in 0..2 {
            if w.pending.is_some() || w.finished {
                return Ok(());
            }
            let view = NodeView {
                degree: o.degree,
                entry: boards.dfs(o.here, w.ns()),
            };
            let step = dfs_step(&w.dfs, &view).map_err(|e| ctx.violation(format!("agent {}: {e}", w.id)))?;
            if let Some(entry) = step.write {
                boards.set_dfs(o.here, w.ns(), entry);
            }
            w.dfs = step.state;
            w.pending = step.port.map(|p| (p, step.kind));
            if w.pending.is_some() {
                return Ok(());
            }
            if w.role == Role::A1 {
                w.finished = true;
                return Ok(());
            }
            Self::restart(w, o, boards, events, "traversal exhausted");
        }
        Ok(())
    }

    fn restart(w: &mut Walker, o: &Observation, boards: &mut Whiteboards, events: &mut Vec<Event>, reason: &str) {
        let (state, root) = restart_dfs(&w.dfs);
        w.dfs = state;
        w.pending = None;
        w.leg = Leg::Ready;
        boards.set_dfs(o.here, w.ns(), root);
        events.push(Event::DfsRestart {
            agent: w.id,
            label: state.label,
            reason: reason.into(),
        });
    }

    /// Treats the pending forward edge as missing.
    fn skip(w: &mut Walker, o: &Observation, boards: &mut Whiteboards, events: &mut Vec<Event>) {
        let Some((p, _)) = w.pending else { return };
        let view = NodeView {
            degree: o.degree,
            entry: boards.dfs(o.here, w.ns()),
        };
        match skip_edge(&w.dfs, &view, p) {
            Skip::Next(step) => {
                w.dfs = step.state;
                w.pending = step.port.map(|q| (q, step.kind));
                if w.pending.is_none() {
                    Self::restart(w, o, boards, events, "traversal exhausted");
                }
            }
            Skip::Stay => {}
        }
        w.leg = Leg::Ready;
    }

    fn arrive(w: &mut Walker, port: Port) {
        w.dfs.arrived(port);
        w.pending = None;
        w.leg = Leg::Ready;
    }

    /// Folds last round's move into each walker. Returns the walkers whose
    /// return leg failed.
    fn absorb(&mut self, ctx: &Ctx, boards: &mut Whiteboards, events: &mut Vec<Event>) -> Result<Vec<AgentId>, ProtocolError> {
        let mut back_failed = Vec::new();
        for w in &mut self.walkers {
            let Some(&o) = ctx.obs.get(&w.id) else { continue };
            let ok = o.last_move == MoveResult::Succeeded;
            let failed = o.last_move == MoveResult::Failed;
            match w.leg {
                Leg::Out { port, origin, written } if ok => {
                    let back = o.entered_via.ok_or_else(|| ctx.violation("crossing without an entry port"))?;
                    w.leg = Leg::Back { back, port, origin, written };
                }
                Leg::Out { .. } if failed && w.role == Role::A2 => {
                    boards.remove_cm1(o.here, w.id);
                    Self::skip(w, o, boards, events);
                }
                Leg::Back { port, .. } if ok => {
                    boards.remove_cm1(o.here, w.id);
                    w.leg = Leg::Final { port };
                }
                Leg::Back { .. } if failed => back_failed.push(w.id),
                Leg::Final { .. } | Leg::Direct { .. } if ok => {
                    let port = o.entered_via.ok_or_else(|| ctx.violation("crossing without an entry port"))?;
                    Self::arrive(w, port);
                }
                Leg::Final { .. } if failed && w.role == Role::A2 => Self::skip(w, o, boards, events),
                Leg::Direct { kind, .. } if failed && w.role == Role::A2 => match kind {
                    MoveKind::Forward => Self::skip(w, o, boards, events),
                    MoveKind::Return => Self::restart(w, o, boards, events, "missing return edge"),
                },
                _ => {}
            }
        }
        Ok(back_failed)
    }

    /// Case 4: both walkers stranded on opposite sides of the edge each must
    /// recross; each erases the other's record and both carry on.
    fn opposite_sides(&mut self, ctx: &Ctx, back_failed: &[AgentId], boards: &mut Whiteboards, events: &mut Vec<Event>) -> bool {
        if back_failed.len() != 2 || self.walkers.len() != 2 {
            return false;
        }
        let here = |id: AgentId| ctx.obs.get(&id).map(|o| o.here);
        let (Leg::Back { back: b0, origin: o0, .. }, Leg::Back { back: b1, origin: o1, .. }) =
            (self.walkers[0].leg, self.walkers[1].leg)
        else {
            return false;
        };
        let (id0, id1) = (self.walkers[0].id, self.walkers[1].id);
        if here(id0) != Some(o1) || here(id1) != Some(o0) {
            return false;
        }
        boards.remove_cm1(o1, id1);
        boards.remove_cm1(o0, id0);
        Self::arrive(&mut self.walkers[0], b0);
        Self::arrive(&mut self.walkers[1], b1);
        events.push(Event::Note {
            text: format!("case 4: agents {id0} and {id1} erase each other's records"),
        });
        true
    }

    /// `A2` gives up a failed return leg and voids its record.
    fn abandon(&mut self, back_failed: &[AgentId], events: &mut Vec<Event>) {
        for w in &mut self.walkers {
            if w.role != Role::A2 || !back_failed.contains(&w.id) {
                continue;
            }
            if let Leg::Back { back, written, .. } = w.leg {
                self.void.insert((w.id, written));
                events.push(Event::Note {
                    text: format!("agent {} voids its record of round {written}", w.id),
                });
                Self::arrive(w, back);
            }
        }
    }

    /// Whether `leader` has shown that `port` out of `v` is safe for a
    /// follower (`Some(true)`), is still trying (`Some(false)`), or has
    /// moved on to something else (`None`).
    fn leader_clears(&self, ctx: &Ctx, leader: AgentId, v: NodeId, port: Port) -> Option<bool> {
        let w = self.walkers.iter().find(|w| w.id == leader)?;
        let here = ctx.obs.get(&leader).map(|o| o.here);
        match w.leg {
            Leg::Out { port: q, origin, .. } if q == port && origin == v => Some(here != Some(v)),
            Leg::Back { port: q, origin, .. } if q == port && origin == v => Some(true),
            Leg::Final { port: q } if q == port && here == Some(v) => Some(true),
            _ => None,
        }
    }

    fn act(&mut self, ctx: &Ctx, boards: &mut Whiteboards, events: &mut Vec<Event>) -> Result<Vec<(AgentId, Action)>, ProtocolError> {
        let mut actions = Vec::new();
        let mut order: Vec<usize> = (0..self.walkers.len()).collect();
        order.sort_by_key(|&i| self.walkers[i].id);
        for i in order {
            let id = self.walkers[i].id;
            let Some(&o) = ctx.obs.get(&id) else { continue };
            if let Some(p) = self.tombstone(ctx, boards, o.here) {
                actions.push((id, Action::Declare(p)));
                continue;
            }
            if let Leg::Follow { port, leader } = self.walkers[i].leg {
                match self.leader_clears(ctx, leader, o.here, port) {
                    Some(true) => {
                        self.walkers[i].leg = Leg::Direct { port, kind: MoveKind::Forward };
                        actions.push((id, Action::Move(port)));
                        continue;
                    }
                    Some(false) => {
                        let leader_failed = ctx.obs.get(&leader).is_some_and(|l| l.last_move == MoveResult::Failed);
                        if self.walkers[i].role == Role::A2 && leader_failed {
                            // the shared edge is missing; A2 does not wait on it
                            Self::skip(&mut self.walkers[i], o, boards, events);
                        } else {
                            actions.push((id, Action::Stay));
                            continue;
                        }
                    }
                    None => self.walkers[i].leg = Leg::Ready,
                }
            }
            let action = match self.walkers[i].leg {
                Leg::Ready => {
                    Self::plan(&mut self.walkers[i], ctx, o, boards, events)?;
                    match self.walkers[i].pending {
                        None => Action::Stay,
                        Some((p, MoveKind::Return)) => {
                            self.walkers[i].leg = Leg::Direct { port: p, kind: MoveKind::Return };
                            Action::Move(p)
                        }
                        Some((p, MoveKind::Forward)) => {
                            // Case 5: a co-located walker with a smaller id probes first
                            let ahead = self.walkers.iter().find(|x| {
                                x.id < id
                                    && ctx.obs.get(&x.id).map(|y| y.here) == Some(o.here)
                                    && matches!(x.leg, Leg::Out { port, origin, .. } if port == p && origin == o.here)
                            });
                            if let Some(leader) = ahead.map(|x| x.id) {
                                self.walkers[i].leg = Leg::Follow { port: p, leader };
                                Action::Stay
                            } else {
                                boards.add_cm1(
                                    o.here,
                                    Cm1Record {
                                        writer: id,
                                        port: p,
                                        written_round: ctx.round,
                                    },
                                );
                                self.walkers[i].leg = Leg::Out {
                                    port: p,
                                    origin: o.here,
                                    written: ctx.round,
                                };
                                Action::Move(p)
                            }
                        }
                    }
                }
                Leg::Out { port, .. } | Leg::Final { port } | Leg::Direct { port, .. } => Action::Move(port),
                Leg::Back { back, .. } => Action::Move(back),
                Leg::Follow { .. } => Action::Stay,
            };
            actions.push((id, action));
        }
        Ok(actions)
    }
}

impl Protocol for GlobalBhs {
    fn name(&self) -> String {
        "global".into()
    }

    fn visibility(&self) -> Visibility {
        Visibility::ZeroHop
    }

    fn communication(&self) -> Communication {
        Communication::Global
    }

    fn compute(
        &mut self,
        round: u64,
        observations: &[Observation],
        boards: &mut Whiteboards,
        events: &mut Vec<Event>,
    ) -> Result<Vec<(AgentId, Action)>, ProtocolError> {
        let alive = observations
            .first()
            .and_then(|o| o.alive.clone())
            .unwrap_or_default();
        let ctx = Ctx {
            round,
            obs: observations.iter().map(|o| (o.agent, o)).collect(),
            alive,
        };
        self.replace_dead(&ctx, events)?;
        let back_failed = self.absorb(&ctx, boards, events)?;
        if !self.opposite_sides(&ctx, &back_failed, boards, events) {
            self.abandon(&back_failed, events);
        }
        self.act(&ctx, boards, events)
    }

    fn tags(&self) -> Vec<(AgentId, AgentTag)> {
        let mut tags: Vec<(AgentId, AgentTag)> = self
            .walkers
            .iter()
            .map(|w| {
                let leg = match w.leg {
                    Leg::Ready => "ready".to_string(),
                    Leg::Out { port, .. } => format!("out({port})"),
                    Leg::Back { back, .. } => format!("back({back})"),
                    Leg::Final { port } => format!("final({port})"),
                    Leg::Direct { port, .. } => format!("direct({port})"),
                    Leg::Follow { port, leader } => format!("follow({port},{leader})"),
                };
                let state = format!("{leg} {:?} label={}{}", w.dfs.mode, w.dfs.label, if w.finished { " done" } else { "" });
                (w.id, AgentTag { role: format!("{:?}", w.role), state })
            })
            .collect();
        tags.extend(self.idle.iter().map(|&id| {
            (
                id,
                AgentTag {
                    role: "idle".into(),
                    state: String::new(),
                },
            )
        }));
        tags.sort_by_key(|(id, _)| *id);
        tags
    }

    fn is_finished(&self) -> bool {
        self.walkers.iter().any(|w| w.role == Role::A1 && w.finished)
    }

    fn clone_box(&self) -> Box<dyn Protocol> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{GreedyStaller, NullAdversary, RandomLegal};
    use crate::engine::{Outcome, Simulation, Verdict};
    use crate::tvg::{Adversary, Footprint};

    fn run(f: &Footprint, placements: &[NodeId], adv: Box<dyn Adversary>) -> Outcome {
        let ids: Vec<AgentId> = (1..=placements.len() as AgentId).collect();
        let pl: Vec<_> = ids.iter().copied().zip(placements.iter().copied()).collect();
        let m = f.edge_count() as u64;
        let d = f.black_hole_degree() as u64;
        Simulation::new(f.clone(), Box::new(GlobalBhs::new(&ids, true).unwrap()), adv, &pl, 512 * d * m * m)
            .unwrap()
            .keep_trace(false)
            .run()
            .unwrap()
            .outcome
    }

    fn assert_solved(f: &Footprint, out: Outcome) {
        match out.verdict {
            Verdict::Solved { node, port, .. } => assert_eq!(f.neighbor_via_port(node, port).ok(), f.black_hole()),
            other => panic!("not solved: {other:?}"),
        }
        assert!(out.deaths <= f.black_hole_degree());
    }

    #[test]
    fn star_with_black_hole_centre() {
        let f = Footprint::canonical(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], Some(0)).unwrap();
        let out = run(&f, &[1, 2, 3, 4, 1, 2], Box::new(NullAdversary));
        assert_solved(&f, out);
        assert_eq!(out.deaths, 4);
    }

    #[test]
    fn co_located_walkers_serialize_a_shared_probe() {
        // both explorers start next to the black hole on a path 1-0-2
        let f = Footprint::canonical(3, &[(0, 1), (0, 2)], Some(0)).unwrap();
        let out = run(&f, &[1, 1, 2, 2], Box::new(NullAdversary));
        assert_solved(&f, out);
        // the replacement for the dead walker probes from node 2 in the same round
        assert_eq!(out.verdict, Verdict::Solved { agent: 2, node: 1, port: 0 });
        assert_eq!(out.rounds_used, 2);
    }

    #[test]
    fn rings_under_every_adversary() {
        for n in 4..=7 {
            for bh in 0..n {
                let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
                let f = Footprint::canonical(n, &edges, Some(bh)).unwrap();
                let spots: Vec<NodeId> = (0..4).map(|k| (bh + 1 + k) % n).map(|v| if v == bh { (v + 1) % n } else { v }).collect();
                assert_solved(&f, run(&f, &spots, Box::new(NullAdversary)));
                assert_solved(&f, run(&f, &spots, Box::new(GreedyStaller::default())));
                for seed in 0..5 {
                    assert_solved(&f, run(&f, &spots, Box::new(RandomLegal::new(seed, 0.5))));
                }
            }
        }
    }
}

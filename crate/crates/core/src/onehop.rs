//! Four co-located agents with 1-hop visibility and face-to-face
//! communication.
//!
//! The agents form two groups of a leader and a helper. `G1` (led by the
//! smallest id, for the whole run) never deviates from its DFS; `G2` skips
//! missing forward edges and restarts on missing return edges. Every
//! forward move is cautious: the helper probes first and the leader follows
//! only after seeing the helper alive across a present edge, so a present
//! edge with no helper behind it exposes the black hole. Return moves lead
//! to nodes the group already stood on and are made by both members at
//! once.
//!
//! When an edge vanishes in the middle of a cautious step, agents of the two
//! groups may end up split across it; the groups then swap members according
//! to the local pattern so that the unstuck pair keeps moving.
//!
//! The roster is a single consistent structure because every exchange is
//! triggered by a pattern that the agents involved observe locally.

use std::collections::BTreeMap;

use crate::dfs::{dfs_step, restart_dfs, skip_edge, DfsState, MoveKind, NodeView, Skip};
use crate::engine::{
    Action, AgentId, AgentTag, Communication, Event, Namespace, Observation, Protocol, ProtocolError,
    Visibility, Whiteboards,
};
use crate::tvg::Port;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Members co-located at the leader's node.
    Together,
    /// The helper stands across `port` from the leader, alive or not.
    Probed { port: Port, kind: MoveKind },
    /// The leader moved through `port` last round.
    Crossing,
    /// Traversal complete, or the group has no live leader.
    Done,
}

#[derive(Debug, Clone)]
struct Group {
    name: &'static str,
    ns: Namespace,
    leader: AgentId,
    helper: Option<AgentId>,
    dfs: DfsState,
    /// DFS decision at the leader's node, not yet carried out.
    pending: Option<(Port, MoveKind)>,
    phase: Phase,
    deviates: bool,
    /// Set while a stuck probe of this group has already been reported.
    stuck_reported: bool,
}

impl Group {
    fn new(name: &'static str, ns: Namespace, leader: AgentId, helper: Option<AgentId>, deviates: bool) -> Self {
        Group {
            name,
            ns,
            leader,
            helper,
            dfs: DfsState::new(deviates),
            pending: None,
            phase: Phase::Together,
            deviates,
            stuck_reported: false,
        }
    }

    fn members(&self) -> impl Iterator<Item = AgentId> {
        std::iter::once(self.leader).chain(self.helper)
    }
}

type Moves = (Vec<(AgentId, Action)>, bool, bool);

/// The 4-agent rooted algorithm. With three agents `G2` has no helper and
/// walks without caution.
#[derive(Debug, Clone)]
pub struct OneHopBhs {
    groups: [Group; 2],
    stall: u32,
}

struct Ctx<'a> {
    round: u64,
    obs: BTreeMap<AgentId, &'a Observation>,
}

impl<'a> Ctx<'a> {
    fn of(&self, id: AgentId) -> Option<&'a Observation> {
        self.obs.get(&id).copied()
    }

    fn at(&self, id: AgentId) -> Option<usize> {
        self.of(id).map(|o| o.here)
    }

    fn violation(&self, msg: impl Into<String>) -> ProtocolError {
        ProtocolError::Violation {
            round: self.round,
            msg: msg.into(),
        }
    }
}

/// A helper of the other group standing at `v` after probing into it
/// through the port `p` of `v`.
fn probed_into(ctx: &Ctx, g: &Group, v: usize, p: Port) -> bool {
    let Phase::Probed { .. } = g.phase else { return false };
    let Some(h) = g.helper else { return false };
    ctx.of(h)
        .is_some_and(|o| o.here == v && o.entered_via == Some(p))
}

impl OneHopBhs {
    /// Splits the agents by ascending id: `G1 = {a1, a2}`, `G2 = {a3, a4}`.
    pub fn new(agents: &[AgentId]) -> Result<Self, String> {
        let mut ids = agents.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != agents.len() || !(3..=4).contains(&ids.len()) {
            return Err(format!("the one-hop algorithm needs 3 or 4 distinct agents, got {}", agents.len()));
        }
        Ok(OneHopBhs {
            groups: [
                Group::new("G1", Namespace::G1, ids[0], Some(ids[1]), false),
                Group::new("G2", Namespace::G2, ids[2], ids.get(3).copied(), true),
            ],
            stall: 0,
        })
    }

    /// Plans the DFS step at the leader's node if none is pending.
    fn plan(&mut self, gi: usize, ctx: &Ctx, boards: &mut Whiteboards, events: &mut Vec<Event>) -> Result<(), ProtocolError> {
        for _ in 0..2 {
            let g = &mut self.groups[gi];
            if g.phase != Phase::Together || g.pending.is_some() {
                return Ok(());
            }
            let o = ctx.of(g.leader).ok_or_else(|| ctx.violation(format!("{} leader is gone", g.name)))?;
            let view = NodeView {
                degree: o.degree,
                entry: boards.dfs(o.here, g.ns),
            };
            let step = dfs_step(&g.dfs, &view).map_err(|e| ctx.violation(format!("{}: {e}", g.name)))?;
            if let Some(entry) = step.write {
                boards.set_dfs(o.here, g.ns, entry);
            }
            g.dfs = step.state;
            g.pending = step.port.map(|p| (p, step.kind));
            if g.pending.is_some() {
                return Ok(());
            }
            if !g.deviates {
                g.phase = Phase::Done;
                return Ok(());
            }
            self.restart(gi, ctx, boards, events, "traversal exhausted")?;
        }
        Ok(())
    }

    fn restart(&mut self, gi: usize, ctx: &Ctx, boards: &mut Whiteboards, events: &mut Vec<Event>, reason: &str) -> Result<(), ProtocolError> {
        let g = &mut self.groups[gi];
        let v = ctx.at(g.leader).ok_or_else(|| ctx.violation(format!("{} leader is gone", g.name)))?;
        let (state, root) = restart_dfs(&g.dfs);
        g.dfs = state;
        g.pending = None;
        g.phase = Phase::Together;
        g.stuck_reported = false;
        boards.set_dfs(v, g.ns, root);
        events.push(Event::DfsRestart {
            agent: g.leader,
            label: state.label,
            reason: reason.into(),
        });
        Ok(())
    }

    /// Lands groups that crossed last round and drops groups whose leader
    /// died (possible only for a helperless `G2`).
    fn absorb(&mut self, ctx: &Ctx) -> Result<(), ProtocolError> {
        for g in &mut self.groups {
            if g.phase == Phase::Done {
                continue;
            }
            let Some(o) = ctx.of(g.leader) else {
                g.phase = Phase::Done;
                continue;
            };
            if g.phase == Phase::Crossing {
                let port = o
                    .entered_via
                    .ok_or_else(|| ctx.violation(format!("{} leader crossed without an entry port", g.name)))?;
                g.dfs.arrived(port);
                g.pending = None;
                g.phase = Phase::Together;
                g.stuck_reported = false;
                if let Some(h) = g.helper {
                    if ctx.at(h) != Some(o.here) {
                        return Err(ctx.violation(format!("{} helper {h} is not with its leader after crossing", g.name)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies at most one role exchange. Returns whether one fired.
    fn exchange(&mut self, ctx: &Ctx, boards: &mut Whiteboards, events: &mut Vec<Event>) -> Result<bool, ProtocolError> {
        let [g1, g2] = &self.groups;
        if g2.phase == Phase::Done || g2.helper.is_none() || g1.phase == Phase::Done {
            return Ok(false);
        }
        let (l1, h1, l2, h2) = (g1.leader, g1.helper.expect("G1 has a helper"), g2.leader, g2.helper.expect("checked"));
        let o1 = ctx.of(l1).ok_or_else(|| ctx.violation("leader of G1 is gone"))?;
        let v = o1.here;
        let present = |p: Port| o1.port_present(p) == Some(true);
        let g2_probing_from_v = |p: Port| matches!(g2.phase, Phase::Probed { port, .. } if port == p) && ctx.at(l2) == Some(v);

        enum Swap {
            /// G1 waits across `port` on the former `G2` member `for_g1`, G2
            /// becomes `{g2_leader, g2_helper}` and restarts.
            Split { case: &'static str, port: Port, kind: MoveKind, for_g1: AgentId, g2_leader: AgentId },
            /// Both groups are re-paired across the edge.
            Across { port: Port },
            /// The stranded G2 helper takes over G2's traversal.
            Adopt { port: Port },
        }

        let swap = match (g1.phase, g1.pending) {
            (Phase::Together, Some((p, MoveKind::Forward))) if !present(p) => {
                if g2_probing_from_v(p) {
                    Some(Swap::Split { case: "I.a", port: p, kind: MoveKind::Forward, for_g1: h2, g2_leader: l2 })
                } else if probed_into(ctx, g2, v, p) {
                    Some(Swap::Split { case: "I.b", port: p, kind: MoveKind::Forward, for_g1: l2, g2_leader: h2 })
                } else {
                    None
                }
            }
            (Phase::Probed { port: p, .. }, _) if !present(p) => {
                let across = ctx.at(h1);
                (probed_into(ctx, g2, v, p) && across.is_some() && ctx.at(l2) == across).then_some(Swap::Across { port: p })
            }
            (Phase::Together, Some((p, MoveKind::Return))) if !present(p) => {
                if probed_into(ctx, g2, v, p) {
                    Some(Swap::Adopt { port: p })
                } else if g2_probing_from_v(p) {
                    Some(Swap::Split { case: "BT.b", port: p, kind: MoveKind::Return, for_g1: h2, g2_leader: l2 })
                } else {
                    None
                }
            }
            _ => None,
        };
        let Some(swap) = swap else { return Ok(false) };

        match swap {
            Swap::Split { case, port, kind, for_g1, g2_leader } => {
                let g1 = &mut self.groups[0];
                g1.helper = Some(for_g1);
                g1.phase = Phase::Probed { port, kind };
                let g2 = &mut self.groups[1];
                g2.leader = g2_leader;
                g2.helper = Some(h1);
                events.push(Event::RoleExchange {
                    case: case.into(),
                    agents: vec![l1, h1, l2, h2],
                });
                self.restart(1, ctx, boards, events, case)?;
            }
            Swap::Across { port } => {
                let g1 = &mut self.groups[0];
                g1.helper = Some(h2);
                g1.phase = Phase::Together;
                if g1.pending.map(|(p, _)| p) != Some(port) {
                    return Err(ctx.violation("G1 probe port lost during exchange"));
                }
                let g2 = &mut self.groups[1];
                g2.helper = Some(h1);
                events.push(Event::RoleExchange {
                    case: "II.c/III.b".into(),
                    agents: vec![l1, h1, l2, h2],
                });
                self.restart(1, ctx, boards, events, "II.c/III.b")?;
            }
            Swap::Adopt { port } => {
                let g1 = &mut self.groups[0];
                g1.helper = Some(l2);
                g1.phase = Phase::Probed { port, kind: MoveKind::Return };
                let g2 = &mut self.groups[1];
                g2.leader = h2;
                g2.helper = Some(h1);
                g2.dfs.arrived(port);
                g2.pending = None;
                g2.phase = Phase::Together;
                g2.stuck_reported = false;
                events.push(Event::RoleExchange {
                    case: "BT.a".into(),
                    agents: vec![l1, h1, l2, h2],
                });
            }
        }
        Ok(true)
    }

    /// `G2` facing its own missing edge: skip a forward edge, restart on a
    /// return edge, wait with a helper across.
    fn deviate(&mut self, ctx: &Ctx, boards: &mut Whiteboards, events: &mut Vec<Event>) -> Result<bool, ProtocolError> {
        let mut acted = false;
        let Some(o) = ctx.of(self.groups[1].leader) else { return Ok(false) };
        for _ in 0..2 * o.degree + 2 {
            let g = &mut self.groups[1];
            match (g.phase, g.pending) {
                (Phase::Together, Some((p, kind))) if o.port_present(p) == Some(false) => match kind {
                    MoveKind::Forward => {
                        let view = NodeView {
                            degree: o.degree,
                            entry: boards.dfs(o.here, g.ns),
                        };
                        match skip_edge(&g.dfs, &view, p) {
                            Skip::Next(step) => {
                                g.dfs = step.state;
                                g.pending = step.port.map(|q| (q, step.kind));
                                acted = true;
                                if g.pending.is_none() {
                                    self.restart(1, ctx, boards, events, "traversal exhausted")?;
                                    self.plan(1, ctx, boards, events)?;
                                }
                            }
                            Skip::Stay => return Ok(acted),
                        }
                    }
                    MoveKind::Return => {
                        self.restart(1, ctx, boards, events, "missing return edge")?;
                        self.plan(1, ctx, boards, events)?;
                        acted = true;
                    }
                },
                (Phase::Probed { port, .. }, _) if o.port_present(port) == Some(false) => {
                    if !g.stuck_reported {
                        g.stuck_reported = true;
                        events.push(Event::InferredCase {
                            agent: g.leader,
                            note: "G2 probe stranded by a missing edge; waiting".into(),
                        });
                    }
                    return Ok(acted);
                }
                _ => return Ok(acted),
            }
        }
        Ok(acted)
    }

    /// Returns the actions, whether any group moved, and whether any group
    /// waits on a missing edge.
    fn moves(&mut self, ctx: &Ctx) -> Result<Moves, ProtocolError> {
        let before = self.groups.clone();
        let mut actions: Vec<(AgentId, Action)> = Vec::new();
        let mut waiting = false;
        let mut probes: Vec<(usize, Port)> = Vec::new();
        for gi in 0..2 {
            let other = &before[1 - gi];
            let g = &mut self.groups[gi];
            let Some(o) = ctx.of(g.leader) else { continue };
            let v = o.here;
            let present = |p: Port| o.port_present(p) == Some(true);
            let all_move = |g: &Group, p: Port, actions: &mut Vec<(AgentId, Action)>| {
                for id in g.members() {
                    if ctx.of(id).is_some() {
                        actions.push((id, Action::Move(p)));
                    }
                }
            };
            match (g.phase, g.pending) {
                (Phase::Done, _) | (Phase::Crossing, _) => {}
                (Phase::Together, Some((p, _))) if !present(p) => waiting = true,
                (Phase::Together, Some((p, MoveKind::Return))) => {
                    all_move(g, p, &mut actions);
                    g.phase = Phase::Crossing;
                }
                (Phase::Together, Some((p, MoveKind::Forward))) => {
                    let other_here = ctx.at(other.leader) == Some(v);
                    match other.phase {
                        Phase::Probed { port, kind } if other_here && port == p => {
                            let h = other.helper.expect("a probing group has a helper");
                            if o.sees_across(p, h) {
                                all_move(g, p, &mut actions);
                                g.phase = Phase::Crossing;
                            } else if kind == MoveKind::Forward {
                                actions.push((g.leader, Action::Declare(p)));
                            }
                            continue;
                        }
                        Phase::Together
                            if other_here
                                && other.pending == Some((p, MoveKind::Forward))
                                && (g.helper.is_none() || (gi == 0 && other.helper.is_some())) =>
                        {
                            // the other group's helper probes this port
                            continue;
                        }
                        _ => {}
                    }
                    match g.helper {
                        Some(h) => {
                            actions.push((h, Action::Move(p)));
                            probes.push((v, p));
                            g.phase = Phase::Probed { port: p, kind: MoveKind::Forward };
                        }
                        None => {
                            actions.push((g.leader, Action::Move(p)));
                            g.phase = Phase::Crossing;
                        }
                    }
                }
                (Phase::Together, None) => {
                    return Err(ctx.violation(format!("{} has no plan", g.name)));
                }
                (Phase::Probed { port, kind }, _) => {
                    if !present(port) {
                        waiting = true;
                        continue;
                    }
                    let h = g.helper.expect("a probing group has a helper");
                    if o.sees_across(port, h) {
                        actions.push((g.leader, Action::Move(port)));
                        g.phase = Phase::Crossing;
                    } else if kind == MoveKind::Forward {
                        actions.push((g.leader, Action::Declare(port)));
                    } else {
                        return Err(ctx.violation(format!("{} lost a helper on an explored node", g.name)));
                    }
                }
            }
        }
        probes.sort_unstable();
        if probes.windows(2).any(|w| w[0] == w[1]) {
            return Err(ctx.violation("two helpers probe the same port from the same node"));
        }
        let progressed = !actions.is_empty();
        Ok((actions, progressed, waiting))
    }

    fn role_of(&self, id: AgentId) -> (&'static str, &Group) {
        for g in &self.groups {
            if g.leader == id {
                return (if g.ns == Namespace::G1 { "L1" } else { "L2" }, g);
            }
            if g.helper == Some(id) {
                return (if g.ns == Namespace::G1 { "H1" } else { "H2" }, g);
            }
        }
        unreachable!("every agent belongs to a group")
    }
}

impl Protocol for OneHopBhs {
    fn name(&self) -> String {
        "onehop4".into()
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
        let ctx = Ctx {
            round,
            obs: observations.iter().map(|o| (o.agent, o)).collect(),
        };
        self.absorb(&ctx)?;
        self.plan(0, &ctx, boards, events)?;
        self.plan(1, &ctx, boards, events)?;
        let swapped = self.exchange(&ctx, boards, events)?;
        if swapped {
            self.plan(1, &ctx, boards, events)?;
        }
        let deviated = self.deviate(&ctx, boards, events)?;
        let (actions, moved, waiting) = self.moves(&ctx)?;

        let idle = self.groups.iter().all(|g| g.phase == Phase::Done);
        if swapped || deviated || moved || waiting || idle {
            self.stall = 0;
        } else {
            self.stall += 1;
            if self.stall >= 3 {
                return Err(ctx.violation("no group made progress for 3 rounds without a missing edge"));
            }
        }
        Ok(actions)
    }

    fn tags(&self) -> Vec<(AgentId, AgentTag)> {
        let mut ids: Vec<AgentId> = self.groups.iter().flat_map(|g| g.members()).collect();
        ids.sort_unstable();
        ids.into_iter()
            .map(|id| {
                let (role, g) = self.role_of(id);
                let phase = match g.phase {
                    Phase::Together => "together".to_string(),
                    Phase::Probed { port, .. } => format!("probed({port})"),
                    Phase::Crossing => "crossing".to_string(),
                    Phase::Done => "done".to_string(),
                };
                let state = format!(
                    "{phase} {:?} label={} out={:?}",
                    g.dfs.mode,
                    g.dfs.label,
                    g.pending.map(|(p, _)| p)
                );
                (id, AgentTag { role: role.into(), state })
            })
            .collect()
    }

    fn is_finished(&self) -> bool {
        self.groups[0].phase == Phase::Done
    }

    fn clone_box(&self) -> Box<dyn Protocol> {
        Box::new(self.clone())
    }
}

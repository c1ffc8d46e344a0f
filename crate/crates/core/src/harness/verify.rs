use std::collections::BTreeMap;
use std::fmt;

use crate::engine::{AgentId, Event, TraceLine, Verdict};
use crate::tvg::{Footprint, NodeId, Port, ELL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    /// Header or round numbering does not match the footprint or itself.
    Malformed,
    AdversaryLegality,
    DeathAccounting,
    DeadAgentVisible,
    IllegalMove,
    UnsoundDeclaration,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Malformed => "malformed-trace",
            ViolationKind::AdversaryLegality => "adversary-legality",
            ViolationKind::DeathAccounting => "death-accounting",
            ViolationKind::DeadAgentVisible => "dead-agent-visible",
            ViolationKind::IllegalMove => "illegal-move",
            ViolationKind::UnsoundDeclaration => "unsound-declaration",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `None` for header and outcome problems.
    pub round: Option<u64>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.round {
            Some(r) => write!(f, "round {r}: {}: {}", self.kind, self.detail),
            None => write!(f, "{}: {}", self.kind, self.detail),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub rounds_checked: u64,
    pub deaths: usize,
    pub declarations: usize,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Seen {
    node: Option<NodeId>,
    alive: bool,
}

fn flag(report: &mut VerifyReport, round: Option<u64>, kind: ViolationKind, detail: String) {
    report.violations.push(Violation { round, kind, detail });
}

fn leads_to_black_hole(f: &Footprint, node: NodeId, port: Port) -> bool {
    node < f.node_count() && f.neighbor_via_port(node, port).ok().is_some_and(|v| Some(v) == f.black_hole())
}

/// Replays the safety invariants of a trace against its footprint.
pub fn verify_trace(trace: &[TraceLine], footprint: &Footprint) -> VerifyReport {
    let mut report = VerifyReport::default();
    let bh = footprint.black_hole();
    let mut agents: BTreeMap<AgentId, Seen> = BTreeMap::new();
    let mut next_round = 0u64;
    let mut lines = trace.iter();

    match lines.next() {
        Some(TraceLine::Init(h)) => {
            if (h.node_count, h.edge_count, h.black_hole) != (footprint.node_count(), footprint.edge_count(), bh) {
                flag(&mut report, None, ViolationKind::Malformed, "header does not match the footprint".into());
            }
            for a in &h.agents {
                if a.node >= footprint.node_count() || Some(a.node) == bh {
                    flag(&mut report, None, ViolationKind::Malformed, format!("agent {} starts on unsafe node {}", a.id, a.node));
                }
                agents.insert(a.id, Seen { node: Some(a.node), alive: true });
            }
        }
        _ => {
            flag(&mut report, None, ViolationKind::Malformed, "trace does not start with a header".into());
            return report;
        }
    }

    for line in lines {
        match line {
            TraceLine::Init(_) => flag(&mut report, None, ViolationKind::Malformed, "second header".into()),
            TraceLine::Round(r) => {
                let round = Some(r.round);
                if r.round != next_round {
                    flag(&mut report, round, ViolationKind::Malformed, format!("expected round {next_round}"));
                }
                next_round = r.round + 1;
                report.rounds_checked += 1;

                let mut missing = Vec::new();
                for &(u, v) in &r.missing {
                    match footprint.edge_id(u, v) {
                        Some(e) => missing.push(e),
                        None => flag(&mut report, round, ViolationKind::AdversaryLegality, format!("{u}-{v} is not an edge")),
                    }
                }
                if r.missing.len() > ELL {
                    flag(
                        &mut report,
                        round,
                        ViolationKind::AdversaryLegality,
                        format!("{} edges missing (limit {ELL})", r.missing.len()),
                    );
                }
                if !footprint.connected_without(&missing) {
                    flag(&mut report, round, ViolationKind::AdversaryLegality, "snapshot is disconnected".into());
                }
                let present = |u: NodeId, v: NodeId| footprint.edge_id(u, v).is_some_and(|e| !missing.contains(&e));

                let died: Vec<AgentId> = r
                    .events
                    .iter()
                    .filter_map(|e| match e {
                        Event::Death { agent, .. } => Some(*agent),
                        _ => None,
                    })
                    .collect();
                for a in &r.agents {
                    let Some(prev) = agents.get(&a.id).copied() else {
                        flag(&mut report, round, ViolationKind::Malformed, format!("unknown agent {}", a.id));
                        continue;
                    };
                    if !prev.alive {
                        if a.alive || a.node.is_some() {
                            flag(
                                &mut report,
                                round,
                                ViolationKind::DeadAgentVisible,
                                format!("agent {} reappears after its death", a.id),
                            );
                        }
                        continue;
                    }
                    let from = prev.node.expect("alive agents have a position");
                    if a.alive != a.node.is_some() {
                        flag(&mut report, round, ViolationKind::Malformed, format!("agent {} alive flag disagrees with position", a.id));
                    }
                    match a.node.filter(|_| a.alive) {
                        None => {
                            if !died.contains(&a.id) {
                                flag(&mut report, round, ViolationKind::DeathAccounting, format!("agent {} vanished without a death", a.id));
                            }
                            if !bh.is_some_and(|b| present(from, b)) {
                                flag(
                                    &mut report,
                                    round,
                                    ViolationKind::IllegalMove,
                                    format!("agent {} died at {from} without a present edge into the black hole", a.id),
                                );
                            }
                            report.deaths += 1;
                            agents.insert(a.id, Seen { node: None, alive: false });
                        }
                        Some(v) => {
                            if Some(v) == bh {
                                flag(&mut report, round, ViolationKind::DeathAccounting, format!("agent {} stands on the black hole", a.id));
                            }
                            if died.contains(&a.id) {
                                flag(&mut report, round, ViolationKind::DeathAccounting, format!("agent {} reported dead but alive", a.id));
                            }
                            if v != from && !present(from, v) {
                                flag(&mut report, round, ViolationKind::IllegalMove, format!("agent {} moved {from}->{v} without a present edge", a.id));
                            }
                            agents.insert(a.id, Seen { node: Some(v), alive: true });
                        }
                    }
                }
                for e in &r.events {
                    if let Event::Declared { agent, node, port } = e {
                        report.declarations += 1;
                        if !leads_to_black_hole(footprint, *node, *port) {
                            flag(
                                &mut report,
                                round,
                                ViolationKind::UnsoundDeclaration,
                                format!("agent {agent} declared port {port} at node {node}"),
                            );
                        }
                    }
                }
            }
            TraceLine::Outcome(o) => {
                if o.deaths != report.deaths {
                    let detail = format!("outcome reports {} deaths, trace shows {}", o.deaths, report.deaths);
                    flag(&mut report, None, ViolationKind::DeathAccounting, detail);
                }
                if o.rounds_used != next_round {
                    flag(&mut report, None, ViolationKind::Malformed, format!("outcome reports {} rounds, trace has {next_round}", o.rounds_used));
                }
                if let Verdict::Solved { agent, node, port } = o.verdict {
                    if !leads_to_black_hole(footprint, node, port) {
                        flag(
                            &mut report,
                            None,
                            ViolationKind::UnsoundDeclaration,
                            format!("verdict: agent {agent} port {port} at node {node}"),
                        );
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::RandomLegal;
    use crate::engine::Simulation;
    use crate::onehop::OneHopBhs;

    fn run() -> (Footprint, Vec<TraceLine>) {
        let edges: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let f = Footprint::canonical(5, &edges, Some(3)).unwrap();
        let sim = Simulation::new(
            f.clone(),
            Box::new(OneHopBhs::new(&[1, 2, 3, 4]).unwrap()),
            Box::new(RandomLegal::new(1, 0.5)),
            &[(1, 0), (2, 0), (3, 0), (4, 0)],
            10_000,
        )
        .unwrap();
        (f, sim.run().unwrap().trace)
    }

    #[test]
    fn genuine_trace_passes() {
        let (f, trace) = run();
        let report = verify_trace(&trace, &f);
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.declarations == 1 && report.deaths <= 2);
    }

    #[test]
    fn two_missing_edges_break_legality() {
        let (f, mut trace) = run();
        let TraceLine::Round(r) = &mut trace[3] else { panic!() };
        r.missing = vec![(0, 1), (1, 2)];
        let report = verify_trace(&trace, &f);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::AdversaryLegality && v.round == Some(2)));
    }

    #[test]
    fn wrong_declaration_is_caught() {
        let (f, mut trace) = run();
        let Some(TraceLine::Outcome(o)) = trace.last_mut() else { panic!() };
        o.verdict = Verdict::Solved { agent: 1, node: 0, port: 0 };
        let bad = verify_trace(&trace, &f);
        assert!(bad.violations.iter().any(|v| v.kind == ViolationKind::UnsoundDeclaration));
    }
}

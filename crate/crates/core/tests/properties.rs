use proptest::prelude::*;

use dynbhs::engine::{trace_to_string, TraceLine};
use dynbhs::harness::{generate_graph, run_scenario, verify_trace, Algorithm, GraphKind, Placement, Scenario, ViolationKind};
use dynbhs::tvg::Footprint;

fn random_kind() -> impl Strategy<Value = GraphKind> {
    (3usize..=10, any::<u64>(), 0usize..=12).prop_map(|(n, seed, extra)| GraphKind::RandomConnected {
        n,
        m: (n - 1 + extra).min(n * (n - 1) / 2),
        seed,
    })
}

fn with_black_hole() -> impl Strategy<Value = (GraphKind, usize)> {
    random_kind().prop_flat_map(|k| {
        let GraphKind::RandomConnected { n, .. } = k else { unreachable!() };
        (Just(k), 0..n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ports_round_trip(kind in random_kind()) {
        let f = generate_graph(&kind, None).unwrap();
        for v in 0..f.node_count() {
            for p in 0..f.degree(v) {
                let u = f.neighbor_via_port(v, p).unwrap();
                let back = f.entry_port(v, u).unwrap();
                prop_assert_eq!(f.neighbor_via_port(u, back).unwrap(), v);
                prop_assert_eq!(f.edge_via_port(v, p).unwrap(), f.edge_via_port(u, back).unwrap());
            }
        }
        let reparsed = Footprint::from_text(&f.to_text()).unwrap();
        prop_assert_eq!(reparsed, f);
    }

    #[test]
    fn every_adversary_stays_legal((kind, bh) in with_black_hole(), adv in prop::sample::select(vec!["null", "random", "greedy", "freeze"]), seed in 0u64..1000) {
        let s = Scenario::generated("p", kind, Some(bh), Algorithm::OneHop4)
            .placement(Placement::Root(if bh == 0 { 1 } else { 0 }))
            .adversary(adv)
            .seed(seed)
            .max_rounds(2_000);
        // run_scenario replays the trace and rejects any violation
        let run = run_scenario(&s).unwrap();
        for line in &run.trace {
            if let TraceLine::Round(r) = line {
                prop_assert!(r.missing.len() <= 1);
            }
        }
    }

    #[test]
    fn global_runs_are_reproducible((kind, bh) in with_black_hole(), seed in 0u64..1000) {
        let s = Scenario::generated("d", kind, Some(bh), Algorithm::Global)
            .placement(Placement::Random)
            .adversary("random")
            .seed(seed)
            .max_rounds(5_000);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        prop_assert_eq!(trace_to_string(&a.trace), trace_to_string(&b.trace));
    }

    #[test]
    fn generators_are_deterministic(kind in random_kind()) {
        prop_assert_eq!(generate_graph(&kind, None).unwrap(), generate_graph(&kind, None).unwrap());
    }
}

fn ring_run() -> (Footprint, Vec<TraceLine>) {
    let s = Scenario::generated("r", GraphKind::Ring { n: 6 }, Some(3), Algorithm::OneHop4).adversary("greedy");
    let run = run_scenario(&s).unwrap();
    (run.footprint, run.trace)
}

#[test]
fn agent_moving_after_death_is_reported_at_that_round() {
    let (f, mut trace) = ring_run();
    let died_at = trace
        .iter()
        .position(|l| matches!(l, TraceLine::Round(r) if r.agents.iter().any(|a| !a.alive)))
        .expect("someone dies in the black hole");
    let victim = match &trace[died_at] {
        TraceLine::Round(r) => r.agents.iter().find(|a| !a.alive).unwrap().id,
        _ => unreachable!(),
    };
    let round = {
        let TraceLine::Round(r) = &mut trace[died_at + 1] else { panic!("run ended at the death") };
        let a = r.agents.iter_mut().find(|a| a.id == victim).unwrap();
        a.alive = true;
        a.node = Some(2);
        r.round
    };
    let report = verify_trace(&trace, &f);
    assert!(report
        .violations
        .iter()
        .any(|v| v.kind == ViolationKind::DeadAgentVisible && v.round == Some(round)));
}

#[test]
fn teleporting_agent_is_an_illegal_move() {
    let (f, mut trace) = ring_run();
    let TraceLine::Round(r) = &mut trace[1] else { panic!() };
    let a = r.agents.iter_mut().find(|a| a.alive).unwrap();
    a.node = Some(2);
    let report = verify_trace(&trace, &f);
    assert!(report.violations.iter().any(|v| v.kind == ViolationKind::IllegalMove && v.round == Some(0)));
}

#[test]
fn disconnecting_snapshot_is_flagged() {
    let (f, mut trace) = ring_run();
    let TraceLine::Round(r) = &mut trace[2] else { panic!() };
    r.missing = vec![(0, 1), (3, 4)];
    let report = verify_trace(&trace, &f);
    let legality: Vec<_> = report.violations.iter().filter(|v| v.kind == ViolationKind::AdversaryLegality).collect();
    assert!(legality.len() >= 2 && legality.iter().all(|v| v.round == Some(1)));
}

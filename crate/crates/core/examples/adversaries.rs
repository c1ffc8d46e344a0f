//! Compares how long each adversary stalls the same search, and shows the
//! frozen-edge adversary against the two-walker exploration.

use dynbhs::engine::TraceLine;
use dynbhs::harness::{run_scenario, Algorithm, GraphKind, Placement, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind = GraphKind::RandomConnected { n: 12, m: 20, seed: 9 };
    for adversary in ["null", "random", "greedy"] {
        let s = Scenario::generated(adversary, kind.clone(), Some(7), Algorithm::OneHop4)
            .placement(Placement::Root(0))
            .adversary(adversary)
            .seed(3);
        let run = run_scenario(&s)?;
        let removals = run
            .trace
            .iter()
            .filter(|l| matches!(l, TraceLine::Round(r) if !r.missing.is_empty()))
            .count();
        println!("{}\tsnapshots with a missing edge: {removals}", run.summary_line());
    }
    let s = Scenario::generated("freeze", kind, None, Algorithm::Explore2).adversary("freeze").max_rounds(2_000);
    let run = run_scenario(&s)?;
    let frozen = run.trace.iter().find_map(|l| match l {
        TraceLine::Round(r) => r.missing.first().map(|&e| (r.round, e)),
        _ => None,
    });
    println!("{}\tfrozen (round, edge): {frozen:?}", run.summary_line());
    Ok(())
}

//! The two lower-bound constructions: three co-located agents on the clique
//! chain, and delta+1 scattered agents on the padded construction. Neither
//! team ever declares, and the adversary keeps every snapshot connected.

use dynbhs::adversary::{build_thm1_graph, build_thm2_graph};
use dynbhs::harness::{run_scenario, Algorithm, GraphKind, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for g in [build_thm1_graph(3)?, build_thm2_graph(3)?] {
        println!(
            "n = {}, m = {}, black hole {:?}, starts {:?}",
            g.footprint.node_count(),
            g.footprint.edge_count(),
            g.footprint.black_hole(),
            g.placements
        );
        for line in &g.audit {
            println!("  {line}");
        }
    }
    let runs = [
        Scenario::generated("chain-onehop", GraphKind::CliqueChain { p: 3 }, None, Algorithm::OneHop4).adversary("thm1"),
        Scenario::generated("chain-global", GraphKind::CliqueChain { p: 3 }, None, Algorithm::Global).adversary("thm1"),
        Scenario::generated("padded-global", GraphKind::Thm2 { p: 3 }, None, Algorithm::Global).adversary("thm2"),
    ];
    for s in runs {
        let run = run_scenario(&s.underprovisioned(true).max_rounds(20_000).keep_trace(false))?;
        println!("{}", run.summary_line());
    }
    Ok(())
}

//! Scattered agents with global communication solve the search with
//! delta+2 agents, where delta is the black hole's degree.

use dynbhs::harness::{run_scenario, Algorithm, GraphKind, Placement, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("star-centre", GraphKind::Star { n: 7 }, 0),
        ("random", GraphKind::RandomConnected { n: 10, m: 16, seed: 4 }, 3),
    ];
    for (name, kind, bh) in cases {
        let s = Scenario::generated(name, kind, Some(bh), Algorithm::Global)
            .placement(Placement::Random)
            .adversary("greedy")
            .seed(2);
        let resolved = s.resolve()?;
        let starts: Vec<_> = resolved.placements.iter().map(|&(_, v)| v).collect();
        let run = run_scenario(&s)?;
        println!("{} (delta = {}, starts {starts:?})", run.summary_line(), run.footprint.black_hole_degree());
    }
    Ok(())
}

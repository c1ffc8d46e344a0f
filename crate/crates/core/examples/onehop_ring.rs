//! Four co-located agents with 1-hop visibility locate the black hole on a
//! ring under each adversary, losing at most two agents.

use dynbhs::harness::{run_scenario, Algorithm, GraphKind, Placement, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for adversary in ["null", "random", "greedy"] {
        let s = Scenario::generated(format!("ring8-{adversary}"), GraphKind::Ring { n: 8 }, Some(5), Algorithm::OneHop4)
            .placement(Placement::Root(0))
            .adversary(adversary)
            .seed(11);
        let run = run_scenario(&s)?;
        println!("{}", run.summary_line());
    }
    Ok(())
}

//! A single walker explores a static graph by depth-first search and
//! finishes within 4m rounds.

use dynbhs::harness::{generate_graph, run_scenario, Algorithm, GraphKind, GraphSource, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let footprint = generate_graph(&GraphKind::Grid { a: 3, b: 4 }, None)?;
    let m = footprint.edge_count();
    let run = run_scenario(&Scenario::new("grid3x4", GraphSource::Inline(footprint), Algorithm::Dfs1))?;
    println!("{}", run.summary_line());
    println!("{} rounds for m = {m} edges (bound {})", run.outcome.rounds_used, 4 * m);
    Ok(())
}

//! Writes a trace, reads it back, replays the safety checks, then corrupts
//! one round and shows the named violation.

use std::fs::File;
use std::io::BufReader;

use dynbhs::engine::{read_trace, TraceLine};
use dynbhs::harness::{run_scenario, verify_trace, Algorithm, GraphKind, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Scenario::generated("ring6", GraphKind::Ring { n: 6 }, Some(2), Algorithm::OneHop4).adversary("random");
    let run = run_scenario(&s)?;
    let path = std::env::temp_dir().join("dynbhs-ring6.jsonl");
    run.write_trace(&path)?;
    let mut trace = read_trace(BufReader::new(File::open(&path)?)).map_err(|(line, msg)| format!("line {line}: {msg}"))?;
    let report = verify_trace(&trace, &run.footprint);
    println!("{}: {} rounds, {} violations", path.display(), report.rounds_checked, report.violations.len());

    if let Some(TraceLine::Round(r)) = trace.get_mut(2) {
        r.missing = vec![(0, 1), (3, 4)];
    }
    for v in verify_trace(&trace, &run.footprint).violations {
        println!("corrupted: {v}");
    }
    Ok(())
}

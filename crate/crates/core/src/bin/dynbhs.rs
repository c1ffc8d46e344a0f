use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dynbhs::engine::read_trace;
use dynbhs::harness::{batch, generate_graph, run_scenario, verdict_exit_code, verify_trace, GraphKind, HarnessError, Scenario};
use dynbhs::tvg::{Footprint, NodeId};

#[derive(Parser)]
#[command(name = "dynbhs", about = "Black-hole search on dynamic graphs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and print its summary line.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Writes the line-delimited JSON trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write a generated footprint in the graph text format.
    Gen {
        /// ring, star, grid, random, clique_chain or thm2.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        a: Option<usize>,
        #[arg(long)]
        b: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bh: Option<NodeId>,
    },
    /// Replay the safety checks of a trace against its graph.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run every `.scenario` file in a directory.
    Batch {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn need(v: Option<usize>, name: &str, kind: &str) -> Result<usize, HarnessError> {
    v.ok_or_else(|| HarnessError::Config(format!("--{name} is required for {kind}")))
}

fn read(path: &PathBuf) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<i32, HarnessError> {
    match cmd {
        Command::Run { scenario, seed, trace } => {
            let mut s = Scenario::load(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            s.keep_trace = s.keep_trace || trace.is_some();
            let run = run_scenario(&s)?;
            if let Some(path) = trace {
                run.write_trace(&path)?;
            }
            println!("{}", run.summary_line());
            Ok(verdict_exit_code(&run.outcome.verdict))
        }
        Command::Gen { kind, out, n, m, p, a, b, seed, bh } => {
            let k = match kind.as_str() {
                "ring" => GraphKind::Ring { n: need(n, "n", &kind)? },
                "star" => GraphKind::Star { n: need(n, "n", &kind)? },
                "grid" => GraphKind::Grid {
                    a: need(a, "a", &kind)?,
                    b: need(b, "b", &kind)?,
                },
                "random" | "random_connected" => GraphKind::RandomConnected {
                    n: need(n, "n", &kind)?,
                    m: need(m, "m", &kind)?,
                    seed,
                },
                "clique_chain" => GraphKind::CliqueChain { p: need(p, "p", &kind)? },
                "thm2" => GraphKind::Thm2 { p: need(p, "p", &kind)? },
                _ => return Err(HarnessError::Config(format!("unknown graph kind '{kind}'"))),
            };
            let f = generate_graph(&k, bh)?;
            std::fs::write(&out, f.to_text())?;
            println!("wrote {} ({} nodes, {} edges)", out.display(), f.node_count(), f.edge_count());
            Ok(0)
        }
        Command::Verify { trace, graph } => {
            let footprint = Footprint::from_text(&read(&graph)?)?;
            let lines = read_trace(read(&trace)?.as_bytes())
                .map_err(|(line, msg)| HarnessError::Config(format!("{} line {line}: {msg}", trace.display())))?;
            let report = verify_trace(&lines, &footprint);
            for v in &report.violations {
                println!("FAIL {v}");
            }
            println!(
                "{} rounds checked, {} deaths, {} declarations, {} violations",
                report.rounds_checked,
                report.deaths,
                report.declarations,
                report.violations.len()
            );
            Ok(if report.passed() { 0 } else { 5 })
        }
        Command::Batch { dir, report } => {
            let lines = batch(&dir, &report)?;
            for l in &lines {
                println!("{l}");
            }
            let failing = lines.iter().any(|l| l.contains("\terror(exit=5)"));
            Ok(if failing { 5 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dynbhs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

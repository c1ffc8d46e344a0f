//! Scenario configuration, graph generators, the batch runner and the
//! offline trace verifier.

pub mod generate;
pub mod scenario;
pub mod verify;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{write_trace, AgentId, Outcome, Protocol, SimError, Simulation, TraceLine, Verdict};
use crate::explore::{SingleDfs, TwoWalkers};
use crate::global::GlobalBhs;
use crate::onehop::OneHopBhs;
use crate::tvg::{Footprint, GraphError};

pub use generate::{generate_graph, GraphKind};
pub use scenario::{Algorithm, GraphSource, Placement, Resolved, Scenario};
pub use verify::{verify_trace, Violation, ViolationKind, VerifyReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("config error: {0}")]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl HarnessError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Graph(_) | HarnessError::Io(_) => 4,
            HarnessError::Simulation(SimError::Scenario(_)) => 4,
            HarnessError::Simulation(_) | HarnessError::Verification(_) => 5,
        }
    }
}

/// Exit code for a completed run.
pub fn verdict_exit_code(v: &Verdict) -> i32 {
    match v {
        Verdict::Solved { .. } | Verdict::Explored => 0,
        Verdict::TimedOut => 2,
        Verdict::Failed => 3,
    }
}

/// The result of one verified scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub name: String,
    pub algorithm: Algorithm,
    pub footprint: Footprint,
    pub max_rounds: u64,
    pub outcome: Outcome,
    /// Empty when the scenario disabled tracing.
    pub trace: Vec<TraceLine>,
}

impl ScenarioRun {
    /// `name verdict rounds deaths`, tab separated.
    pub fn summary_line(&self) -> String {
        let verdict = match self.outcome.verdict {
            Verdict::Solved { agent, node, port } => format!("solved(agent={agent},node={node},port={port})"),
            Verdict::Explored => "explored".into(),
            Verdict::Failed => "failed".into(),
            Verdict::TimedOut => "timed_out".into(),
        };
        format!(
            "{}\t{}\trounds={}\tdeaths={}",
            self.name, verdict, self.outcome.rounds_used, self.outcome.deaths
        )
    }

    pub fn write_trace(&self, path: &Path) -> io::Result<()> {
        write_trace(&self.trace, io::BufWriter::new(fs::File::create(path)?))
    }
}

fn protocol_for(s: &Scenario, ids: &[AgentId]) -> Result<Box<dyn Protocol>, HarnessError> {
    Ok(match s.algorithm {
        Algorithm::OneHop4 => Box::new(OneHopBhs::new(ids).map_err(HarnessError::Config)?),
        Algorithm::Global => Box::new(GlobalBhs::new(ids, !s.underprovisioned).map_err(HarnessError::Config)?),
        Algorithm::Explore2 => Box::new(TwoWalkers::new(ids[0], ids[1])),
        Algorithm::Dfs1 => Box::new(SingleDfs::new(ids[0])),
    })
}

/// Runs a scenario and verifies any declaration against the footprint, and
/// the whole trace when one is kept.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun, HarnessError> {
    let r = s.resolve()?;
    let ids: Vec<AgentId> = r.placements.iter().map(|&(id, _)| id).collect();
    let protocol = protocol_for(s, &ids)?;
    let adversary = r.adversary.build(&r.footprint)?;
    let report = Simulation::new(r.footprint.clone(), protocol, adversary, &r.placements, r.max_rounds)?
        .keep_trace(s.keep_trace)
        .run()?;
    if let Verdict::Solved { agent, node, port } = report.outcome.verdict {
        let target = r.footprint.neighbor_via_port(node, port).ok();
        if target.is_none() || target != r.footprint.black_hole() {
            return Err(HarnessError::Verification(format!(
                "{}: agent {agent} declared port {port} at node {node}, which leads to {target:?}",
                s.name
            )));
        }
    }
    if s.keep_trace {
        let check = verify_trace(&report.trace, &r.footprint);
        if let Some(v) = check.violations.first() {
            return Err(HarnessError::Verification(format!("{}: {v}", s.name)));
        }
    }
    Ok(ScenarioRun {
        name: s.name.clone(),
        algorithm: s.algorithm,
        footprint: r.footprint,
        max_rounds: r.max_rounds,
        outcome: report.outcome,
        trace: report.trace,
    })
}

/// Scenario files in `dir` (extension `.scenario`), sorted by path.
pub fn scenario_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scenario"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every scenario in `dir` in parallel and writes one summary line per
/// scenario to `report`, in file order. Returns the lines written.
pub fn batch(dir: &Path, report: &Path) -> Result<Vec<String>, HarnessError> {
    let files = scenario_files(dir)?;
    let lines: Vec<String> = files
        .par_iter()
        .map(|path| {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match Scenario::load(path).and_then(|s| run_scenario(&s)) {
                Ok(run) => run.summary_line(),
                Err(e) => format!("{name}\terror(exit={})\t{e}", e.exit_code()),
            }
        })
        .collect();
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(report, text)?;
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onehop_on_ring_six_is_solved_within_budget() {
        let s = Scenario::generated("r6", GraphKind::Ring { n: 6 }, Some(3), Algorithm::OneHop4);
        let run = run_scenario(&s).unwrap();
        assert!(matches!(run.outcome.verdict, Verdict::Solved { .. }));
        assert!(run.outcome.rounds_used <= 512 * 36);
        assert!(run.summary_line().starts_with("r6\tsolved("));
    }

    #[test]
    fn runs_are_reproducible() {
        let s = Scenario::generated("g", GraphKind::RandomConnected { n: 8, m: 11, seed: 3 }, Some(5), Algorithm::Global)
            .placement(Placement::Random)
            .adversary("random")
            .seed(9);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(crate::engine::trace_to_string(&a.trace), crate::engine::trace_to_string(&b.trace));
    }

    #[test]
    fn batch_reports_one_line_per_scenario() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.scenario"), "generator = ring\nn = 5\nbh = 2\nalgorithm = onehop4\n").unwrap();
        fs::write(dir.path().join("b.scenario"), "generator = ring\nn = 5\nbh = 2\nalgorithm = global\nplacements = 0,1\n").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let report = dir.path().join("report.txt");
        let lines = batch(dir.path(), &report).unwrap();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("a\tsolved("));
        assert!(lines[1].starts_with("b\terror(exit=4)"));
        assert_eq!(fs::read_to_string(report).unwrap().lines().count(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(verdict_exit_code(&Verdict::TimedOut), 2);
        assert_eq!(verdict_exit_code(&Verdict::Failed), 3);
        assert_eq!(HarnessError::Config(String::new()).exit_code(), 4);
        assert_eq!(HarnessError::Verification(String::new()).exit_code(), 5);
    }
}

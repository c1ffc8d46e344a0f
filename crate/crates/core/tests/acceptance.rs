//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynbhs::engine::{trace_to_string, AgentId, TraceLine, Verdict};
use dynbhs::harness::{run_scenario, verify_trace, Algorithm, GraphKind, GraphSource, Placement, Scenario, ScenarioRun};
use dynbhs::tvg::{Footprint, NodeId};

const ADVERSARIES: [&str; 3] = ["null", "random", "greedy"];

struct Criterion {
    pass: bool,
    detail: String,
}

impl Criterion {
    fn new(failures: &[String], summary: String) -> Self {
        let detail = match failures.first() {
            None => summary,
            Some(first) => format!("{summary}; {} failures, first: {first}", failures.len()),
        };
        Criterion {
            pass: failures.is_empty(),
            detail,
        }
    }
}

/// Everything run so far, for the corpus-wide safety check.
#[derive(Default)]
struct Corpus {
    runs: Vec<(Scenario, ScenarioRun)>,
    errors: Vec<String>,
}

impl Corpus {
    fn run(&mut self, s: Scenario) -> Option<ScenarioRun> {
        match run_scenario(&s) {
            Ok(run) => {
                self.runs.push((s, run.clone()));
                Some(run)
            }
            Err(e) => {
                self.errors.push(format!("{}: {e}", s.name));
                None
            }
        }
    }
}

/// Rounds after the start of round `from` until `agent` has stood on all
/// `n` nodes; 0 if it never needed to move. `None` if coverage never
/// completes in the trace.
fn rounds_to_cover(trace: &[TraceLine], agent: AgentId, from: u64, n: usize) -> Option<u64> {
    let mut seen = BTreeSet::new();
    let mut here = None;
    for line in trace {
        match line {
            TraceLine::Init(h) => here = h.agents.iter().find(|a| a.id == agent).map(|a| a.node),
            TraceLine::Round(r) => {
                if r.round == from {
                    seen.extend(here);
                    if seen.len() == n {
                        return Some(0);
                    }
                }
                here = r.agents.iter().find(|a| a.id == agent).and_then(|a| a.node);
                if r.round >= from {
                    seen.extend(here);
                    if seen.len() == n {
                        return Some(r.round + 1 - from);
                    }
                }
            }
            TraceLine::Outcome(_) => {}
        }
    }
    None
}

fn random_graph(rng: &mut ChaCha8Rng, n_lo: usize, n_hi: usize, extra_max: usize) -> GraphKind {
    let n = rng.gen_range(n_lo..=n_hi);
    let max = n * (n - 1) / 2;
    let m = rng.gen_range(n - 1..=(n - 1 + extra_max).min(max));
    GraphKind::RandomConnected { n, m, seed: rng.gen() }
}

/// Every labelled connected graph on `n` nodes.
fn connected_graphs(n: usize) -> Vec<Vec<(NodeId, NodeId)>> {
    let pairs: Vec<(NodeId, NodeId)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    (0u32..1 << pairs.len())
        .map(|mask| pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect::<Vec<_>>())
        .filter(|edges| Footprint::canonical(n, edges, None).is_ok())
        .collect()
}

fn criterion_1() -> Criterion {
    let mut failures = Vec::new();
    let mut check = |name: String, f: Footprint| {
        let m = f.edge_count() as u64;
        let n = f.node_count();
        let s = Scenario::new(name.clone(), GraphSource::Inline(f), Algorithm::Dfs1).max_rounds(4 * m);
        match run_scenario(&s) {
            Ok(run) => {
                let covered = rounds_to_cover(&run.trace, 1, 0, n).is_some();
                if run.outcome.verdict != Verdict::Explored || !covered {
                    failures.push(format!("{name}: {:?} after {} rounds", run.outcome.verdict, run.outcome.rounds_used));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    };
    let mut exhaustive = 0;
    for n in 2..=6 {
        for (i, edges) in connected_graphs(n).into_iter().enumerate() {
            exhaustive += 1;
            check(format!("all{n}-{i}"), Footprint::canonical(n, &edges, None).unwrap());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..100 {
        let n = rng.gen_range(2..=12);
        let m = rng.gen_range(n - 1..=n * (n - 1) / 2);
        let kind = GraphKind::RandomConnected { n, m, seed: rng.gen() };
        check(format!("rand-{i}"), dynbhs::harness::generate_graph(&kind, None).unwrap());
    }
    Criterion::new(&failures, format!("{exhaustive} labelled graphs n<=6 and 100 random n<=12 explored within 4m"))
}

fn criterion_2(corpus: &mut Corpus) -> Criterion {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    for i in 0..50 {
        // at least one cycle, so there is an edge to freeze
        let n = rng.gen_range(3..=10);
        let m = rng.gen_range(n..=(n * (n - 1) / 2).min(2 * n));
        let kind = GraphKind::RandomConnected { n, m, seed: rng.gen() };
        let m = m as u64;
        let s = Scenario::generated(format!("freeze-{i}"), kind, None, Algorithm::Explore2)
            .adversary("freeze")
            .max_rounds(64 * m * m + 8 * m);
        let Some(run) = corpus.run(s) else {
            failures.push(format!("freeze-{i}: run error"));
            continue;
        };
        let frozen_at = run.trace.iter().find_map(|l| match l {
            TraceLine::Round(r) if !r.missing.is_empty() => Some(r.round),
            _ => None,
        });
        let Some(t0) = frozen_at else {
            failures.push(format!("freeze-{i}: no edge was frozen ({:?})", run.outcome.verdict));
            continue;
        };
        if run.outcome.rounds_used < t0 + 8 * m && run.outcome.verdict != Verdict::Explored {
            failures.push(format!("freeze-{i}: run ended before the window closed"));
            continue;
        }
        match rounds_to_cover(&run.trace, 2, t0, n) {
            Some(k) if k <= 8 * m => worst = worst.max(k as f64 / m as f64),
            k => failures.push(format!("freeze-{i} (n={n}, m={m}): G2 coverage after round {t0} took {k:?} rounds")),
        }
    }
    Criterion::new(&failures, format!("50 frozen-edge runs, G2 covers all nodes within {worst:.2}m of the freeze (bound 8m)"))
}

fn criterion_3(corpus: &mut Corpus) -> Criterion {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0f64;
    for i in 0..50 {
        let kind = random_graph(&mut rng, 3, 10, 8);
        let GraphKind::RandomConnected { n, m, .. } = kind else { unreachable!() };
        let m = m as u64;
        for adv in ADVERSARIES {
            let name = format!("cover-{i}-{adv}");
            let s = Scenario::generated(name.clone(), kind.clone(), None, Algorithm::Explore2)
                .adversary(adv)
                .seed(i)
                .max_rounds(32 * m * m);
            let Some(run) = corpus.run(s) else {
                failures.push(format!("{name}: run error"));
                continue;
            };
            let done = |agent| rounds_to_cover(&run.trace, agent, 0, n).filter(|&k| k <= 32 * m * m);
            match done(1).into_iter().chain(done(2)).min() {
                Some(k) => worst = worst.max(k as f64 / (m * m) as f64),
                None => failures.push(format!("{name}: neither walker covered all {n} nodes in 32m^2")),
            }
        }
    }
    Criterion::new(&failures, format!("150 runs, first full coverage by {worst:.3}m^2 rounds at worst (bound 32m^2)"))
}

fn onehop_corpus() -> Vec<Scenario> {
    let mut out = Vec::new();
    let mut push = |name: String, kind: GraphKind, bh: NodeId, root: NodeId, seed: u64| {
        for adv in ADVERSARIES {
            out.push(
                Scenario::generated(format!("{name}-{adv}"), kind.clone(), Some(bh), Algorithm::OneHop4)
                    .placement(Placement::Root(root))
                    .adversary(adv)
                    .seed(seed),
            );
        }
    };
    for n in 3..=8 {
        for bh in 0..n {
            push(format!("ring{n}-bh{bh}"), GraphKind::Ring { n }, bh, (bh + n / 2) % n, bh as u64);
        }
    }
    for (a, b) in [(2, 2), (2, 3), (3, 3)] {
        for bh in 0..a * b {
            let root = if bh == 0 { a * b - 1 } else { 0 };
            push(format!("grid{a}x{b}-bh{bh}"), GraphKind::Grid { a, b }, bh, root, bh as u64);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..20 {
        let kind = random_graph(&mut rng, 5, 12, 10);
        let GraphKind::RandomConnected { n, .. } = kind else { unreachable!() };
        let bh = rng.gen_range(0..n);
        let root = (bh + rng.gen_range(1..n)) % n;
        push(format!("rand{i}-n{n}-bh{bh}"), kind, bh, root, i);
    }
    out
}

fn global_corpus() -> Vec<Scenario> {
    let mut out = Vec::new();
    let mut push = |name: String, kind: GraphKind, bh: NodeId, seed: u64| {
        for adv in ADVERSARIES {
            out.push(
                Scenario::generated(format!("{name}-{adv}"), kind.clone(), Some(bh), Algorithm::Global)
                    .placement(Placement::Random)
                    .adversary(adv)
                    .seed(seed),
            );
        }
    };
    for n in 4..=10 {
        push(format!("star{n}-centre"), GraphKind::Star { n }, 0, n as u64);
        push(format!("star{n}-leaf"), GraphKind::Star { n }, n - 1, n as u64);
    }
    for n in 4..=7 {
        push(format!("ring{n}"), GraphKind::Ring { n }, n / 2, n as u64);
    }
    for (a, b) in [(2, 3), (3, 3), (3, 4)] {
        push(format!("grid{a}x{b}-corner"), GraphKind::Grid { a, b }, 0, 1);
        push(format!("grid{a}x{b}-inner"), GraphKind::Grid { a, b }, b + 1, 2);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..45 {
        let kind = random_graph(&mut rng, 5, 12, 14);
        let GraphKind::RandomConnected { n, .. } = kind else { unreachable!() };
        let bh = rng.gen_range(0..n);
        push(format!("rand{i}-n{n}-bh{bh}"), kind, bh, i);
    }
    out
}

fn solve_criterion(corpus: &mut Corpus, scenarios: Vec<Scenario>, onehop: bool) -> Criterion {
    let mut failures = Vec::new();
    let total = scenarios.len();
    let mut worst = 0f64;
    let mut worst_deaths = 0;
    for s in scenarios {
        let name = s.name.clone();
        let Some(run) = corpus.run(s) else {
            failures.push(format!("{name}: run error"));
            continue;
        };
        let m = run.footprint.edge_count() as u64;
        let delta = run.footprint.black_hole_degree();
        let (death_cap, round_cap) = if onehop { (2, 512 * m * m) } else { (delta, 512 * delta as u64 * m * m) };
        let o = run.outcome;
        worst = worst.max(o.rounds_used as f64 / (m * m) as f64 / if onehop { 1.0 } else { delta as f64 });
        worst_deaths = worst_deaths.max(o.deaths);
        if !matches!(o.verdict, Verdict::Solved { .. }) {
            failures.push(format!("{name}: {:?} after {} rounds", o.verdict, o.rounds_used));
        } else if o.deaths > death_cap || o.rounds_used > round_cap {
            failures.push(format!("{name}: {} deaths, {} rounds", o.deaths, o.rounds_used));
        }
    }
    let ratio = if onehop { "rounds/m^2" } else { "rounds/(delta*m^2)" };
    let deaths = if onehop { "2" } else { "delta" };
    Criterion::new(
        &failures,
        format!("{total} scenarios solved, max {ratio} = {worst:.3} (cap 512), max deaths {worst_deaths} (cap {deaths})"),
    )
}

fn criterion_6(corpus: &mut Corpus) -> Criterion {
    let mut failures = Vec::new();
    let mut verdicts = Vec::new();
    let runs = [
        Scenario::generated("thm1-onehop", GraphKind::CliqueChain { p: 3 }, None, Algorithm::OneHop4).adversary("thm1"),
        Scenario::generated("thm1-global", GraphKind::CliqueChain { p: 3 }, None, Algorithm::Global).adversary("thm1"),
        Scenario::generated("thm2-global", GraphKind::Thm2 { p: 3 }, None, Algorithm::Global).adversary("thm2"),
    ];
    for s in runs {
        let s = s.underprovisioned(true).max_rounds(100_000);
        let name = s.name.clone();
        match corpus.run(s) {
            Some(run) => {
                verdicts.push(format!("{name}={:?} after {} rounds with {} deaths", run.outcome.verdict, run.outcome.rounds_used, run.outcome.deaths));
                if matches!(run.outcome.verdict, Verdict::Solved { .. }) {
                    failures.push(format!("{name}: solved"));
                }
            }
            None => failures.push(format!("{name}: run error")),
        }
    }
    Criterion::new(&failures, format!("no strategy solved the constructions: {}", verdicts.join(", ")))
}

fn criterion_7(corpus: &Corpus) -> Criterion {
    let mut failures = corpus.errors.clone();
    let mut rounds = 0;
    for (s, run) in &corpus.runs {
        let report = verify_trace(&run.trace, &run.footprint);
        rounds += report.rounds_checked;
        failures.extend(report.violations.iter().map(|v| format!("{}: {v}", s.name)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sampled = 0;
    let pool: Vec<&(Scenario, ScenarioRun)> = corpus.runs.iter().filter(|(_, r)| r.trace.len() < 20_000).collect();
    for _ in 0..20 {
        let (s, first) = pool[rng.gen_range(0..pool.len())];
        sampled += 1;
        match run_scenario(s) {
            Ok(again) if trace_to_string(&again.trace) == trace_to_string(&first.trace) => {}
            Ok(_) => failures.push(format!("{}: traces differ between runs", s.name)),
            Err(e) => failures.push(format!("{}: rerun failed: {e}", s.name)),
        }
    }
    Criterion::new(
        &failures,
        format!("{} runs, {rounds} rounds replayed with no violation, {sampled} reruns byte-identical", corpus.runs.len()),
    )
}

fn main() -> ExitCode {
    let mut corpus = Corpus::default();
    let mut all_pass = true;
    let mut report = |k: usize, c: Criterion, t: Instant| {
        all_pass &= c.pass;
        println!(
            "criterion {k}: {} ({:.1}s) {}",
            if c.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            c.detail
        );
    };
    let t = Instant::now();
    report(1, criterion_1(), t);
    let t = Instant::now();
    report(2, criterion_2(&mut corpus), t);
    let t = Instant::now();
    report(3, criterion_3(&mut corpus), t);
    let t = Instant::now();
    report(4, solve_criterion(&mut corpus, onehop_corpus(), true), t);
    let t = Instant::now();
    report(5, solve_criterion(&mut corpus, global_corpus(), false), t);
    let t = Instant::now();
    report(6, criterion_6(&mut corpus), t);
    let t = Instant::now();
    report(7, criterion_7(&corpus), t);
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

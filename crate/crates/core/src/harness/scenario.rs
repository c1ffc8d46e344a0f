use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{build_thm1_graph, build_thm2_graph, AdversaryKind};
use crate::engine::AgentId;
use crate::tvg::{Footprint, NodeId};

use super::generate::{generate_graph, GraphKind};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    OneHop4,
    Global,
    Explore2,
    Dfs1,
}

impl Algorithm {
    /// Agents the algorithm is provisioned for on `footprint`.
    pub fn required_agents(&self, footprint: &Footprint) -> usize {
        match self {
            Algorithm::OneHop4 => 4,
            Algorithm::Global => footprint.black_hole_degree() + 2,
            Algorithm::Explore2 => 2,
            Algorithm::Dfs1 => 1,
        }
    }

    /// The round budget used when a scenario sets none.
    pub fn default_max_rounds(&self, footprint: &Footprint) -> u64 {
        let m = footprint.edge_count() as u64;
        let delta = footprint.black_hole_degree().max(1) as u64;
        match self {
            Algorithm::OneHop4 => 512 * m * m,
            Algorithm::Global => 512 * delta * m * m,
            Algorithm::Explore2 => 32 * m * m,
            Algorithm::Dfs1 => 4 * m,
        }
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "onehop4" => Algorithm::OneHop4,
            "global" => Algorithm::Global,
            "explore2" => Algorithm::Explore2,
            "dfs1" => Algorithm::Dfs1,
            _ => return Err(HarnessError::Config(format!("unknown algorithm '{s}'"))),
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::OneHop4 => "onehop4",
            Algorithm::Global => "global",
            Algorithm::Explore2 => "explore2",
            Algorithm::Dfs1 => "dfs1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSource {
    File(PathBuf),
    Generated { kind: GraphKind, black_hole: Option<NodeId> },
    Inline(Footprint),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    /// Every agent starts at this node.
    Root(NodeId),
    /// One agent per entry, ids assigned in order.
    Nodes(Vec<NodeId>),
    /// Independent uniform safe nodes drawn from the scenario seed.
    Random,
}

/// A runnable experiment. Fields left `None` take algorithm defaults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub graph: GraphSource,
    pub algorithm: Algorithm,
    pub placement: Option<Placement>,
    pub agents: Option<usize>,
    pub adversary: String,
    pub seed: u64,
    pub max_rounds: Option<u64>,
    /// Allows fewer agents than the algorithm is provisioned for.
    pub underprovisioned: bool,
    pub keep_trace: bool,
}

/// A scenario with every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub footprint: Footprint,
    pub placements: Vec<(AgentId, NodeId)>,
    pub adversary: AdversaryKind,
    pub max_rounds: u64,
}

impl Scenario {
    pub fn new(name: impl Into<String>, graph: GraphSource, algorithm: Algorithm) -> Self {
        Scenario {
            name: name.into(),
            graph,
            algorithm,
            placement: None,
            agents: None,
            adversary: "null".into(),
            seed: 0,
            max_rounds: None,
            underprovisioned: false,
            keep_trace: true,
        }
    }

    pub fn generated(name: impl Into<String>, kind: GraphKind, black_hole: Option<NodeId>, algorithm: Algorithm) -> Self {
        Scenario::new(name, GraphSource::Generated { kind, black_hole }, algorithm)
    }

    pub fn placement(mut self, p: Placement) -> Self {
        self.placement = Some(p);
        self
    }

    pub fn agents(mut self, k: usize) -> Self {
        self.agents = Some(k);
        self
    }

    pub fn adversary(mut self, name: impl Into<String>) -> Self {
        self.adversary = name.into();
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_rounds(mut self, r: u64) -> Self {
        self.max_rounds = Some(r);
        self
    }

    pub fn underprovisioned(mut self, yes: bool) -> Self {
        self.underprovisioned = yes;
        self
    }

    pub fn keep_trace(mut self, yes: bool) -> Self {
        self.keep_trace = yes;
        self
    }

    pub fn load_footprint(&self) -> Result<Footprint, HarnessError> {
        Ok(match &self.graph {
            GraphSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                Footprint::from_text(&text)?
            }
            GraphSource::Generated { kind, black_hole } => generate_graph(kind, *black_hole)?,
            GraphSource::Inline(f) => f.clone(),
        })
    }

    /// Start nodes a construction prescribes, if the graph is one.
    fn construction_placements(&self) -> Result<Option<Vec<NodeId>>, HarnessError> {
        Ok(match &self.graph {
            GraphSource::Generated { kind: GraphKind::CliqueChain { p }, .. } => Some(build_thm1_graph(*p)?.placements),
            GraphSource::Generated { kind: GraphKind::Thm2 { p }, .. } => Some(build_thm2_graph(*p)?.placements),
            _ => None,
        })
    }

    /// Checks the invariants and fills in defaults.
    pub fn resolve(&self) -> Result<Resolved, HarnessError> {
        let footprint = self.load_footprint()?;
        let n = footprint.node_count();
        let bh = footprint.black_hole();
        let required = self.algorithm.required_agents(&footprint);
        let default_count = if self.underprovisioned { required.saturating_sub(1).max(1) } else { required };
        let nodes: Vec<NodeId> = match (&self.placement, self.construction_placements()?) {
            (Some(Placement::Nodes(v)), _) => v.clone(),
            (None, Some(v)) => v,
            (Some(Placement::Root(r)), _) => vec![*r; self.agents.unwrap_or(default_count)],
            (None, None) => {
                let root = (0..n).find(|&v| Some(v) != bh).ok_or_else(|| HarnessError::Config("no safe node".into()))?;
                vec![root; self.agents.unwrap_or(default_count)]
            }
            (Some(Placement::Random), _) => {
                let safe: Vec<NodeId> = (0..n).filter(|&v| Some(v) != bh).collect();
                if safe.is_empty() {
                    return Err(HarnessError::Config("no safe node".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
                (0..self.agents.unwrap_or(default_count))
                    .map(|_| safe[rng.gen_range(0..safe.len())])
                    .collect()
            }
        };
        if let Some(k) = self.agents {
            if k != nodes.len() {
                return Err(HarnessError::Config(format!("agents={k} but {} placements", nodes.len())));
            }
        }
        let k = nodes.len();
        let fits = match self.algorithm {
            Algorithm::Explore2 | Algorithm::Dfs1 => k == required,
            Algorithm::OneHop4 if self.underprovisioned => k == 3,
            _ if self.underprovisioned => k >= 1 && k < required,
            _ => k == required,
        };
        if !fits {
            return Err(HarnessError::Config(format!(
                "{} needs {required} agents on this graph{}, got {k}",
                self.algorithm,
                if self.underprovisioned { " (fewer when underprovisioned)" } else { "" }
            )));
        }
        for &v in &nodes {
            if v >= n {
                return Err(HarnessError::Config(format!("placement {v} is not a node")));
            }
            if Some(v) == bh {
                return Err(HarnessError::Config(format!("placement {v} is the black hole")));
            }
        }
        let adversary = AdversaryKind::for_footprint(&self.adversary, self.seed, &footprint)?;
        let max_rounds = self.max_rounds.unwrap_or_else(|| self.algorithm.default_max_rounds(&footprint));
        let placements = nodes.into_iter().enumerate().map(|(i, v)| (i as AgentId + 1, v)).collect();
        Ok(Resolved {
            footprint,
            placements,
            adversary,
            max_rounds,
        })
    }

    /// Parses the flat `key = value` format. Relative graph paths resolve
    /// against `base`.
    pub fn from_config(text: &str, base: &Path) -> Result<Scenario, HarnessError> {
        let mut kv = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", i + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(HarnessError::Config(format!("line {}: duplicate key '{}'", i + 1, k.trim())));
            }
        }
        let mut cfg = Config(kv);
        let bh = match cfg.take("bh").as_deref() {
            None | Some("none") => None,
            Some(v) => Some(parse_num(v, "bh")?),
        };
        let graph = match (cfg.take("graph"), cfg.take("generator")) {
            (Some(path), None) => {
                if bh.is_some() {
                    return Err(HarnessError::Config("bh is read from the graph file".into()));
                }
                GraphSource::File(base.join(path))
            }
            (None, Some(g)) => {
                let kind = match g.as_str() {
                    "ring" => GraphKind::Ring { n: cfg.num("n")? },
                    "star" => GraphKind::Star { n: cfg.num("n")? },
                    "grid" => GraphKind::Grid {
                        a: cfg.num("a")?,
                        b: cfg.num("b")?,
                    },
                    "clique_chain" => GraphKind::CliqueChain { p: cfg.num("p")? },
                    "thm2" => GraphKind::Thm2 { p: cfg.num("p")? },
                    "random" | "random_connected" => GraphKind::RandomConnected {
                        n: cfg.num("n")?,
                        m: cfg.num("m")?,
                        seed: cfg.opt("graph_seed")?.unwrap_or(0),
                    },
                    _ => return Err(HarnessError::Config(format!("unknown generator '{g}'"))),
                };
                GraphSource::Generated { kind, black_hole: bh }
            }
            _ => return Err(HarnessError::Config("exactly one of graph or generator is required".into())),
        };
        let algorithm: Algorithm = cfg
            .take("algorithm")
            .ok_or_else(|| HarnessError::Config("algorithm is required".into()))?
            .parse()?;
        let name = cfg.take("name").unwrap_or_else(|| "scenario".into());
        let mut s = Scenario::new(name, graph, algorithm);
        s.placement = match (cfg.take("root"), cfg.take("placements")) {
            (Some(_), Some(_)) => return Err(HarnessError::Config("root and placements are exclusive".into())),
            (Some(r), None) => Some(Placement::Root(parse_num(&r, "root")?)),
            (None, Some(p)) if p == "random" => Some(Placement::Random),
            (None, Some(p)) => Some(Placement::Nodes(
                p.split(',').map(|x| parse_num(x.trim(), "placements")).collect::<Result<_, _>>()?,
            )),
            (None, None) => None,
        };
        s.agents = cfg.opt("agents")?;
        if let Some(a) = cfg.take("adversary") {
            s.adversary = a;
        }
        s.seed = cfg.opt("seed")?.unwrap_or(0);
        s.max_rounds = cfg.opt("max_rounds")?;
        s.underprovisioned = cfg.flag("underprovisioned")?.unwrap_or(false);
        s.keep_trace = cfg.flag("trace")?.unwrap_or(true);
        if let Some(k) = cfg.0.keys().next() {
            return Err(HarnessError::Config(format!("unknown or unused key '{k}'")));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut s = Scenario::from_config(&text, path.parent().unwrap_or(Path::new(".")))?;
        if s.name == "scenario" {
            if let Some(stem) = path.file_stem() {
                s.name = stem.to_string_lossy().into_owned();
            }
        }
        Ok(s)
    }
}

fn parse_num<T: FromStr>(v: &str, key: &str) -> Result<T, HarnessError> {
    v.parse()
        .map_err(|_| HarnessError::Config(format!("{key}: '{v}' is not a non-negative integer")))
}

struct Config(BTreeMap<String, String>);

impl Config {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, HarnessError> {
        self.take(key).map(|v| parse_num(&v, key)).transpose()
    }

    fn num<T: FromStr>(&mut self, key: &str) -> Result<T, HarnessError> {
        self.opt(key)?
            .ok_or_else(|| HarnessError::Config(format!("{key} is required by this generator")))
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>, HarnessError> {
        self.take(key)
            .map(|v| match v.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(HarnessError::Config(format!("{key}: '{v}' is not a boolean"))),
            })
            .transpose()
    }
}

//! Adversary strategies and the graph constructions behind the impossibility
//! results for too few agents.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::WorldView;
use crate::tvg::{Adversary, EdgeId, Footprint, GraphError, NodeId};

/// Never deletes anything.
#[derive(Debug, Clone, Default)]
pub struct NullAdversary;

impl Adversary for NullAdversary {
    fn name(&self) -> String {
        "null".into()
    }

    fn missing_edges(&mut self, _round: u64, _view: &WorldView) -> Vec<EdgeId> {
        Vec::new()
    }
}

/// Each round, with probability `rate`, deletes one edge drawn uniformly
/// from the non-bridges of the footprint.
#[derive(Debug, Clone)]
pub struct RandomLegal {
    seed: u64,
    rate: f64,
    rng: ChaCha8Rng,
    removable: Option<Vec<EdgeId>>,
}

impl RandomLegal {
    pub const DEFAULT_RATE: f64 = 0.5;

    pub fn new(seed: u64, rate: f64) -> Self {
        RandomLegal {
            seed,
            rate: rate.clamp(0.0, 1.0),
            rng: ChaCha8Rng::seed_from_u64(seed),
            removable: None,
        }
    }
}

impl Adversary for RandomLegal {
    fn name(&self) -> String {
        format!("random_legal(seed={})", self.seed)
    }

    fn missing_edges(&mut self, _round: u64, view: &WorldView) -> Vec<EdgeId> {
        let removable = self
            .removable
            .get_or_insert_with(|| view.footprint.removable_edges());
        if removable.is_empty() || !self.rng.gen_bool(self.rate) {
            return Vec::new();
        }
        vec![removable[self.rng.gen_range(0..removable.len())]]
    }
}

/// Deletes the legal edge the most agents intend to cross this round, ties
/// broken by the smallest edge id.
#[derive(Debug, Clone, Default)]
pub struct GreedyStaller {
    removable: Option<Vec<EdgeId>>,
}

impl Adversary for GreedyStaller {
    fn name(&self) -> String {
        "greedy_staller".into()
    }

    fn wants_intents(&self) -> bool {
        true
    }

    fn missing_edges(&mut self, _round: u64, view: &WorldView) -> Vec<EdgeId> {
        let removable = self
            .removable
            .get_or_insert_with(|| view.footprint.removable_edges());
        let mut counts: Vec<(usize, EdgeId)> = Vec::new();
        for intent in view.intents {
            let Ok(e) = view.footprint.edge_via_port(intent.node, intent.port) else {
                continue;
            };
            match counts.iter_mut().find(|(_, x)| *x == e) {
                Some((c, _)) => *c += 1,
                None => counts.push((1, e)),
            }
        }
        counts.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        counts
            .into_iter()
            .find(|(_, e)| removable.binary_search(e).is_ok())
            .map(|(_, e)| vec![e])
            .unwrap_or_default()
    }
}

/// Waits until the smallest-id agent intends to cross a deletable edge, then
/// deletes that edge in every later round.
#[derive(Debug, Clone, Default)]
pub struct FreezeFirstWait {
    frozen: Option<EdgeId>,
    removable: Option<Vec<EdgeId>>,
}

impl FreezeFirstWait {
    pub fn frozen(&self) -> Option<EdgeId> {
        self.frozen
    }
}

impl Adversary for FreezeFirstWait {
    fn name(&self) -> String {
        "freeze".into()
    }

    fn wants_intents(&self) -> bool {
        self.frozen.is_none()
    }

    fn missing_edges(&mut self, _round: u64, view: &WorldView) -> Vec<EdgeId> {
        if let Some(e) = self.frozen {
            return vec![e];
        }
        let removable = self
            .removable
            .get_or_insert_with(|| view.footprint.removable_edges());
        let Some(target) = view.agents.iter().filter(|a| a.alive()).map(|a| a.id).min() else {
            return Vec::new();
        };
        let hit = view
            .intents
            .iter()
            .filter(|i| i.agent == target)
            .filter_map(|i| view.footprint.edge_via_port(i.node, i.port).ok())
            .find(|e| removable.binary_search(e).is_ok());
        self.frozen = hit;
        hit.into_iter().collect()
    }
}

/// The named parts of an impossibility construction that its adversary
/// needs. "Near" is the end the co-located agents start from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpossibilityLayout {
    pub black_hole: NodeId,
    /// Region whose crowding blocks `near_bh_edge`.
    pub near_region: Vec<NodeId>,
    pub far_region: Vec<NodeId>,
    /// The black hole's neighbour inside each region.
    pub near_gate: NodeId,
    pub far_gate: NodeId,
    pub near_bh_edge: EdgeId,
    pub far_bh_edge: EdgeId,
    /// Edge back into a region and the outside node it is entered from.
    pub near_connector: EdgeId,
    pub near_watch: NodeId,
    pub far_connector: EdgeId,
    pub far_watch: NodeId,
}

#[derive(Debug, Clone)]
pub struct ImpossibilityGraph {
    pub p: usize,
    pub footprint: Footprint,
    pub layout: ImpossibilityLayout,
    pub placements: Vec<NodeId>,
    /// Human-readable account of the node budget.
    pub audit: Vec<String>,
}

/// `p` cliques of size `p` chained by connector edges; clique `i` (1-based)
/// occupies nodes `(i-1)p .. ip`. Returns the edges plus the named nodes
/// `(v_1, w_1^(1), [(w_1^(i), w_2^(i)) for 2 <= i <= p-1], v_p, w_1^(p))` and
/// the connector list `e_1 .. e_{p-1}`.
struct Chain {
    edges: Vec<(NodeId, NodeId)>,
    v1: NodeId,
    vp: NodeId,
    /// `w_1^(2)`: the outside end of `e_1`.
    w1_second: NodeId,
    /// `w_2^(p-1)`: the outside end of `e_{p-1}`.
    w2_penultimate: NodeId,
    connectors: Vec<(NodeId, NodeId)>,
}

fn clique_chain_edges(p: usize) -> Chain {
    let mut edges = Vec::new();
    for i in 0..p {
        let base = i * p;
        for a in 0..p {
            for b in a + 1..p {
                edges.push((base + a, base + b));
            }
        }
    }
    let w1 = |i: usize| (i - 1) * p + if i == 1 || i == p { 1 } else { 0 };
    let w2 = |i: usize| (i - 1) * p + 1;
    let mut connectors = vec![(w1(1), w1(2))];
    for i in 2..=p - 2 {
        connectors.push((w2(i), w1(i + 1)));
    }
    connectors.push((w2(p - 1), w1(p)));
    edges.extend_from_slice(&connectors);
    Chain {
        edges,
        v1: 0,
        vp: (p - 1) * p,
        w1_second: w1(2),
        w2_penultimate: w2(p - 1),
        connectors,
    }
}

fn edge_of(f: &Footprint, (u, v): (NodeId, NodeId)) -> EdgeId {
    f.edge_id(u, v).expect("construction edge exists")
}

/// The three-agent construction: `p` cliques of size `p` in a chain whose
/// two end cliques touch the black hole. `n = p^2 + 1`.
pub fn build_thm1_graph(p: usize) -> Result<ImpossibilityGraph, GraphError> {
    if p < 3 {
        return Err(GraphError::Infeasible(format!("clique chain needs p >= 3, got {p}")));
    }
    let chain = clique_chain_edges(p);
    let bh = p * p;
    let mut edges = chain.edges.clone();
    edges.push((bh, chain.v1));
    edges.push((bh, chain.vp));
    let footprint = Footprint::canonical(p * p + 1, &edges, Some(bh))?;
    let layout = ImpossibilityLayout {
        black_hole: bh,
        near_region: (0..p).collect(),
        far_region: ((p - 1) * p..p * p).collect(),
        near_gate: chain.v1,
        far_gate: chain.vp,
        near_bh_edge: edge_of(&footprint, (bh, chain.v1)),
        far_bh_edge: edge_of(&footprint, (bh, chain.vp)),
        near_connector: edge_of(&footprint, chain.connectors[0]),
        near_watch: chain.w1_second,
        far_connector: edge_of(&footprint, *chain.connectors.last().expect("p >= 3")),
        far_watch: chain.w2_penultimate,
    };
    let audit = vec![
        format!("{p} cliques of size {p}: {} nodes", p * p),
        "black hole: 1 node".into(),
        format!("total {} = p^2 + 1", footprint.node_count()),
        format!("connector edges: {}", chain.connectors.len()),
    ];
    // the root is a plain member of the first clique
    Ok(ImpossibilityGraph {
        p,
        footprint,
        layout,
        placements: vec![2; 3],
        audit,
    })
}

/// The scattered construction: the black hole has `p^2` neighbours
/// `u_1 .. u_{p^2}`; `u_1` and `u_2` attach to the ends of a clique chain.
/// Each `u_i` sits in its own clique with `p^2 - 2` padding nodes so that
/// `n = p^4 + 1`.
pub fn build_thm2_graph(p: usize) -> Result<ImpossibilityGraph, GraphError> {
    if p < 3 {
        return Err(GraphError::Infeasible(format!("clique chain needs p >= 3, got {p}")));
    }
    let p2 = p * p;
    let chain = clique_chain_edges(p);
    let bh = p2;
    let u = |i: usize| p2 + i;
    let pad_base = |i: usize| 2 * p2 + 1 + (i - 1) * (p2 - 2);
    let n = 2 * p2 + 1 + p2 * (p2 - 2);
    let mut edges = chain.edges.clone();
    let mut gadgets = Vec::new();
    for i in 1..=p2 {
        edges.push((bh, u(i)));
        let mut members = vec![u(i)];
        members.extend(pad_base(i)..pad_base(i) + p2 - 2);
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                edges.push((members[a], members[b]));
            }
        }
        gadgets.push(members);
    }
    edges.push((u(1), chain.v1));
    edges.push((u(2), chain.vp));
    let footprint = Footprint::canonical(n, &edges, Some(bh))?;
    let layout = ImpossibilityLayout {
        black_hole: bh,
        near_region: gadgets[0].clone(),
        far_region: gadgets[1].clone(),
        near_gate: u(1),
        far_gate: u(2),
        near_bh_edge: edge_of(&footprint, (bh, u(1))),
        far_bh_edge: edge_of(&footprint, (bh, u(2))),
        near_connector: edge_of(&footprint, (u(1), chain.v1)),
        near_watch: chain.v1,
        far_connector: edge_of(&footprint, (u(2), chain.vp)),
        far_watch: chain.vp,
    };
    let mut placements = vec![u(1), u(1)];
    placements.extend((2..=p2).map(u));
    let audit = vec![
        format!("{p} cliques of size {p}: {p2} nodes"),
        "black hole: 1 node".into(),
        format!("black-hole neighbours u_1..u_{p2}: {p2} nodes"),
        format!(
            "padding: {} per neighbour, {} total; each u_i with its padding forms a clique of size {}",
            p2 - 2,
            p2 * (p2 - 2),
            p2 - 1
        ),
        format!("total {} = p^4 + 1", footprint.node_count()),
    ];
    Ok(ImpossibilityGraph {
        p,
        footprint,
        layout,
        placements,
        audit,
    })
}

/// The confinement strategy: block the black-hole edge of a crowded end
/// region, and after a death through one end, cut the connector back into
/// that region whenever a survivor stands at its outside end.
#[derive(Debug, Clone)]
pub struct ConfinementAdversary {
    label: String,
    layout: ImpossibilityLayout,
}

impl ConfinementAdversary {
    pub fn new(label: impl Into<String>, layout: ImpossibilityLayout) -> Self {
        ConfinementAdversary {
            label: label.into(),
            layout,
        }
    }

    pub fn layout(&self) -> &ImpossibilityLayout {
        &self.layout
    }
}

impl Adversary for ConfinementAdversary {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn missing_edges(&mut self, _round: u64, view: &WorldView) -> Vec<EdgeId> {
        let l = &self.layout;
        let count_in = |region: &[NodeId]| {
            view.agents
                .iter()
                .filter(|a| a.position.is_some_and(|v| region.contains(&v)))
                .count()
        };
        let died_via = |gate: NodeId| {
            view.deaths.iter().any(|d| {
                d.from == gate && view.footprint.neighbor_via_port(gate, d.port).ok() == Some(l.black_hole)
            })
        };
        let someone_at = |v: NodeId| view.alive_at(v) > 0;
        let rules = [
            (count_in(&l.near_region) >= 2, l.near_bh_edge),
            (count_in(&l.far_region) >= 2, l.far_bh_edge),
            (died_via(l.near_gate) && someone_at(l.near_watch), l.near_connector),
            (died_via(l.far_gate) && someone_at(l.far_watch), l.far_connector),
            // both ends emptied by deaths: keep the last survivors in the middle
            (died_via(l.far_gate) && someone_at(l.near_watch), l.near_connector),
            (died_via(l.near_gate) && someone_at(l.far_watch), l.far_connector),
        ];
        rules
            .into_iter()
            .find(|&(hit, e)| hit && view.footprint.connected_without(&[e]))
            .map(|(_, e)| vec![e])
            .unwrap_or_default()
    }
}

/// Selectable adversary strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversaryKind {
    Null,
    RandomLegal { seed: u64 },
    GreedyStaller,
    Thm1 { p: usize },
    Thm2 { p: usize },
    Freeze,
}

impl AdversaryKind {
    /// Instantiates the strategy for `footprint`. The construction-specific
    /// kinds require the footprint to be exactly their construction.
    pub fn build(&self, footprint: &Footprint) -> Result<Box<dyn Adversary>, GraphError> {
        Ok(match *self {
            AdversaryKind::Null => Box::new(NullAdversary),
            AdversaryKind::RandomLegal { seed } => Box::new(RandomLegal::new(seed, RandomLegal::DEFAULT_RATE)),
            AdversaryKind::GreedyStaller => Box::new(GreedyStaller::default()),
            AdversaryKind::Freeze => Box::new(FreezeFirstWait::default()),
            AdversaryKind::Thm1 { p } => {
                let g = build_thm1_graph(p)?;
                same_construction(footprint, &g.footprint, "thm1")?;
                Box::new(ConfinementAdversary::new(format!("thm1(p={p})"), g.layout))
            }
            AdversaryKind::Thm2 { p } => {
                let g = build_thm2_graph(p)?;
                same_construction(footprint, &g.footprint, "thm2")?;
                Box::new(ConfinementAdversary::new(format!("thm2(p={p})"), g.layout))
            }
        })
    }

    /// Infers the construction parameter from the node count where needed.
    pub fn for_footprint(name: &str, seed: u64, footprint: &Footprint) -> Result<Self, GraphError> {
        let n = footprint.node_count();
        let root = |k: u32| (3..=64usize).find(|p| p.pow(k) + 1 == n);
        let kind: AdversaryKind = name
            .parse()
            .map_err(|e: UnknownAdversary| GraphError::Infeasible(e.to_string()))?;
        Ok(match kind {
            AdversaryKind::RandomLegal { .. } => AdversaryKind::RandomLegal { seed },
            AdversaryKind::Thm1 { .. } => AdversaryKind::Thm1 {
                p: root(2).ok_or_else(|| GraphError::Infeasible(format!("thm1 needs n = p^2 + 1, got {n}")))?,
            },
            AdversaryKind::Thm2 { .. } => AdversaryKind::Thm2 {
                p: root(4).ok_or_else(|| GraphError::Infeasible(format!("thm2 needs n = p^4 + 1, got {n}")))?,
            },
            other => other,
        })
    }
}

fn same_construction(actual: &Footprint, expected: &Footprint, what: &str) -> Result<(), GraphError> {
    if actual.edges() == expected.edges() && actual.black_hole() == expected.black_hole() {
        Ok(())
    } else {
        Err(GraphError::Infeasible(format!("footprint is not the {what} construction")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown adversary kind {0:?}")]
pub struct UnknownAdversary(pub String);

impl FromStr for AdversaryKind {
    type Err = UnknownAdversary;

    /// Parameters default to zero; see [`AdversaryKind::for_footprint`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "null" => AdversaryKind::Null,
            "random" | "random_legal" => AdversaryKind::RandomLegal { seed: 0 },
            "greedy" | "greedy_staller" => AdversaryKind::GreedyStaller,
            "thm1" => AdversaryKind::Thm1 { p: 0 },
            "thm2" => AdversaryKind::Thm2 { p: 0 },
            "freeze" => AdversaryKind::Freeze,
            other => return Err(UnknownAdversary(other.into())),
        })
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryKind::Null => write!(f, "null"),
            AdversaryKind::RandomLegal { seed } => write!(f, "random_legal(seed={seed})"),
            AdversaryKind::GreedyStaller => write!(f, "greedy_staller"),
            AdversaryKind::Thm1 { p } => write!(f, "thm1(p={p})"),
            AdversaryKind::Thm2 { p } => write!(f, "thm2(p={p})"),
            AdversaryKind::Freeze => write!(f, "freeze"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{AgentId, AgentRecord, DeathRecord, Intent, Whiteboards};

    fn view<'a>(
        f: &'a Footprint,
        agents: &'a [AgentRecord],
        boards: &'a Whiteboards,
        intents: &'a [Intent],
        deaths: &'a [DeathRecord],
    ) -> WorldView<'a> {
        WorldView {
            round: 0,
            footprint: f,
            agents,
            tags: &[],
            boards,
            intents,
            deaths,
        }
    }

    fn at(list: &[(AgentId, NodeId)]) -> Vec<AgentRecord> {
        list.iter().map(|&(id, v)| AgentRecord::new(id, v)).collect()
    }

    #[test]
    fn thm1_graph_shape() {
        let g = build_thm1_graph(3).unwrap();
        assert_eq!(g.footprint.node_count(), 10);
        assert_eq!(g.footprint.black_hole_degree(), 2);
        // three triangles, two connectors, two black-hole edges
        assert_eq!(g.footprint.edge_count(), 9 + 2 + 2);
        let g4 = build_thm1_graph(4).unwrap();
        assert_eq!(g4.footprint.node_count(), 17);
        assert_eq!(g4.footprint.edge_count(), 4 * 6 + 3 + 2);
        assert!(build_thm1_graph(2).is_err());
    }

    #[test]
    fn thm2_graph_shape() {
        let g = build_thm2_graph(3).unwrap();
        assert_eq!(g.footprint.node_count(), 82);
        assert_eq!(g.footprint.black_hole_degree(), 9);
        assert_eq!(g.placements.len(), 10);
        assert_eq!(g.placements.iter().filter(|&&v| v == g.layout.near_gate).count(), 2);
    }

    #[test]
    fn crowded_first_clique_blocks_e() {
        let g = build_thm1_graph(3).unwrap();
        let mut adv = ConfinementAdversary::new("thm1", g.layout.clone());
        let boards = Whiteboards::new(10);
        let agents = at(&[(1, 2), (2, 2), (3, 2)]);
        let out = adv.missing_edges(0, &view(&g.footprint, &agents, &boards, &[], &[]));
        assert_eq!(out, vec![g.layout.near_bh_edge]);
        assert_eq!(g.footprint.edge(out[0]), (0, 9));

        let dispersed = at(&[(1, 2), (2, 4), (3, 8)]);
        let out = adv.missing_edges(1, &view(&g.footprint, &dispersed, &boards, &[], &[]));
        assert!(out.is_empty());
    }

    #[test]
    fn survivor_at_watch_node_is_cut_off() {
        let g = build_thm1_graph(3).unwrap();
        let mut adv = ConfinementAdversary::new("thm1", g.layout.clone());
        let boards = Whiteboards::new(10);
        let port = g.footprint.entry_port(9, 0).unwrap();
        let deaths = [DeathRecord { agent: 1, from: 0, port, round: 3 }];
        let mut agents = at(&[(1, 0), (2, 3), (3, 5)]);
        agents[0].position = None;
        let out = adv.missing_edges(4, &view(&g.footprint, &agents, &boards, &[], &deaths));
        assert_eq!(out, vec![g.layout.near_connector]);
        assert_eq!(g.footprint.edge(out[0]), (1, 3));
    }

    #[test]
    fn greedy_picks_most_wanted_legal_edge() {
        // a path 0-1-2 plus a triangle 2-3-4: only triangle edges are legal
        let f = Footprint::canonical(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 4)], None).unwrap();
        let boards = Whiteboards::new(5);
        let agents = at(&[(1, 1), (2, 1), (3, 2)]);
        let to = |v: NodeId, u: NodeId| f.entry_port(u, v).unwrap();
        let intents = [
            Intent { agent: 1, node: 1, port: to(1, 2) },
            Intent { agent: 2, node: 1, port: to(1, 2) },
            Intent { agent: 3, node: 2, port: to(2, 3) },
        ];
        let mut adv = GreedyStaller::default();
        let out = adv.missing_edges(0, &view(&f, &agents, &boards, &intents, &[]));
        assert_eq!(out, vec![f.edge_id(2, 3).unwrap()]);
        let out = adv.missing_edges(0, &view(&f, &agents, &boards, &[], &[]));
        assert!(out.is_empty());
    }

    #[test]
    fn kind_parsing_infers_construction_size() {
        let g = build_thm1_graph(3).unwrap();
        let k = AdversaryKind::for_footprint("thm1", 0, &g.footprint).unwrap();
        assert_eq!(k, AdversaryKind::Thm1 { p: 3 });
        assert!(k.build(&g.footprint).is_ok());
        let ring = Footprint::canonical(10, &(0..10).map(|i| (i, (i + 1) % 10)).collect::<Vec<_>>(), None).unwrap();
        assert!(AdversaryKind::Thm1 { p: 3 }.build(&ring).is_err());
        assert!("bogus".parse::<AdversaryKind>().is_err());
    }
}

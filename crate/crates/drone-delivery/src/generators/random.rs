//! Seeded random instances on paths, trees and general graphs.
//!
//! Agent ranges start as breadth-first balls around random positions and are
//! then repaired so the union of the ranges covers the whole graph, keeping
//! every range connected. The same seed always yields the same instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GadgetError;
use crate::instance::{AgentData, EdgeEntry, GraphData, Handover, Instance, InstanceData, PackageData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    Tree,
    General,
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Family::Path),
            "tree" => Ok(Family::Tree),
            "general" => Ok(Family::General),
            other => Err(format!("unknown family {other:?} (path|tree|general)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomParams {
    pub nodes: usize,
    pub agents: usize,
    pub family: Family,
    /// Agent speeds are drawn uniformly from this set; a single entry gives
    /// equal speeds.
    pub speed_choices: Vec<f64>,
    /// Same for consumption rates.
    pub rate_choices: Vec<f64>,
    /// For general graphs: how many extra edges beyond the spanning tree,
    /// as a fraction of the node count.
    pub extra_edge_factor: f64,
    /// Hop-radius range of the initial breadth-first range balls.
    pub min_radius: usize,
    pub max_radius: usize,
    pub handover: Handover,
    pub positions_fixed: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            nodes: 8,
            agents: 4,
            family: Family::General,
            speed_choices: vec![0.5, 1.0, 2.0, 4.0],
            rate_choices: vec![0.5, 1.0, 2.0],
            extra_edge_factor: 0.4,
            min_radius: 1,
            max_radius: 2,
            handover: Handover::Node,
            positions_fixed: true,
        }
    }
}

pub fn gen_random(params: &RandomParams, seed: u64) -> Result<Instance, GadgetError> {
    if params.nodes < 2 {
        return Err(GadgetError::BadInput("need at least two nodes".into()));
    }
    if params.agents == 0 {
        return Err(GadgetError::BadInput("need at least one agent".into()));
    }
    if params.speed_choices.is_empty() || params.rate_choices.is_empty() {
        return Err(GadgetError::BadInput("speed and rate choices must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.nodes;
    let k = params.agents;

    // Skeleton edges.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match params.family {
        Family::Path => {
            for i in 1..n {
                pairs.push((i - 1, i));
            }
        }
        Family::Tree | Family::General => {
            for i in 1..n {
                pairs.push((rng.random_range(0..i), i));
            }
        }
    }
    if params.family == Family::General {
        let extra = (params.extra_edge_factor * n as f64).round() as usize;
        let mut attempts = 0;
        let mut added = 0;
        while added < extra && attempts < 20 * extra.max(1) {
            attempts += 1;
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            let key = (u.min(v), u.max(v));
            if u != v && !pairs.iter().any(|&(a, b)| (a.min(b), a.max(b)) == key) {
                pairs.push(key);
                added += 1;
            }
        }
    }
    let lengths: Vec<f64> = (0..pairs.len()).map(|_| rng.random_range(0.5..2.0)).collect();

    let mut adjacency = vec![Vec::new(); n];
    for (e, &(u, v)) in pairs.iter().enumerate() {
        adjacency[u].push((v, e));
        adjacency[v].push((u, e));
    }

    let source = rng.random_range(0..n);
    let target = loop {
        let t = rng.random_range(0..n);
        if t != source {
            break t;
        }
    };

    // Initial ranges: breadth-first balls (in hops) with induced edges.
    let mut agent_nodes: Vec<Vec<bool>> = Vec::new();
    let mut agent_edges: Vec<Vec<bool>> = Vec::new();
    let mut positions = Vec::new();
    for _ in 0..k {
        let p = rng.random_range(0..n);
        let radius = rng.random_range(params.min_radius..=params.max_radius);
        let mut depth = vec![usize::MAX; n];
        depth[p] = 0;
        let mut queue = std::collections::VecDeque::from([p]);
        while let Some(u) = queue.pop_front() {
            if depth[u] == radius {
                continue;
            }
            for &(w, _) in &adjacency[u] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        let in_ball: Vec<bool> = depth.iter().map(|&d| d != usize::MAX).collect();
        let edges_in: Vec<bool> = pairs.iter().map(|&(u, v)| in_ball[u] && in_ball[v]).collect();
        positions.push(p);
        agent_nodes.push(in_ball);
        agent_edges.push(edges_in);
    }

    // Repair: walk uncovered edges toward some agent's range and extend that
    // range along the walk, keeping it connected.
    for e in 0..pairs.len() {
        if agent_edges.iter().any(|mask| mask[e]) {
            continue;
        }
        let a = rng.random_range(0..k);
        let (u, v) = pairs[e];
        // Breadth-first from u until we touch the agent's current nodes.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[u] = true;
        let mut queue = std::collections::VecDeque::from([u]);
        let mut touch = if agent_nodes[a][u] { Some(u) } else { None };
        while touch.is_none() {
            let Some(x) = queue.pop_front() else { break };
            for &(w, ew) in &adjacency[x] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((x, ew));
                    if agent_nodes[a][w] {
                        touch = Some(w);
                        break;
                    }
                    queue.push_back(w);
                }
            }
        }
        let mut at = touch.expect("graph is connected");
        while let Some((px, pe)) = parent[at] {
            agent_nodes[a][at] = true;
            agent_edges[a][pe] = true;
            at = px;
        }
        agent_nodes[a][u] = true;
        agent_nodes[a][v] = true;
        agent_edges[a][e] = true;
    }

    let name = |v: usize| format!("v{v}");
    let data = InstanceData {
        graph: GraphData {
            nodes: (0..n).map(name).collect(),
            edges: pairs
                .iter()
                .zip(&lengths)
                .map(|(&(u, v), &length)| EdgeEntry { u: name(u), v: name(v), length })
                .collect(),
        },
        package: PackageData { source: name(source), target: name(target) },
        handover: params.handover,
        positions_fixed: params.positions_fixed,
        agents: (0..k)
            .map(|a| AgentData {
                id: format!("a{a}"),
                p: name(positions[a]),
                speed: params.speed_choices[rng.random_range(0..params.speed_choices.len())],
                rate: params.rate_choices[rng.random_range(0..params.rate_choices.len())],
                nodes: (0..n).filter(|&v| agent_nodes[a][v]).map(name).collect(),
                edges: pairs
                    .iter()
                    .enumerate()
                    .filter(|&(e, _)| agent_edges[a][e])
                    .map(|(_, &(u, v))| [name(u), name(v)])
                    .collect(),
            })
            .collect(),
    };
    // Generated instances must satisfy every structural assumption.
    Ok(Instance::from_data(data)?)
}

//! Guarded brute-force ground truth for small instances.
//!
//! [`exact_single_copy`] searches schedules in which every involved agent
//! picks up and drops off exactly once (some optimum always has this shape)
//! by best-first search over (used-agent set, package node) states.
//! [`exact_multi_copy_paths`] enumerates all simple source-target paths and
//! optimizes the carrier assignment along each, independently of the
//! label-setting solvers it is used to check. Guards keep the exponential
//! searches at desk scale unless explicitly overridden.

use std::collections::{BTreeMap, BinaryHeap, HashMap};

use thiserror::Error;

use crate::instance::{AgentId, Handover, Instance, NodeId, Point};
use crate::metric::{MinScored, SplitError};
use crate::schedule::{evaluate, Schedule, Trip};
use crate::Objective;

/// Size limits for the exponential searches. The defaults are safe for CI;
/// callers may pass explicit larger guards.
#[derive(Debug, Clone, Copy)]
pub struct OracleGuard {
    pub max_nodes: usize,
    pub max_agents: usize,
}

impl Default for OracleGuard {
    fn default() -> Self {
        OracleGuard { max_nodes: 12, max_agents: 6 }
    }
}

impl OracleGuard {
    pub fn unlimited() -> Self {
        OracleGuard { max_nodes: usize::MAX, max_agents: usize::MAX }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {nodes} nodes / {agents} agents, over the oracle guard ({max_nodes} nodes, {max_agents} agents); pass a larger guard to override")]
    GuardExceeded { nodes: usize, agents: usize, max_nodes: usize, max_agents: usize },
    #[error("single-copy search supports at most 63 agents, got {0}")]
    TooManyAgents(usize),
    #[error("oracles operate under node handover; subdivide edges first")]
    EdgeHandover,
    #[error("subdivision failed: {0}")]
    Split(#[from] SplitError),
}

/// An oracle's answer: the optimum, a witness schedule that re-evaluates to
/// it, and search statistics.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: f64,
    pub witness: Schedule,
    /// Labels pushed (single-copy) or complete paths scored (multi-copy).
    pub explored: usize,
    /// States popped (single-copy) or DFS expansions (multi-copy).
    pub expanded: usize,
}

fn check_guard(inst: &Instance, guard: &OracleGuard) -> Result<(), OracleError> {
    if inst.node_count() > guard.max_nodes || inst.agent_count() > guard.max_agents {
        return Err(OracleError::GuardExceeded {
            nodes: inst.node_count(),
            agents: inst.agent_count(),
            max_nodes: guard.max_nodes,
            max_agents: guard.max_agents,
        });
    }
    if inst.handover() != Handover::Node {
        return Err(OracleError::EdgeHandover);
    }
    Ok(())
}

fn node_path_points(inst: &Instance, agent: AgentId, from: NodeId, to: NodeId) -> Vec<Point> {
    inst.agent_paths(agent, from)
        .path_to(to)
        .expect("route inside the agent's range")
        .into_iter()
        .map(Point::Node)
        .collect()
}

/// Exact single-copy optimum: best-first search over (used agents, package
/// node), where a transition lets an unused agent approach the package from
/// its start, pick it up and carry it to any node of its range along an
/// in-range shortest path.
pub fn exact_single_copy(inst: &Instance, objective: Objective, guard: OracleGuard) -> Result<OracleResult, OracleError> {
    check_guard(inst, &guard)?;
    let k = inst.agent_count();
    if k > 63 {
        return Err(OracleError::TooManyAgents(k));
    }
    let (s, y) = (inst.source(), inst.target());
    if s == y {
        return Ok(OracleResult { value: 0.0, witness: Schedule::empty(), explored: 0, expanded: 0 });
    }

    type State = (u64, NodeId);
    let mut best: HashMap<State, f64> = HashMap::new();
    let mut parent: HashMap<State, (State, AgentId)> = HashMap::new();
    let mut heap: BinaryHeap<MinScored<State>> = BinaryHeap::new();
    best.insert((0, s), 0.0);
    heap.push(MinScored(0.0, (0, s)));
    let mut explored = 1usize;
    let mut expanded = 0usize;
    let mut goal: Option<(State, f64)> = None;

    while let Some(MinScored(label, state)) = heap.pop() {
        if best.get(&state).map(|&b| label > b).unwrap_or(true) {
            continue;
        }
        expanded += 1;
        let (mask, node) = state;
        if node == y {
            goal = Some((state, label));
            break;
        }
        for a in 0..k {
            if mask & (1 << a) != 0 || !inst.agent(a).in_node_range(node) {
                continue;
            }
            let agent = inst.agent(a);
            let approach = inst.agent_paths(a, agent.position).dist[node];
            let carry_from = inst.agent_paths(a, node);
            for &v in &agent.nodes {
                if v == node {
                    continue;
                }
                let carry = carry_from.dist[v];
                debug_assert!(carry.is_finite(), "agent subgraphs are connected");
                let next = match objective {
                    Objective::Time => f64::max(label, approach / agent.speed) + carry / agent.speed,
                    Objective::Energy => label + agent.rate * (approach + carry),
                };
                let key = (mask | (1 << a), v);
                if best.get(&key).map(|&b| next < b).unwrap_or(true) {
                    best.insert(key, next);
                    parent.insert(key, (state, a));
                    heap.push(MinScored(next, key));
                    explored += 1;
                }
            }
        }
    }

    let (goal_state, value) = goal.expect("range coverage guarantees a feasible single-copy schedule");
    let mut legs: Vec<(AgentId, NodeId, NodeId)> = Vec::new();
    let mut cur = goal_state;
    while let Some(&(prev, agent)) = parent.get(&cur) {
        legs.push((agent, prev.1, cur.1));
        cur = prev;
    }
    legs.reverse();
    let trips = legs
        .into_iter()
        .map(|(agent, pickup, dropoff)| Trip {
            agent,
            start_time: 0.0,
            empty_path: node_path_points(inst, agent, inst.agent(agent).position, pickup),
            carry_path: node_path_points(inst, agent, pickup, dropoff),
        })
        .collect();
    let witness = Schedule { trips };
    debug_assert!({
        let eval = evaluate(inst, &witness).expect("witness must evaluate");
        (eval.objective(objective) - value).abs() <= 1e-9 * value.abs().max(1.0)
    });
    Ok(OracleResult { value, witness, explored, expanded })
}

/// Exact multi-copy optimum by enumerating all simple source-target paths.
///
/// Per path, the time objective is a per-edge greedy (earliest arrival is
/// monotone in the pickup time); the energy objective is a small dynamic
/// program over which agent carries into each node, so that an agent keeping
/// the package over consecutive edges pays its approach only once.
pub fn exact_multi_copy_paths(inst: &Instance, objective: Objective, guard: OracleGuard) -> Result<OracleResult, OracleError> {
    check_guard(inst, &guard)?;
    let (s, y) = (inst.source(), inst.target());
    if s == y {
        return Ok(OracleResult { value: 0.0, witness: Schedule::empty(), explored: 0, expanded: 0 });
    }
    let k = inst.agent_count();
    let approach_to = |a: AgentId, u: NodeId| inst.agent_paths(a, inst.agent(a).position).dist[u];

    struct Search<'a> {
        inst: &'a Instance,
        objective: Objective,
        visited: Vec<bool>,
        path: Vec<NodeId>,
        // Time labels per depth, or energy DP (cost per carrying agent).
        time: Vec<f64>,
        energy: Vec<Vec<f64>>,
        best_value: f64,
        best_path: Vec<NodeId>,
        explored: usize,
        expanded: usize,
    }

    impl Search<'_> {
        fn frontier_value(&self) -> f64 {
            match self.objective {
                Objective::Time => *self.time.last().unwrap(),
                Objective::Energy => self.energy.last().unwrap().iter().copied().fold(f64::INFINITY, f64::min),
            }
        }

        fn dfs(&mut self, u: NodeId) {
            self.expanded += 1;
            if u == self.inst.target() {
                self.explored += 1;
                let value = self.frontier_value();
                if value < self.best_value {
                    self.best_value = value;
                    self.best_path = self.path.clone();
                }
                return;
            }
            for &(w, e) in self.inst.adjacency(u) {
                if self.visited[w] || self.inst.agents_on_edge(e).is_empty() {
                    continue;
                }
                let len = self.inst.edge(e).length;
                match self.objective {
                    Objective::Time => {
                        let t = *self.time.last().unwrap();
                        let mut next = f64::INFINITY;
                        for &a in self.inst.agents_on_edge(e) {
                            let agent = self.inst.agent(a);
                            let reach = self.approach(a, u) / agent.speed;
                            next = next.min(f64::max(t, reach) + len / agent.speed);
                        }
                        if next >= self.best_value {
                            continue;
                        }
                        self.time.push(next);
                    }
                    Objective::Energy => {
                        let dp = self.energy.last().unwrap();
                        let at_start = self.path.len() == 1;
                        let switch_base = if at_start {
                            0.0
                        } else {
                            dp.iter().copied().fold(f64::INFINITY, f64::min)
                        };
                        let mut next = vec![f64::INFINITY; dp.len()];
                        for &a in self.inst.agents_on_edge(e) {
                            let agent = self.inst.agent(a);
                            let continued = dp[a] + agent.rate * len;
                            let switched = switch_base + agent.rate * (self.approach(a, u) + len);
                            next[a] = continued.min(switched);
                        }
                        if next.iter().copied().fold(f64::INFINITY, f64::min) >= self.best_value {
                            continue;
                        }
                        self.energy.push(next);
                    }
                }
                self.visited[w] = true;
                self.path.push(w);
                self.dfs(w);
                self.path.pop();
                self.visited[w] = false;
                match self.objective {
                    Objective::Time => {
                        self.time.pop();
                    }
                    Objective::Energy => {
                        self.energy.pop();
                    }
                }
            }
        }

        fn approach(&self, a: AgentId, u: NodeId) -> f64 {
            let agent = self.inst.agent(a);
            self.inst.agent_paths(a, agent.position).dist[u]
        }
    }

    let mut search = Search {
        inst,
        objective,
        visited: vec![false; inst.node_count()],
        path: vec![s],
        time: vec![0.0],
        energy: vec![vec![f64::INFINITY; k]],
        best_value: f64::INFINITY,
        best_path: Vec::new(),
        explored: 0,
        expanded: 0,
    };
    search.visited[s] = true;
    search.dfs(s);
    let value = search.best_value;
    assert!(value.is_finite(), "range coverage guarantees a feasible delivery");
    let witness = witness_along_path(inst, objective, &search.best_path, approach_to);
    debug_assert!({
        let eval = evaluate(inst, &witness).expect("witness must evaluate");
        (eval.objective(objective) - value).abs() <= 1e-9 * value.abs().max(1.0)
    });
    Ok(OracleResult { value, witness, explored: search.explored, expanded: search.expanded })
}

/// Rebuild the per-edge carrier choices along the best path and fuse
/// consecutive edges carried by the same agent into trips.
fn witness_along_path(
    inst: &Instance,
    objective: Objective,
    path: &[NodeId],
    approach_to: impl Fn(AgentId, NodeId) -> f64,
) -> Schedule {
    let k = inst.agent_count();
    let edges: Vec<usize> = path
        .windows(2)
        .map(|w| inst.edge_between(w[0], w[1]).expect("path follows edges"))
        .collect();
    let carriers: Vec<AgentId> = match objective {
        Objective::Time => {
            let mut t = 0.0;
            let mut chosen = Vec::new();
            for (i, &e) in edges.iter().enumerate() {
                let u = path[i];
                let len = inst.edge(e).length;
                let mut best: Option<(f64, AgentId)> = None;
                for &a in inst.agents_on_edge(e) {
                    let agent = inst.agent(a);
                    let arr = f64::max(t, approach_to(a, u) / agent.speed) + len / agent.speed;
                    if best.map(|(b, _)| arr < b).unwrap_or(true) {
                        best = Some((arr, a));
                    }
                }
                let (arr, a) = best.unwrap();
                t = arr;
                chosen.push(a);
            }
            chosen
        }
        Objective::Energy => {
            let mut dp = vec![f64::INFINITY; k];
            let mut from: Vec<Vec<Option<AgentId>>> = Vec::new();
            for (i, &e) in edges.iter().enumerate() {
                let u = path[i];
                let len = inst.edge(e).length;
                let switch_base = if i == 0 { 0.0 } else { dp.iter().copied().fold(f64::INFINITY, f64::min) };
                let switch_from = if i == 0 {
                    None
                } else {
                    // Smallest-id carrier achieving the minimum.
                    (0..k).find(|&b| dp[b] == switch_base)
                };
                let mut next = vec![f64::INFINITY; k];
                let mut link = vec![None; k];
                for &a in inst.agents_on_edge(e) {
                    let agent = inst.agent(a);
                    let continued = dp[a] + agent.rate * len;
                    let switched = switch_base + agent.rate * (approach_to(a, u) + len);
                    if continued <= switched {
                        next[a] = continued;
                        link[a] = Some(Some(a));
                    } else {
                        next[a] = switched;
                        link[a] = Some(switch_from);
                    }
                }
                dp = next;
                from.push(link.into_iter().map(|l| l.flatten()).collect());
            }
            let mut carriers = vec![0; edges.len()];
            let last = (0..k)
                .min_by(|&a, &b| dp[a].partial_cmp(&dp[b]).unwrap())
                .expect("instance has agents");
            carriers[edges.len() - 1] = last;
            for i in (1..edges.len()).rev() {
                // from[i][cur] is the carrier of edge i-1: cur itself when it
                // kept the package, otherwise the carrier it took over from.
                carriers[i - 1] = from[i][carriers[i]].expect("optimal chain is connected");
            }
            carriers
        }
    };

    let mut trips = Vec::new();
    let mut i = 0;
    while i < carriers.len() {
        let mut j = i + 1;
        while j < carriers.len() && carriers[j] == carriers[i] {
            j += 1;
        }
        let agent = carriers[i];
        trips.push(Trip {
            agent,
            start_time: 0.0,
            empty_path: node_path_points(inst, agent, inst.agent(agent).position, path[i]),
            carry_path: path[i..=j].iter().map(|&v| Point::Node(v)).collect(),
        });
        i = j;
    }
    Schedule { trips }
}

/// Result of the discretized interior-handover oracle; the witness refers to
/// the refined instance.
pub struct SubdivisionOracle {
    pub result: OracleResult,
    pub refined: Instance,
}

/// Split every edge traversable by two or more agents into `q` equal parts
/// and solve the node-handover problem on the refined instance. As `q`
/// grows the time value converges from above to the interior-handover
/// optimum; the energy value does not depend on `q`.
pub fn edge_handover_subdivision(
    inst: &Instance,
    q: usize,
    objective: Objective,
    guard: OracleGuard,
) -> Result<SubdivisionOracle, OracleError> {
    assert!(q >= 1, "subdivision requires q >= 1");
    let mut plan: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    if q >= 2 {
        for e in 0..inst.edge_count() {
            let len = inst.edge(e).length;
            if inst.agents_on_edge(e).len() >= 2 && len > 0.0 {
                plan.insert(e, (1..q).map(|j| len * (j as f64) / (q as f64)).collect());
            }
        }
    }
    let (refined, _) = inst.split_edges(&plan)?;
    let refined = refined.with_handover(Handover::Node);
    let result = exact_multi_copy_paths(&refined, objective, guard)?;
    Ok(SubdivisionOracle { result, refined })
}

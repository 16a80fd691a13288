//! Exact polynomial solvers for trees and for instances whose agent
//! subgraphs are isometric (in-range shortest paths equal whole-graph
//! shortest paths; on a tree every connected subgraph is isometric).
//!
//! When all agents share one speed (for the time objective) or one rate (for
//! energy), merging a multiply-used agent over a shortest path never makes
//! the schedule worse, so the multi-copy optimum is achieved single-copy.

use thiserror::Error;

use crate::compact::{merge_repeated_agents, CompactError};
use crate::ddt::DdtSolution;
use crate::instance::{AgentId, Instance, NodeId, Point};
use crate::schedule::{evaluate, Schedule, Trip};
use crate::Objective;

#[derive(Debug, Error)]
pub enum SpecialCaseError {
    #[error("agent {0} has a non-isometric subgraph")]
    NotIsometric(String),
    #[error("agent {0} breaks the equal-speed requirement ({1} vs {2})")]
    UnequalSpeeds(String, f64, f64),
    #[error("agent {0} breaks the equal-rate requirement ({1} vs {2})")]
    UnequalRates(String, f64, f64),
    #[error("the graph is not a tree")]
    NotATree,
    #[error("initial positions are fixed; the free-position solver does not apply")]
    PositionsFixed,
    #[error("initial positions are free; the fixed-position solver does not apply")]
    PositionsFree,
    #[error(transparent)]
    Compact(#[from] CompactError),
}

fn require_equal_speeds(inst: &Instance) -> Result<f64, SpecialCaseError> {
    let v0 = inst.agents().first().map(|a| a.speed).unwrap_or(1.0);
    for a in inst.agents() {
        if a.speed != v0 {
            return Err(SpecialCaseError::UnequalSpeeds(a.name.clone(), a.speed, v0));
        }
    }
    Ok(v0)
}

fn require_equal_rates(inst: &Instance) -> Result<f64, SpecialCaseError> {
    let w0 = inst.agents().first().map(|a| a.rate).unwrap_or(0.0);
    for a in inst.agents() {
        if a.rate != w0 {
            return Err(SpecialCaseError::UnequalRates(a.name.clone(), a.rate, w0));
        }
    }
    Ok(w0)
}

fn require_isometric(inst: &Instance) -> Result<(), SpecialCaseError> {
    for a in 0..inst.agent_count() {
        if !inst.is_isometric(a).expect("agent id in range") {
            return Err(SpecialCaseError::NotIsometric(inst.agent(a).name.clone()));
        }
    }
    Ok(())
}

/// Lossless compaction: merge repeated agents of `sched` when every agent's
/// subgraph is isometric and agents share a speed (time objective) or a rate
/// (energy objective). The objective value never increases; the merged value
/// is returned.
pub fn compact_isometric(
    inst: &Instance,
    sched: &Schedule,
    objective: Objective,
) -> Result<(Schedule, f64), SpecialCaseError> {
    require_isometric(inst)?;
    match objective {
        Objective::Time => {
            require_equal_speeds(inst)?;
        }
        Objective::Energy => {
            require_equal_rates(inst)?;
        }
    }
    let before = evaluate(inst, sched).map_err(CompactError::from)?.objective(objective);
    let (merged, _) = merge_repeated_agents(inst, sched)?;
    let after = evaluate(inst, &merged).map_err(CompactError::from)?.objective(objective);
    debug_assert!(after <= before + 1e-9 * before.abs().max(1.0));
    Ok((merged, after))
}

/// The unique source-to-target node path of a tree.
fn tree_path(inst: &Instance) -> Vec<NodeId> {
    inst.graph_paths(inst.source())
        .path_to(inst.target())
        .expect("trees are connected")
}

/// Exact delivery-time solver for trees with equal agent speeds and fixed
/// initial positions. Runs the along-path arrival recurrence (each edge is
/// taken by the eligible agent that can pick up earliest) and compacts the
/// relay losslessly.
pub fn solve_tree_ddt(inst: &Instance) -> Result<DdtSolution, SpecialCaseError> {
    if !inst.is_tree() {
        return Err(SpecialCaseError::NotATree);
    }
    if !inst.positions_fixed() {
        return Err(SpecialCaseError::PositionsFree);
    }
    let speed = require_equal_speeds(inst)?;
    if inst.source() == inst.target() {
        return Ok(DdtSolution { schedule: Schedule::empty(), time: 0.0 });
    }
    let path = tree_path(inst);
    let mut arrival = 0.0;
    let mut chosen: Vec<AgentId> = Vec::new();
    for win in path.windows(2) {
        let (u, w) = (win[0], win[1]);
        let e = inst.edge_between(u, w).expect("tree path follows edges");
        let mut best: Option<(f64, AgentId)> = None;
        for &a in inst.agents_on_edge(e) {
            let agent = inst.agent(a);
            let reach = inst.agent_paths(a, agent.position).dist[u] / speed;
            let t = f64::max(arrival, reach) + inst.edge(e).length / speed;
            if best.map(|(b, _)| t < b).unwrap_or(true) {
                best = Some((t, a));
            }
        }
        let (t, a) = best.expect("range coverage provides an eligible agent");
        arrival = t;
        chosen.push(a);
    }

    // Relay schedule: fuse consecutive edges carried by the same agent.
    let mut trips: Vec<Trip> = Vec::new();
    let mut i = 0;
    while i < chosen.len() {
        let mut j = i + 1;
        while j < chosen.len() && chosen[j] == chosen[i] {
            j += 1;
        }
        let agent = chosen[i];
        let empty_path: Vec<Point> = inst
            .agent_paths(agent, inst.agent(agent).position)
            .path_to(path[i])
            .expect("pickup lies in the agent's range")
            .into_iter()
            .map(Point::Node)
            .collect();
        let carry_path: Vec<Point> = path[i..=j].iter().map(|&v| Point::Node(v)).collect();
        trips.push(Trip { agent, start_time: 0.0, empty_path, carry_path });
        i = j;
    }
    let relay = Schedule { trips };
    let (schedule, time) = compact_isometric(inst, &relay, Objective::Time)?;
    debug_assert!((time - arrival).abs() <= 1e-9 * arrival.abs().max(1.0));
    Ok(DdtSolution { schedule, time })
}

/// Result of the free-position solver: the schedule, the chosen initial
/// position per agent, and the objective value.
#[derive(Debug, Clone)]
pub struct FreePositionSolution {
    pub schedule: Schedule,
    pub positions: Vec<NodeId>,
    pub value: f64,
}

/// Exact solver for the variant where initial positions may be chosen, on a
/// tree or an all-isometric instance with equal speeds (time) or equal rates
/// (energy). Participating carriers are placed exactly at their pickup
/// nodes, so the delivery needs no empty movement and no waiting: the value
/// is `path length / speed` for time and `rate * path length` for energy.
pub fn solve_free_positions(inst: &Instance, objective: Objective) -> Result<FreePositionSolution, SpecialCaseError> {
    if inst.positions_fixed() {
        return Err(SpecialCaseError::PositionsFixed);
    }
    if !inst.is_tree() {
        require_isometric(inst)?;
    }
    let (speed, rate) = match objective {
        Objective::Time => (require_equal_speeds(inst)?, f64::NAN),
        Objective::Energy => (f64::NAN, require_equal_rates(inst)?),
    };

    let mut positions: Vec<NodeId> = inst.agents().iter().map(|a| a.position).collect();
    if inst.source() == inst.target() {
        return Ok(FreePositionSolution { schedule: Schedule::empty(), positions, value: 0.0 });
    }

    // A shortest source-target path (the unique path on a tree). Any node of
    // an agent's range that lies on it is reachable by that agent along a
    // same-length route, because subpaths of shortest paths are shortest and
    // ranges are isometric.
    let paths = inst.graph_paths(inst.source());
    let path = paths.path_to(inst.target()).expect("graph is connected");
    let on_path: Vec<Option<usize>> = {
        let mut idx = vec![None; inst.node_count()];
        for (i, &v) in path.iter().enumerate() {
            idx[v] = Some(i);
        }
        idx
    };
    // Farthest position along the path each agent can carry to.
    let farthest = |a: AgentId| -> Option<usize> {
        inst.agent(a).nodes.iter().filter_map(|&v| on_path[v]).max()
    };

    let mut trips: Vec<Trip> = Vec::new();
    let mut used = vec![false; inst.agent_count()];
    let mut at = 0usize; // index into `path`
    while at + 1 < path.len() {
        let u = path[at];
        let e = inst.edge_between(u, path[at + 1]).expect("path follows edges");
        let carrier = inst
            .agents_on_edge(e)
            .iter()
            .copied()
            .filter(|&a| !used[a] && inst.agent(a).in_node_range(u))
            .max_by_key(|&a| (farthest(a), std::cmp::Reverse(a)))
            .expect("range coverage provides an unused carrier");
        let reach = farthest(carrier).expect("carrier touches the path");
        debug_assert!(reach > at);
        used[carrier] = true;
        positions[carrier] = u;
        let route = inst
            .agent_point_route(carrier, Point::Node(u), Point::Node(path[reach]))
            .expect("carrier range is connected");
        trips.push(Trip { agent: carrier, start_time: 0.0, empty_path: vec![], carry_path: route });
        at = reach;
    }

    let schedule = Schedule { trips };
    let eval = evaluate(inst, &schedule).map_err(CompactError::from)?;
    let length: f64 = path
        .windows(2)
        .map(|w| inst.edge(inst.edge_between(w[0], w[1]).unwrap()).length)
        .sum();
    let value = match objective {
        Objective::Time => {
            debug_assert!((eval.time - length / speed).abs() <= 1e-9 * (length / speed).max(1.0));
            eval.time
        }
        Objective::Energy => {
            debug_assert!((eval.energy - rate * length).abs() <= 1e-9 * (rate * length).max(1.0));
            eval.energy
        }
    };
    Ok(FreePositionSolution { schedule, positions, value })
}

//! Delivery-time minimization.
//!
//! [`solve_ddt_multi`] computes the optimal delivery time when arbitrarily
//! many copies of each agent may be used: a label-setting search over nodes
//! where relaxing an edge asks a per-edge subroutine for the earliest
//! package arrival across it ([`nei_delivery_node`] under node handover,
//! [`nei_delivery_edge`] with interior handovers). The resulting package
//! path is simple, so [`compact_ddt`] can merge repeated agents into a
//! single-copy schedule whose delivery time stays within
//! [`compaction_ratio_bound`] times the multi-copy optimum.

use std::collections::BinaryHeap;

use thiserror::Error;

pub use crate::compact::CompactError;
use crate::compact::merge_repeated_agents;
use crate::envelope::{solve_edge_relay, RelayAgent};
pub use crate::envelope::{EdgePlan, RelaySegment};
use crate::instance::{AgentId, Handover, Instance, NodeId, Point};
use crate::metric::MinScored;
use crate::schedule::{evaluate, Schedule, Trip};

#[derive(Debug, Error)]
#[error("no agent can traverse the edge {{{0},{1}}}")]
pub struct NoCarrier(pub String, pub String);

/// A solved delivery-time instance: the schedule and its `T(y)`.
#[derive(Debug, Clone)]
pub struct DdtSolution {
    pub schedule: Schedule,
    pub time: f64,
}

/// Earliest package arrival at `v` when some agent carries it over the edge
/// `{u, v}`, with the package available at `u` at time `t`. Returns the
/// arrival and the carrying agent; ties prefer the smallest agent id.
pub fn nei_delivery_node(inst: &Instance, u: NodeId, v: NodeId, t: f64) -> Result<(f64, AgentId), NoCarrier> {
    let no_carrier = || NoCarrier(inst.node_name(u).to_string(), inst.node_name(v).to_string());
    let e = inst.edge_between(u, v).ok_or_else(no_carrier)?;
    let len = inst.edge(e).length;
    let mut best: Option<(f64, AgentId)> = None;
    for &a in inst.agents_on_edge(e) {
        let agent = inst.agent(a);
        let approach = inst.agent_paths(a, agent.position).dist[u] / agent.speed;
        let arrive = f64::max(t, approach) + len / agent.speed;
        if best.map(|(b, _)| arrive < b).unwrap_or(true) {
            best = Some((arrive, a));
        }
    }
    best.ok_or_else(no_carrier)
}

/// Earliest package arrival at `v` over the edge `{u, v}` when agents may
/// hand the package over at interior points. Offsets in the returned plan
/// are measured from `u`.
pub fn nei_delivery_edge(inst: &Instance, u: NodeId, v: NodeId, t: f64) -> Result<EdgePlan, NoCarrier> {
    let no_carrier = || NoCarrier(inst.node_name(u).to_string(), inst.node_name(v).to_string());
    let e = inst.edge_between(u, v).ok_or_else(no_carrier)?;
    let relay: Vec<RelayAgent> = inst
        .agents_on_edge(e)
        .iter()
        .map(|&a| {
            let agent = inst.agent(a);
            let paths = inst.agent_paths(a, agent.position);
            RelayAgent {
                agent: a,
                speed: agent.speed,
                near_time: paths.dist[u] / agent.speed,
                far_time: paths.dist[v] / agent.speed,
            }
        })
        .collect();
    if relay.is_empty() {
        return Err(no_carrier());
    }
    Ok(solve_edge_relay(inst.edge(e).length, t, &relay))
}

enum Carrier {
    Node(AgentId),
    Edge(EdgePlan),
}

/// Optimal delivery time under the multi-copy relaxation, honoring the
/// instance's handover manner. The package travels along a simple path; the
/// returned schedule is multi-copy feasible and re-evaluates to the returned
/// time.
pub fn solve_ddt_multi(inst: &Instance) -> DdtSolution {
    let (s, y) = (inst.source(), inst.target());
    if s == y {
        return DdtSolution { schedule: Schedule::empty(), time: 0.0 };
    }
    let n = inst.node_count();
    let mut arrival = vec![f64::INFINITY; n];
    let mut carrier: Vec<Option<Carrier>> = (0..n).map(|_| None).collect();
    let mut prev: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    arrival[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(MinScored(0.0, s));
    let mut last_popped = f64::NEG_INFINITY;
    while let Some(MinScored(t, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        // Once settled a label is final: pops are monotone in time.
        debug_assert!(t >= last_popped);
        last_popped = t;
        if u == y {
            break;
        }
        for &(w, e) in inst.adjacency(u) {
            if done[w] || inst.agents_on_edge(e).is_empty() {
                continue;
            }
            let (arr, c) = match inst.handover() {
                Handover::Node => {
                    let (arr, a) = nei_delivery_node(inst, u, w, t).expect("eligible agents checked");
                    (arr, Carrier::Node(a))
                }
                Handover::Edge => {
                    let plan = nei_delivery_edge(inst, u, w, t).expect("eligible agents checked");
                    (plan.arrival, Carrier::Edge(plan))
                }
            };
            if arr < arrival[w] {
                arrival[w] = arr;
                carrier[w] = Some(c);
                prev[w] = Some(u);
                heap.push(MinScored(arr, w));
            }
        }
    }
    let time = arrival[y];
    assert!(time.is_finite(), "range coverage guarantees a feasible delivery");
    let mut path = vec![y];
    let mut cur = y;
    while let Some(p) = prev[cur] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    debug_assert_eq!(path[0], s);
    let schedule = build_schedule(inst, &path, &carrier);
    debug_assert!({
        let eval = evaluate(inst, &schedule).expect("solver schedule must evaluate");
        (eval.time - time).abs() <= 1e-9 * time.abs().max(1.0)
    });
    DdtSolution { schedule, time }
}

/// One carrying step over (part of) a single edge, plus how a fresh copy of
/// the agent reaches the pickup.
struct CarryStep {
    agent: AgentId,
    from: Point,
    to: Point,
    /// Node through which the copy enters the edge for an interior pickup.
    entry_node: NodeId,
}

fn build_schedule(inst: &Instance, path: &[NodeId], carrier: &[Option<Carrier>]) -> Schedule {
    let mut steps: Vec<CarryStep> = Vec::new();
    for win in path.windows(2) {
        let (u, w) = (win[0], win[1]);
        let e = inst.edge_between(u, w).expect("path follows edges");
        let len = inst.edge(e).length;
        // Plan offsets are measured from u; edge points from the edge's own u.
        let to_edge_offset = |x: f64| if inst.edge(e).u == u { x } else { len - x };
        match carrier[w].as_ref().expect("carrier recorded for settled node") {
            Carrier::Node(a) => steps.push(CarryStep {
                agent: *a,
                from: Point::Node(u),
                to: Point::Node(w),
                entry_node: u,
            }),
            Carrier::Edge(plan) => {
                for seg in &plan.segments {
                    let from = Point::on_edge(inst, e, to_edge_offset(seg.from_offset));
                    let to = Point::on_edge(inst, e, to_edge_offset(seg.to_offset));
                    // Degenerate zero-length edges keep the node-to-node step.
                    let (from, to) = if len == 0.0 { (Point::Node(u), Point::Node(w)) } else { (from, to) };
                    steps.push(CarryStep {
                        agent: seg.agent,
                        from,
                        to,
                        entry_node: if seg.enters_via_far { w } else { u },
                    });
                }
            }
        }
    }

    // Fuse consecutive steps of the same agent into one trip; a fused run
    // needs no fresh copy and the arrival times are unchanged.
    let mut trips: Vec<Trip> = Vec::new();
    let mut i = 0;
    while i < steps.len() {
        let mut j = i + 1;
        while j < steps.len() && steps[j].agent == steps[i].agent {
            j += 1;
        }
        let agent = steps[i].agent;
        let mut carry_path = vec![steps[i].from];
        for step in &steps[i..j] {
            if *carry_path.last().unwrap() != step.from {
                carry_path.push(step.from);
            }
            if *carry_path.last().unwrap() != step.to {
                carry_path.push(step.to);
            }
        }
        let empty_path = approach_path(inst, agent, steps[i].from, steps[i].entry_node);
        trips.push(Trip { agent, start_time: 0.0, empty_path, carry_path });
        i = j;
    }
    Schedule { trips }
}

/// Shortest approach of a fresh copy of `agent` to its pickup point,
/// entering an interior pickup through `entry_node`.
fn approach_path(inst: &Instance, agent: AgentId, pickup: Point, entry_node: NodeId) -> Vec<Point> {
    let position = inst.agent(agent).position;
    let paths = inst.agent_paths(agent, position);
    match pickup {
        Point::Node(v) => paths
            .path_to(v)
            .expect("pickup lies in the agent's range")
            .into_iter()
            .map(Point::Node)
            .collect(),
        Point::OnEdge { .. } => {
            let mut points: Vec<Point> = paths
                .path_to(entry_node)
                .expect("entry node lies in the agent's range")
                .into_iter()
                .map(Point::Node)
                .collect();
            points.push(pickup);
            points
        }
    }
}

/// Make a multi-copy schedule single-copy by merging repeated agents, and
/// re-evaluate the delivery time.
pub fn compact_ddt(inst: &Instance, sched: &Schedule) -> Result<DdtSolution, CompactError> {
    let (schedule, _) = merge_repeated_agents(inst, sched)?;
    let eval = evaluate(inst, &schedule)?;
    Ok(DdtSolution { schedule, time: eval.time })
}

/// Certified worst-case ratio of the compacted single-copy delivery time to
/// the multi-copy optimum: `min(2n/3 + 1/3, 2k - 1)` under node handover and
/// `min(2n - 1, 2k - 1)` with edge handovers.
pub fn compaction_ratio_bound(inst: &Instance) -> f64 {
    let n = inst.node_count() as f64;
    let k = inst.agent_count() as f64;
    match inst.handover() {
        Handover::Node => f64::min(2.0 * n / 3.0 + 1.0 / 3.0, 2.0 * k - 1.0),
        Handover::Edge => f64::min(2.0 * n - 1.0, 2.0 * k - 1.0),
    }
}

//! Schedule model, the time/energy evaluation recurrences, and feasibility
//! checking for both handover manners and both copy regimes.
//!
//! A schedule is an ordered list of trips. Trip `i` is taken by one agent:
//! an empty approach along `empty_path` ending at the pickup location,
//! followed by a carrying leg along `carry_path`. The package arrival time
//! at the end of trip `i` is
//! `max(arrival(i-1), start_time + |empty|/v) + |carry|/v`, and the energy
//! total grows by `rate * (|empty| + |carry|)`. Waiting consumes no energy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{AgentId, EdgeId, Handover, Instance, Point};
use crate::CopyMode;

/// One agent's participation: an empty approach and a carrying leg.
#[derive(Debug, Clone)]
pub struct Trip {
    pub agent: AgentId,
    pub start_time: f64,
    /// From the copy's start location to the pickup point. May be empty when
    /// the agent already stands at the pickup point.
    pub empty_path: Vec<Point>,
    /// From the pickup point to the dropoff point; never empty.
    pub carry_path: Vec<Point>,
}

impl Trip {
    pub fn pickup(&self) -> Point {
        self.carry_path[0]
    }

    pub fn dropoff(&self) -> Point {
        *self.carry_path.last().unwrap()
    }

    pub fn start(&self) -> Point {
        self.empty_path.first().copied().unwrap_or_else(|| self.pickup())
    }
}

/// An ordered chain of trips moving the package from source to target.
#[derive(Debug, Clone, Default)]
pub struct Schedule {
    pub trips: Vec<Trip>,
}

impl Schedule {
    pub fn empty() -> Schedule {
        Schedule { trips: Vec::new() }
    }

    /// Number of trips each agent appears in.
    pub fn uses_per_agent(&self, inst: &Instance) -> Vec<usize> {
        let mut uses = vec![0; inst.agent_count()];
        for t in &self.trips {
            uses[t.agent] += 1;
        }
        uses
    }
}

/// Arrival times and energy totals along a schedule.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    /// Package arrival time at the dropoff of each trip.
    pub arrivals: Vec<f64>,
    /// Cumulative energy after each trip.
    pub energies: Vec<f64>,
    /// Delivery time `T(y)`.
    #[serde(rename = "T")]
    pub time: f64,
    /// Total energy `C(y)`.
    #[serde(rename = "C")]
    pub energy: f64,
}

impl Evaluation {
    pub fn objective(&self, objective: crate::Objective) -> f64 {
        match objective {
            crate::Objective::Time => self.time,
            crate::Objective::Energy => self.energy,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("trip {trip}: {0}", .source)]
    Path { trip: usize, source: PathError },
    #[error("trip {trip}: empty path ends at {end} but carry path starts at {start}")]
    ApproachMismatch { trip: usize, end: String, start: String },
    #[error("trip {trip}: carry path is empty")]
    EmptyCarry { trip: usize },
    #[error("trip {trip}: pickup {pickup} does not match previous dropoff {dropoff}")]
    BrokenChain { trip: usize, pickup: String, dropoff: String },
    #[error("schedule does not start at the source / end at the target")]
    WrongEndpoints,
}

#[derive(Debug, Error)]
pub enum PathError {
    #[error("consecutive points {0} and {1} share no edge")]
    Discontinuous(String, String),
    #[error("point {0} outside the acting agent's range")]
    OutsideRange(String),
    #[error("offset {offset} outside [0, {length}] on edge {edge}")]
    BadOffset { edge: EdgeId, offset: f64, length: f64 },
}

/// A traversed piece of an edge.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentUse {
    pub edge: EdgeId,
    pub length: f64,
}

/// Resolve a point sequence into traversed edge segments, checking
/// continuity. Repeated identical points contribute nothing.
pub(crate) fn path_segments(inst: &Instance, path: &[Point]) -> Result<Vec<SegmentUse>, PathError> {
    for p in path {
        if let Point::OnEdge { edge, offset } = *p {
            let len = inst.edge(edge).length;
            if !(offset >= 0.0 && offset <= len) {
                return Err(PathError::BadOffset { edge, offset, length: len });
            }
        }
    }
    let mut segments = Vec::new();
    for win in path.windows(2) {
        let (p, q) = (win[0], win[1]);
        if p == q {
            continue;
        }
        let seg = match (p, q) {
            (Point::Node(a), Point::Node(b)) => {
                let e = inst
                    .edge_between(a, b)
                    .ok_or_else(|| PathError::Discontinuous(p.describe(inst), q.describe(inst)))?;
                SegmentUse { edge: e, length: inst.edge(e).length }
            }
            (Point::Node(a), Point::OnEdge { edge, offset }) => {
                let d = inst.edge(edge);
                if a == d.u {
                    SegmentUse { edge, length: offset }
                } else if a == d.v {
                    SegmentUse { edge, length: d.length - offset }
                } else {
                    return Err(PathError::Discontinuous(p.describe(inst), q.describe(inst)));
                }
            }
            (Point::OnEdge { edge, offset }, Point::Node(b)) => {
                let d = inst.edge(edge);
                if b == d.u {
                    SegmentUse { edge, length: offset }
                } else if b == d.v {
                    SegmentUse { edge, length: d.length - offset }
                } else {
                    return Err(PathError::Discontinuous(p.describe(inst), q.describe(inst)));
                }
            }
            (Point::OnEdge { edge: e1, offset: x1 }, Point::OnEdge { edge: e2, offset: x2 }) => {
                if e1 != e2 {
                    return Err(PathError::Discontinuous(p.describe(inst), q.describe(inst)));
                }
                SegmentUse { edge: e1, length: (x2 - x1).abs() }
            }
        };
        segments.push(seg);
    }
    Ok(segments)
}

fn check_range(inst: &Instance, agent: AgentId, path: &[Point], segments: &[SegmentUse]) -> Result<(), PathError> {
    let a = inst.agent(agent);
    for p in path {
        let ok = match *p {
            Point::Node(v) => a.in_node_range(v),
            Point::OnEdge { edge, .. } => a.in_edge_range(edge),
        };
        if !ok {
            return Err(PathError::OutsideRange(p.describe(inst)));
        }
    }
    for s in segments {
        if !a.in_edge_range(s.edge) {
            let d = inst.edge(s.edge);
            return Err(PathError::OutsideRange(format!(
                "edge {{{},{}}}",
                inst.node_name(d.u),
                inst.node_name(d.v)
            )));
        }
    }
    Ok(())
}

/// Evaluate arrival times and energy totals of a schedule.
///
/// Fails on discontinuous paths, on points outside the acting agent's range
/// and on broken pickup/dropoff chains; it does not enforce copy-mode or
/// handover-manner rules (see [`check_feasible`]).
pub fn evaluate(inst: &Instance, sched: &Schedule) -> Result<Evaluation, EvalError> {
    let mut arrivals = Vec::with_capacity(sched.trips.len());
    let mut energies = Vec::with_capacity(sched.trips.len());
    let mut time = 0.0;
    let mut energy = 0.0;
    let mut at = Point::Node(inst.source());
    for (i, trip) in sched.trips.iter().enumerate() {
        if trip.carry_path.is_empty() {
            return Err(EvalError::EmptyCarry { trip: i });
        }
        if trip.pickup() != at {
            return Err(EvalError::BrokenChain {
                trip: i,
                pickup: trip.pickup().describe(inst),
                dropoff: at.describe(inst),
            });
        }
        if let Some(end) = trip.empty_path.last() {
            if *end != trip.pickup() {
                return Err(EvalError::ApproachMismatch {
                    trip: i,
                    end: end.describe(inst),
                    start: trip.pickup().describe(inst),
                });
            }
        }
        let empty = path_segments(inst, &trip.empty_path).map_err(|source| EvalError::Path { trip: i, source })?;
        let carry = path_segments(inst, &trip.carry_path).map_err(|source| EvalError::Path { trip: i, source })?;
        check_range(inst, trip.agent, &trip.empty_path, &empty)
            .and_then(|()| check_range(inst, trip.agent, &trip.carry_path, &carry))
            .map_err(|source| EvalError::Path { trip: i, source })?;
        let agent = inst.agent(trip.agent);
        let empty_len: f64 = empty.iter().map(|s| s.length).sum();
        let carry_len: f64 = carry.iter().map(|s| s.length).sum();
        time = f64::max(time, trip.start_time + empty_len / agent.speed) + carry_len / agent.speed;
        energy += agent.rate * (empty_len + carry_len);
        arrivals.push(time);
        energies.push(energy);
        at = trip.dropoff();
    }
    let starts_ok = sched
        .trips
        .first()
        .map(|t| t.pickup() == Point::Node(inst.source()))
        .unwrap_or(inst.source() == inst.target());
    let ends_ok = sched
        .trips
        .last()
        .map(|t| t.dropoff() == Point::Node(inst.target()))
        .unwrap_or(inst.source() == inst.target());
    if !(starts_ok && ends_ok) {
        return Err(EvalError::WrongEndpoints);
    }
    Ok(Evaluation { arrivals, energies, time, energy })
}

/// Which feasibility rule a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Points or traversed edges outside the acting agent's range.
    Range,
    /// Discontinuous paths or a broken pickup/dropoff chain.
    Continuity,
    /// An agent appears in more than one trip in single-copy mode.
    SingleUse,
    /// Pickup or dropoff at an edge interior under node handover.
    NodeHandover,
    /// A trip does not start at the agent's initial position.
    StartPosition,
    /// Negative start time.
    StartTime,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub trip: Option<usize>,
    pub rule: Rule,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Check a schedule against the model rules; violations are collected, not
/// thrown.
///
/// Checked: (a) range of every point and traversed edge, (b) package
/// continuity from source to target, (c) single-use in `Single` mode,
/// (d) node pickups/dropoffs under node handover, (e)/(f) trips start at the
/// agent's initial position when positions are fixed (every copy in `Multi`
/// mode starts fresh at that position), and nonnegative start times.
pub fn check_feasible(inst: &Instance, sched: &Schedule, mode: CopyMode) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut push = |trip: Option<usize>, rule: Rule, message: String| {
        violations.push(Violation { trip, rule, message });
    };

    let mut at = Point::Node(inst.source());
    for (i, trip) in sched.trips.iter().enumerate() {
        if trip.carry_path.is_empty() {
            push(Some(i), Rule::Continuity, "carry path is empty".into());
            continue;
        }
        if trip.start_time < 0.0 {
            push(Some(i), Rule::StartTime, format!("start time {} < 0", trip.start_time));
        }
        if trip.pickup() != at {
            push(
                Some(i),
                Rule::Continuity,
                format!(
                    "pickup {} does not continue from {}",
                    trip.pickup().describe(inst),
                    at.describe(inst)
                ),
            );
        }
        if let Some(end) = trip.empty_path.last() {
            if *end != trip.pickup() {
                push(
                    Some(i),
                    Rule::Continuity,
                    format!(
                        "empty path ends at {} but pickup is {}",
                        end.describe(inst),
                        trip.pickup().describe(inst)
                    ),
                );
            }
        }
        for path in [&trip.empty_path, &trip.carry_path] {
            match path_segments(inst, path) {
                Ok(segments) => {
                    if let Err(e) = check_range(inst, trip.agent, path, &segments) {
                        push(Some(i), Rule::Range, e.to_string());
                    }
                }
                Err(e) => push(Some(i), Rule::Continuity, e.to_string()),
            }
        }
        if inst.handover() == Handover::Node {
            for (what, p) in [("pickup", trip.pickup()), ("dropoff", trip.dropoff())] {
                if p.as_node().is_none() {
                    push(
                        Some(i),
                        Rule::NodeHandover,
                        format!("{what} at {} but handover manner is node", p.describe(inst)),
                    );
                }
            }
        }
        if inst.positions_fixed() {
            let expected = Point::Node(inst.agent(trip.agent).position);
            if trip.start() != expected {
                push(
                    Some(i),
                    Rule::StartPosition,
                    format!(
                        "trip of agent {} starts at {} instead of {}",
                        inst.agent(trip.agent).name,
                        trip.start().describe(inst),
                        expected.describe(inst)
                    ),
                );
            }
        }
        at = trip.dropoff();
    }
    if at != Point::Node(inst.target()) {
        push(None, Rule::Continuity, format!("package ends at {}, not the target", at.describe(inst)));
    }
    if let Some(first) = sched.trips.first() {
        if first.pickup() != Point::Node(inst.source()) {
            push(Some(0), Rule::Continuity, "first pickup is not the source".into());
        }
    }
    if mode == CopyMode::Single {
        let uses = sched.uses_per_agent(inst);
        for (a, &n) in uses.iter().enumerate() {
            if n > 1 {
                push(
                    None,
                    Rule::SingleUse,
                    format!("agent {} appears in {} trips", inst.agent(a).name, n),
                );
            }
        }
    }
    FeasibilityReport { feasible: violations.is_empty(), violations }
}

// ---------------------------------------------------------------------------
// JSON representation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PointData {
    Node(String),
    OnEdge { edge: [String; 2], offset: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TripData {
    agent: String,
    start_time: f64,
    empty_path: Vec<PointData>,
    carry_path: Vec<PointData>,
}

#[derive(Debug, Error)]
pub enum ScheduleParseError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("no edge {{{0},{1}}}")]
    UnknownEdge(String, String),
    #[error("offset {2} outside [0, {3}] on edge {{{0},{1}}}")]
    BadOffset(String, String, f64, f64),
}

impl Schedule {
    /// Parse a schedule from its JSON representation (an array of trips).
    pub fn parse(inst: &Instance, text: &str) -> Result<Schedule, ScheduleParseError> {
        let trips: Vec<TripData> = serde_json::from_str(text)?;
        let point = |p: &PointData| -> Result<Point, ScheduleParseError> {
            match p {
                PointData::Node(name) => inst
                    .node_id(name)
                    .map(Point::Node)
                    .ok_or_else(|| ScheduleParseError::UnknownNode(name.clone())),
                PointData::OnEdge { edge: [a, b], offset } => {
                    let u = inst.node_id(a).ok_or_else(|| ScheduleParseError::UnknownNode(a.clone()))?;
                    let v = inst.node_id(b).ok_or_else(|| ScheduleParseError::UnknownNode(b.clone()))?;
                    let e = inst
                        .edge_between(u, v)
                        .ok_or_else(|| ScheduleParseError::UnknownEdge(a.clone(), b.clone()))?;
                    let len = inst.edge(e).length;
                    if !(*offset >= 0.0 && *offset <= len) {
                        return Err(ScheduleParseError::BadOffset(a.clone(), b.clone(), *offset, len));
                    }
                    // Offsets are measured from the first listed endpoint.
                    let from_u = if inst.edge(e).u == u { *offset } else { len - *offset };
                    Ok(Point::on_edge(inst, e, from_u))
                }
            }
        };
        let mut out = Vec::with_capacity(trips.len());
        for t in trips {
            let agent = inst
                .agent_id(&t.agent)
                .ok_or_else(|| ScheduleParseError::UnknownAgent(t.agent.clone()))?;
            let empty_path = t.empty_path.iter().map(&point).collect::<Result<_, _>>()?;
            let carry_path = t.carry_path.iter().map(&point).collect::<Result<_, _>>()?;
            out.push(Trip { agent, start_time: t.start_time, empty_path, carry_path });
        }
        Ok(Schedule { trips: out })
    }

    pub fn to_json(&self, inst: &Instance) -> String {
        let point = |p: &Point| match *p {
            Point::Node(v) => PointData::Node(inst.node_name(v).to_string()),
            Point::OnEdge { edge, offset } => {
                let d = inst.edge(edge);
                PointData::OnEdge {
                    edge: [inst.node_name(d.u).to_string(), inst.node_name(d.v).to_string()],
                    offset,
                }
            }
        };
        let data: Vec<TripData> = self
            .trips
            .iter()
            .map(|t| TripData {
                agent: inst.agent(t.agent).name.clone(),
                start_time: t.start_time,
                empty_path: t.empty_path.iter().map(point).collect(),
                carry_path: t.carry_path.iter().map(point).collect(),
            })
            .collect();
        serde_json::to_string_pretty(&data).expect("schedule serialization cannot fail")
    }
}

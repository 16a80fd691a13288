//! Instance model: the graph, the package endpoints and the agents with
//! their movement ranges, plus validation of the structural assumptions and
//! the JSON interchange format.
//!
//! Node identifiers are opaque strings in the file format and dense `usize`
//! indices internally; an [`Instance`] keeps the mapping so reports can name
//! nodes. Instances are immutable after construction, which makes the lazy
//! shortest-path caches in [`crate::metric`] safe to share across threads.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::PathsCache;

pub type NodeId = usize;
pub type EdgeId = usize;
pub type AgentId = usize;

/// Where package transfers between agents may happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handover {
    /// Transfers only at nodes.
    Node,
    /// Transfers at nodes or at interior points of edges.
    Edge,
}

#[derive(Debug, Clone)]
pub struct EdgeData {
    pub u: NodeId,
    pub v: NodeId,
    pub length: f64,
}

impl EdgeData {
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A mobile agent: initial position, velocity, consumption rate and the
/// subgraph it may move in.
#[derive(Debug, Clone)]
pub struct Agent {
    pub name: String,
    pub position: NodeId,
    /// Velocity, distance per time unit. Strictly positive; may be infinite.
    pub speed: f64,
    /// Energy consumed per unit of distance traveled.
    pub rate: f64,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    node_mask: Vec<bool>,
    edge_mask: Vec<bool>,
}

impl Agent {
    pub fn in_node_range(&self, v: NodeId) -> bool {
        self.node_mask.get(v).copied().unwrap_or(false)
    }

    pub fn in_edge_range(&self, e: EdgeId) -> bool {
        self.edge_mask.get(e).copied().unwrap_or(false)
    }
}

/// A location: either a node or a point in the interior of an edge, at
/// `offset` from the edge's `u` endpoint.
///
/// Constructors canonicalize: an offset of exactly `0` or the full edge
/// length is represented as the corresponding [`Point::Node`], so equal
/// locations compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Node(NodeId),
    OnEdge { edge: EdgeId, offset: f64 },
}

impl Point {
    /// Canonicalizing constructor for a point on an edge.
    pub fn on_edge(inst: &Instance, edge: EdgeId, offset: f64) -> Point {
        let data = inst.edge(edge);
        if offset == 0.0 {
            Point::Node(data.u)
        } else if offset == data.length {
            Point::Node(data.v)
        } else {
            Point::OnEdge { edge, offset }
        }
    }

    pub fn as_node(&self) -> Option<NodeId> {
        match self {
            Point::Node(v) => Some(*v),
            Point::OnEdge { .. } => None,
        }
    }

    pub fn describe(&self, inst: &Instance) -> String {
        match self {
            Point::Node(v) => inst.node_name(*v).to_string(),
            Point::OnEdge { edge, offset } => {
                let e = inst.edge(*edge);
                format!(
                    "{}@{} on {{{},{}}}",
                    offset,
                    e.length,
                    inst.node_name(e.u),
                    inst.node_name(e.v)
                )
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("graph has no nodes")]
    NoNodes,
    #[error("duplicate node name {0:?}")]
    DuplicateNode(String),
    #[error("unknown node {0:?} referenced by {1}")]
    UnknownNode(String, String),
    #[error("edge {{{0},{1}}} is a self-loop")]
    SelfLoop(String, String),
    #[error("duplicate edge {{{0},{1}}}")]
    DuplicateEdge(String, String),
    #[error("edge {{{0},{1}}} has invalid length {2} (must be finite and >= 0)")]
    BadLength(String, String, f64),
    #[error("graph is disconnected: node {0:?} unreachable from {1:?}")]
    Disconnected(String, String),
    #[error("duplicate agent id {0:?}")]
    DuplicateAgent(String),
    #[error("agent {0:?} has invalid speed {1} (must be > 0)")]
    BadSpeed(String, f64),
    #[error("agent {0:?} has invalid rate {1} (must be finite and >= 0)")]
    BadRate(String, f64),
    #[error("agent {0:?} edge range contains {{{1},{2}}} but node range misses an endpoint")]
    EdgeRangeEndpoints(String, String, String),
    #[error("agent {0:?} subgraph disconnected: {1:?} unreachable from {2:?}")]
    AgentDisconnected(String, String, String),
    #[error("agent {0:?} initial position {1:?} outside its node range")]
    PositionOutsideRange(String, String),
    #[error("union of agent node ranges misses node {0:?}")]
    UncoveredNode(String),
    #[error("union of agent edge ranges misses edge {{{0},{1}}}")]
    UncoveredEdge(String, String),
    #[error("instance has no agents but source != target")]
    NoAgents,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation error: {0}")]
    Invalid(#[from] ValidationError),
}

fn speed_is_valid(s: f64) -> bool {
    s > 0.0 && !s.is_nan()
}

/// A validated, immutable problem instance.
pub struct Instance {
    names: Vec<String>,
    by_name: HashMap<String, NodeId>,
    edges: Vec<EdgeData>,
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
    edge_by_pair: HashMap<(NodeId, NodeId), EdgeId>,
    source: NodeId,
    target: NodeId,
    handover: Handover,
    positions_fixed: bool,
    agents: Vec<Agent>,
    edge_agents: Vec<Vec<AgentId>>,
    node_agents: Vec<Vec<AgentId>>,
    pub(crate) paths_cache: Mutex<PathsCache>,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("nodes", &self.names.len())
            .field("edges", &self.edges.len())
            .field("agents", &self.agents.len())
            .field("source", &self.names[self.source])
            .field("target", &self.names[self.target])
            .field("handover", &self.handover)
            .finish()
    }
}

impl Clone for Instance {
    fn clone(&self) -> Self {
        // The shortest-path cache is not carried over; it refills lazily.
        Instance {
            names: self.names.clone(),
            by_name: self.by_name.clone(),
            edges: self.edges.clone(),
            adjacency: self.adjacency.clone(),
            edge_by_pair: self.edge_by_pair.clone(),
            source: self.source,
            target: self.target,
            handover: self.handover,
            positions_fixed: self.positions_fixed,
            agents: self.agents.clone(),
            edge_agents: self.edge_agents.clone(),
            node_agents: self.node_agents.clone(),
            paths_cache: Mutex::new(PathsCache::default()),
        }
    }
}

impl Instance {
    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.names[v]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeData {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[EdgeData] {
        &self.edges
    }

    pub fn agent(&self, a: AgentId) -> &Agent {
        &self.agents[a]
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a.name == name)
    }

    pub fn adjacency(&self, v: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        let key = (u.min(v), u.max(v));
        self.edge_by_pair.get(&key).copied()
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn handover(&self) -> Handover {
        self.handover
    }

    pub fn positions_fixed(&self) -> bool {
        self.positions_fixed
    }

    /// Agents that can traverse edge `e`, sorted by id.
    pub fn agents_on_edge(&self, e: EdgeId) -> &[AgentId] {
        &self.edge_agents[e]
    }

    /// Agents that can visit node `v`, sorted by id.
    pub fn agents_at_node(&self, v: NodeId) -> &[AgentId] {
        &self.node_agents[v]
    }

    /// Instance with the same data except for the handover manner.
    pub fn with_handover(&self, handover: Handover) -> Instance {
        let mut inst = self.clone();
        inst.handover = handover;
        inst
    }

    /// Instance with the same data except for agent positions. `positions`
    /// must give one node per agent.
    pub fn with_positions(&self, positions: &[NodeId], positions_fixed: bool) -> Result<Instance, ValidationError> {
        let mut data = self.data();
        for (a, &p) in positions.iter().enumerate() {
            data.agents[a].p = self.names[p].clone();
        }
        data.positions_fixed = positions_fixed;
        Instance::from_data(data)
    }

    /// Parse and validate an instance from its JSON representation.
    pub fn parse(text: &str) -> Result<Instance, LoadError> {
        let data: InstanceData = serde_json::from_str(text)?;
        Ok(Instance::from_data(data)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.data()).expect("instance serialization cannot fail")
    }

    /// FNV-1a hash of the canonical serialization, used to key reports.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_string(&self.data()).expect("instance serialization cannot fail");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in bytes.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    /// The serializable form of this instance.
    pub fn data(&self) -> InstanceData {
        InstanceData {
            graph: GraphData {
                nodes: self.names.clone(),
                edges: self
                    .edges
                    .iter()
                    .map(|e| EdgeEntry {
                        u: self.names[e.u].clone(),
                        v: self.names[e.v].clone(),
                        length: e.length,
                    })
                    .collect(),
            },
            package: PackageData {
                source: self.names[self.source].clone(),
                target: self.names[self.target].clone(),
            },
            handover: self.handover,
            positions_fixed: self.positions_fixed,
            agents: self
                .agents
                .iter()
                .map(|a| AgentData {
                    id: a.name.clone(),
                    p: self.names[a.position].clone(),
                    speed: a.speed,
                    rate: a.rate,
                    nodes: a.nodes.iter().map(|&v| self.names[v].clone()).collect(),
                    edges: a
                        .edges
                        .iter()
                        .map(|&e| {
                            let d = &self.edges[e];
                            [self.names[d.u].clone(), self.names[d.v].clone()]
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Build and fully validate an instance.
    pub fn from_data(data: InstanceData) -> Result<Instance, ValidationError> {
        if data.graph.nodes.is_empty() {
            return Err(ValidationError::NoNodes);
        }
        let mut by_name = HashMap::new();
        for (i, name) in data.graph.nodes.iter().enumerate() {
            if by_name.insert(name.clone(), i).is_some() {
                return Err(ValidationError::DuplicateNode(name.clone()));
            }
        }
        let names = data.graph.nodes.clone();
        let lookup = |name: &str, ctx: &str| -> Result<NodeId, ValidationError> {
            by_name
                .get(name)
                .copied()
                .ok_or_else(|| ValidationError::UnknownNode(name.to_string(), ctx.to_string()))
        };

        let mut edges = Vec::with_capacity(data.graph.edges.len());
        let mut adjacency = vec![Vec::new(); names.len()];
        let mut edge_by_pair = HashMap::new();
        for entry in &data.graph.edges {
            let u = lookup(&entry.u, "an edge")?;
            let v = lookup(&entry.v, "an edge")?;
            if u == v {
                return Err(ValidationError::SelfLoop(entry.u.clone(), entry.v.clone()));
            }
            if !(entry.length.is_finite() && entry.length >= 0.0) {
                return Err(ValidationError::BadLength(entry.u.clone(), entry.v.clone(), entry.length));
            }
            let key = (u.min(v), u.max(v));
            let id = edges.len();
            if edge_by_pair.insert(key, id).is_some() {
                return Err(ValidationError::DuplicateEdge(entry.u.clone(), entry.v.clone()));
            }
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
            edges.push(EdgeData { u, v, length: entry.length });
        }

        let source = lookup(&data.package.source, "package.source")?;
        let target = lookup(&data.package.target, "package.target")?;

        // Whole-graph connectivity.
        {
            let mut seen = vec![false; names.len()];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &(w, _) in &adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            if let Some(v) = seen.iter().position(|s| !s) {
                return Err(ValidationError::Disconnected(names[v].clone(), names[0].clone()));
            }
        }

        let mut agents = Vec::with_capacity(data.agents.len());
        let mut agent_names = HashMap::new();
        for spec in &data.agents {
            if agent_names.insert(spec.id.clone(), agents.len()).is_some() {
                return Err(ValidationError::DuplicateAgent(spec.id.clone()));
            }
            if !speed_is_valid(spec.speed) {
                return Err(ValidationError::BadSpeed(spec.id.clone(), spec.speed));
            }
            if !(spec.rate.is_finite() && spec.rate >= 0.0) {
                return Err(ValidationError::BadRate(spec.id.clone(), spec.rate));
            }
            let position = lookup(&spec.p, &format!("agent {:?}", spec.id))?;
            let mut node_mask = vec![false; names.len()];
            let mut nodes = Vec::new();
            for n in &spec.nodes {
                let v = lookup(n, &format!("agent {:?} node range", spec.id))?;
                if !node_mask[v] {
                    node_mask[v] = true;
                    nodes.push(v);
                }
            }
            nodes.sort_unstable();
            let mut edge_mask = vec![false; edges.len()];
            let mut agent_edges = Vec::new();
            for pair in &spec.edges {
                let u = lookup(&pair[0], &format!("agent {:?} edge range", spec.id))?;
                let v = lookup(&pair[1], &format!("agent {:?} edge range", spec.id))?;
                let e = edge_by_pair
                    .get(&(u.min(v), u.max(v)))
                    .copied()
                    .ok_or_else(|| ValidationError::UnknownNode(format!("{{{},{}}}", pair[0], pair[1]), format!("agent {:?} edge range (no such edge)", spec.id)))?;
                if !node_mask[u] || !node_mask[v] {
                    return Err(ValidationError::EdgeRangeEndpoints(spec.id.clone(), pair[0].clone(), pair[1].clone()));
                }
                if !edge_mask[e] {
                    edge_mask[e] = true;
                    agent_edges.push(e);
                }
            }
            agent_edges.sort_unstable();

            // Connectivity of the agent's subgraph.
            if let Some(&first) = nodes.first() {
                let mut seen = vec![false; names.len()];
                let mut stack = vec![first];
                seen[first] = true;
                while let Some(u) = stack.pop() {
                    for &(w, e) in &adjacency[u] {
                        if edge_mask[e] && !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
                if let Some(&bad) = nodes.iter().find(|&&v| !seen[v]) {
                    return Err(ValidationError::AgentDisconnected(
                        spec.id.clone(),
                        names[bad].clone(),
                        names[first].clone(),
                    ));
                }
            }
            if data.positions_fixed && !node_mask[position] {
                return Err(ValidationError::PositionOutsideRange(spec.id.clone(), spec.p.clone()));
            }
            agents.push(Agent {
                name: spec.id.clone(),
                position,
                speed: spec.speed,
                rate: spec.rate,
                nodes,
                edges: agent_edges,
                node_mask,
                edge_mask,
            });
        }

        // Coverage: the union of the agent subgraphs must be the whole graph.
        let mut edge_agents = vec![Vec::new(); edges.len()];
        let mut node_agents = vec![Vec::new(); names.len()];
        for (id, a) in agents.iter().enumerate() {
            for &e in &a.edges {
                edge_agents[e].push(id);
            }
            for &v in &a.nodes {
                node_agents[v].push(id);
            }
        }
        if let Some(e) = edge_agents.iter().position(|v| v.is_empty()) {
            let d = &edges[e];
            return Err(ValidationError::UncoveredEdge(names[d.u].clone(), names[d.v].clone()));
        }
        if agents.is_empty() {
            if source != target {
                return Err(ValidationError::NoAgents);
            }
        } else if let Some(v) = node_agents.iter().position(|a| a.is_empty()) {
            return Err(ValidationError::UncoveredNode(names[v].clone()));
        }

        Ok(Instance {
            names,
            by_name,
            edges,
            adjacency,
            edge_by_pair,
            source,
            target,
            handover: data.handover,
            positions_fixed: data.positions_fixed,
            agents,
            edge_agents,
            node_agents,
            paths_cache: Mutex::new(PathsCache::default()),
        })
    }
}

/// Serializable instance document. Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceData {
    pub graph: GraphData,
    pub package: PackageData,
    pub handover: Handover,
    pub positions_fixed: bool,
    pub agents: Vec<AgentData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphData {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: String,
    pub v: String,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageData {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentData {
    pub id: String,
    pub p: String,
    #[serde(with = "speed_repr")]
    pub speed: f64,
    pub rate: f64,
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

/// Speeds are JSON numbers, with the string `"inf"` accepted and emitted for
/// unbounded speed (JSON has no infinity literal).
mod speed_repr {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(speed: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if speed.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(*speed)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        match Repr::deserialize(de)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Text(s) => Err(D::Error::custom(format!("invalid speed {s:?} (number or \"inf\")"))),
        }
    }
}

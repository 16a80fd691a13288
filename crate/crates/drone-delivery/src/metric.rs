//! Per-agent metric engine: shortest-path distances inside each agent's
//! subgraph, isometry and tree tests, and edge subdivision.
//!
//! Distances are computed lazily by Dijkstra (zero-length edges are legal,
//! negative ones are not) and cached per `(scope, source)` on the instance.

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::instance::{
    AgentId, EdgeEntry, EdgeId, Instance, InstanceData, NodeId, Point,
    ValidationError,
};

/// Min-heap adapter: orders by `(score, key)` ascending so ties break on the
/// smaller key, keeping runs deterministic.
#[derive(PartialEq)]
pub(crate) struct MinScored<K>(pub f64, pub K);

impl<K: PartialEq> Eq for MinScored<K> {}

impl<K: PartialOrd + PartialEq> PartialOrd for MinScored<K> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<K: PartialOrd + PartialEq> Ord for MinScored<K> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap. Scores are never NaN.
        other
            .0
            .partial_cmp(&self.0)
            .unwrap()
            .then_with(|| other.1.partial_cmp(&self.1).unwrap())
    }
}

/// Single-source shortest paths within some subgraph.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub source: NodeId,
    /// `f64::INFINITY` for nodes outside the subgraph or unreachable.
    pub dist: Vec<f64>,
    pub parent: Vec<Option<NodeId>>,
}

impl ShortestPaths {
    /// Node sequence from the source to `v`, if reachable.
    pub fn path_to(&self, v: NodeId) -> Option<Vec<NodeId>> {
        if !self.dist[v].is_finite() {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        debug_assert_eq!(path[0], self.source);
        Some(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum PathScope {
    Graph,
    Agent(AgentId),
}

#[derive(Default)]
pub(crate) struct PathsCache {
    map: HashMap<(PathScope, NodeId), Arc<ShortestPaths>>,
}

fn dijkstra(inst: &Instance, scope: PathScope, source: NodeId) -> ShortestPaths {
    let n = inst.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let in_scope = |e: EdgeId| match scope {
        PathScope::Graph => true,
        PathScope::Agent(a) => inst.agent(a).in_edge_range(e),
    };
    let node_ok = |v: NodeId| match scope {
        PathScope::Graph => true,
        PathScope::Agent(a) => inst.agent(a).in_node_range(v),
    };
    if !node_ok(source) {
        return ShortestPaths { source, dist, parent };
    }
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(MinScored(0.0, source));
    let mut done = vec![false; n];
    while let Some(MinScored(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(w, e) in inst.adjacency(u) {
            if !in_scope(e) || done[w] {
                continue;
            }
            let nd = d + inst.edge(e).length;
            if nd < dist[w] {
                dist[w] = nd;
                parent[w] = Some(u);
                heap.push(MinScored(nd, w));
            }
        }
    }
    ShortestPaths { source, dist, parent }
}

/// Distances from one agent's initial position, with pairwise queries inside
/// the agent's subgraph.
pub struct DistanceMap<'a> {
    inst: &'a Instance,
    pub agent: AgentId,
    from_position: Arc<ShortestPaths>,
}

impl<'a> DistanceMap<'a> {
    /// Distance from the agent's initial position to `v`; infinite if `v` is
    /// outside the agent's range.
    pub fn to_node(&self, v: NodeId) -> f64 {
        self.from_position.dist[v]
    }

    /// Shortest-path distance between two nodes inside the agent's subgraph.
    pub fn between(&self, u: NodeId, v: NodeId) -> f64 {
        self.inst.paths(PathScope::Agent(self.agent), u).dist[v]
    }
}

#[derive(Debug, Error)]
#[error("unknown agent id {0}")]
pub struct UnknownAgent(pub usize);

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("no such edge {0}")]
    UnknownEdge(EdgeId),
    #[error("split offset {offset} out of range (0, {length}) on edge {edge}")]
    OffsetOutOfRange { edge: EdgeId, offset: f64, length: f64 },
    #[error("split offsets on edge {0} not strictly increasing")]
    UnsortedOffsets(EdgeId),
    #[error("split produced an invalid instance: {0}")]
    Invalid(#[from] ValidationError),
}

/// Bookkeeping from [`Instance::split_edges`]: how new nodes map back to
/// points of the original instance.
#[derive(Debug, Clone, Default)]
pub struct SplitMap {
    /// For each node of the refined instance: `None` for original nodes,
    /// `Some((edge, offset))` for subdivision nodes.
    pub node_origin: Vec<Option<(EdgeId, f64)>>,
}

impl SplitMap {
    /// Express a refined-instance node as a point of the original instance.
    pub fn to_original_point(&self, v: NodeId) -> Point {
        match self.node_origin[v] {
            None => Point::Node(v),
            Some((edge, offset)) => Point::OnEdge { edge, offset },
        }
    }
}

impl Instance {
    pub(crate) fn paths(&self, scope: PathScope, source: NodeId) -> Arc<ShortestPaths> {
        let mut cache = self.paths_cache.lock().unwrap();
        if let Some(found) = cache.map.get(&(scope, source)) {
            return Arc::clone(found);
        }
        let computed = Arc::new(dijkstra(self, scope, source));
        cache.map.insert((scope, source), Arc::clone(&computed));
        computed
    }

    /// Shortest paths in the whole graph from `source`.
    pub fn graph_paths(&self, source: NodeId) -> Arc<ShortestPaths> {
        self.paths(PathScope::Graph, source)
    }

    /// Shortest paths within agent `a`'s subgraph from `source`.
    pub fn agent_paths(&self, a: AgentId, source: NodeId) -> Arc<ShortestPaths> {
        self.paths(PathScope::Agent(a), source)
    }

    /// Distance map for agent `a`, rooted at its initial position.
    pub fn agent_distances(&self, a: AgentId) -> Result<DistanceMap<'_>, UnknownAgent> {
        if a >= self.agent_count() {
            return Err(UnknownAgent(a));
        }
        let from_position = self.agent_paths(a, self.agent(a).position);
        Ok(DistanceMap { inst: self, agent: a, from_position })
    }

    /// True iff agent `a`'s subgraph preserves whole-graph distances between
    /// all pairs of its nodes.
    pub fn is_isometric(&self, a: AgentId) -> Result<bool, UnknownAgent> {
        if a >= self.agent_count() {
            return Err(UnknownAgent(a));
        }
        let agent = self.agent(a);
        for &u in &agent.nodes {
            let in_range = self.paths(PathScope::Agent(a), u);
            let in_graph = self.paths(PathScope::Graph, u);
            for &v in &agent.nodes {
                if in_range.dist[v] > in_graph.dist[v] + 1e-9 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// True iff the graph is a tree (connected with `|E| = |V| - 1`).
    pub fn is_tree(&self) -> bool {
        // Connectivity is a construction invariant.
        self.edge_count() + 1 == self.node_count()
    }

    /// Subdivide edges at the given offsets (strictly inside each edge,
    /// strictly increasing). Every agent whose edge range contained a split
    /// edge receives all fragments and the new nodes; source, target, agent
    /// data and total lengths are preserved.
    pub fn split_edges(&self, plan: &BTreeMap<EdgeId, Vec<f64>>) -> Result<(Instance, SplitMap), SplitError> {
        for (&e, offsets) in plan {
            if e >= self.edge_count() {
                return Err(SplitError::UnknownEdge(e));
            }
            let len = self.edge(e).length;
            for pair in offsets.windows(2) {
                let increasing = pair[0] < pair[1];
                if !increasing {
                    return Err(SplitError::UnsortedOffsets(e));
                }
            }
            for &x in offsets {
                if !(x > 0.0 && x < len) {
                    return Err(SplitError::OffsetOutOfRange { edge: e, offset: x, length: len });
                }
            }
        }

        let mut data = self.data();
        let mut node_origin: Vec<Option<(EdgeId, f64)>> = vec![None; self.node_count()];
        // Fragment name lists per original edge, aligned with the original
        // edge order so agents can swap split edges for their fragments.
        let mut fragments: HashMap<EdgeId, Vec<EdgeEntry>> = HashMap::new();
        let mut new_nodes: HashMap<EdgeId, Vec<String>> = HashMap::new();

        let fresh_name = |data: &InstanceData, wanted: String| -> String {
            let mut name = wanted;
            while data.graph.nodes.contains(&name) {
                name.push('\'');
            }
            name
        };

        for (&e, offsets) in plan {
            if offsets.is_empty() {
                continue;
            }
            let edge = self.edge(e);
            let (u_name, v_name) = (self.node_name(edge.u).to_string(), self.node_name(edge.v).to_string());
            let mut chain = vec![u_name.clone()];
            let mut names_here = Vec::new();
            for (i, &x) in offsets.iter().enumerate() {
                let name = fresh_name(&data, format!("{u_name}|{v_name}|{}", i + 1));
                node_origin.push(Some((e, x)));
                data.graph.nodes.push(name.clone());
                names_here.push(name.clone());
                chain.push(name);
            }
            chain.push(v_name);
            let mut parts = Vec::new();
            let mut prev = 0.0;
            for (i, win) in chain.windows(2).enumerate() {
                let end = offsets.get(i).copied().unwrap_or(edge.length);
                parts.push(EdgeEntry { u: win[0].clone(), v: win[1].clone(), length: end - prev });
                prev = end;
            }
            fragments.insert(e, parts);
            new_nodes.insert(e, names_here);
        }

        // Rebuild the global edge list, replacing split edges in place.
        let mut rebuilt = Vec::new();
        for (e, entry) in data.graph.edges.iter().enumerate() {
            match fragments.get(&e) {
                Some(parts) => rebuilt.extend(parts.iter().cloned()),
                None => rebuilt.push(entry.clone()),
            }
        }
        data.graph.edges = rebuilt;

        for (a, spec) in data.agents.iter_mut().enumerate() {
            let agent = self.agent(a);
            let mut edges = Vec::new();
            for &e in &agent.edges {
                match fragments.get(&e) {
                    Some(parts) => {
                        for p in parts {
                            edges.push([p.u.clone(), p.v.clone()]);
                        }
                        spec.nodes.extend(new_nodes[&e].iter().cloned());
                    }
                    None => {
                        let d = self.edge(e);
                        edges.push([self.node_name(d.u).to_string(), self.node_name(d.v).to_string()]);
                    }
                }
            }
            spec.edges = edges;
        }

        let inst = Instance::from_data(data)?;
        Ok((inst, SplitMap { node_origin }))
    }

    /// Shortest route for agent `a` between two points, as a point sequence
    /// usable as a trip path. Interior endpoints are handled by splitting
    /// their edges on a scratch copy of the instance.
    pub(crate) fn agent_point_route(&self, a: AgentId, from: Point, to: Point) -> Option<Vec<Point>> {
        if from == to {
            return Some(vec![from]);
        }
        match (from, to) {
            (Point::Node(u), Point::Node(v)) => {
                let paths = self.agent_paths(a, u);
                paths.path_to(v).map(|nodes| nodes.into_iter().map(Point::Node).collect())
            }
            _ => {
                let mut plan: BTreeMap<EdgeId, Vec<f64>> = BTreeMap::new();
                for p in [from, to] {
                    if let Point::OnEdge { edge, offset } = p {
                        plan.entry(edge).or_default().push(offset);
                    }
                }
                for offsets in plan.values_mut() {
                    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    offsets.dedup();
                }
                let (scratch, map) = self.split_edges(&plan).ok()?;
                let locate = |p: Point| -> NodeId {
                    match p {
                        Point::Node(v) => v,
                        Point::OnEdge { edge, offset } => {
                            (self.node_count()..scratch.node_count())
                                .find(|&v| map.node_origin[v] == Some((edge, offset)))
                                .expect("split node for requested offset")
                        }
                    }
                };
                let su = locate(from);
                let sv = locate(to);
                let paths = scratch.agent_paths(a, su);
                let nodes = paths.path_to(sv)?;
                Some(nodes.into_iter().map(|v| map.to_original_point(v)).collect())
            }
        }
    }
}

//! Online topological map built by self-organizing predicted waypoints.
//!
//! Nodes are visited places, the current place, and ghosts (observed but
//! unexplored locations). Each update localizes waypoints against the
//! existing nodes with a distance threshold γ and either links, merges or
//! creates nodes accordingly.

use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Default localization threshold γ, meters.
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Visited,
    Current,
    Ghost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: Point,
    pub descriptor: Vec<f64>,
    /// Number of waypoints folded into a ghost; 1 for places.
    pub accum_count: u32,
    /// Latest decision step at which the agent stood here; 0 for ghosts.
    pub last_visit_step: u32,
}

impl Node {
    pub fn is_ghost(&self) -> bool {
        self.kind == NodeKind::Ghost
    }

    pub fn is_place(&self) -> bool {
        !self.is_ghost()
    }
}

/// A predicted waypoint already expressed in the world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedWaypoint {
    pub position: Point,
    pub descriptor: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", content = "node", rename_all = "snake_case")]
pub enum WaypointOutcome {
    /// Localized to a visited node: edge added, waypoint dropped.
    LinkedVisited(NodeId),
    /// Localized to a ghost: folded into it.
    MergedGhost(NodeId),
    /// Nothing within γ: new ghost.
    NewGhost(NodeId),
    /// Localized onto the current node: dropped.
    OnCurrent(NodeId),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateReport {
    pub current: Option<NodeId>,
    pub current_reused: bool,
    /// One entry per input waypoint, in order.
    pub outcomes: Vec<WaypointOutcome>,
    pub new_edges: Vec<(NodeId, NodeId)>,
}

impl UpdateReport {
    pub fn created(&self) -> Vec<NodeId> {
        self.outcomes
            .iter()
            .filter_map(|o| match o {
                WaypointOutcome::NewGhost(id) => Some(*id),
                _ => None,
            })
            .collect()
    }

    pub fn merged(&self) -> Vec<NodeId> {
        self.outcomes
            .iter()
            .filter_map(|o| match o {
                WaypointOutcome::MergedGhost(id) => Some(*id),
                _ => None,
            })
            .collect()
    }

    pub fn discarded(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| matches!(o, WaypointOutcome::LinkedVisited(_) | WaypointOutcome::OnCurrent(_)))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateOptions {
    pub gamma: f64,
    /// Average the waypoints folded into a ghost; otherwise the ghost takes
    /// the latest waypoint's position and descriptor.
    pub accumulate: bool,
}

impl Default for UpdateOptions {
    fn default() -> Self {
        UpdateOptions {
            gamma: DEFAULT_GAMMA,
            accumulate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopoGraph {
    nodes: BTreeMap<NodeId, Node>,
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, f64>>,
    current: Option<NodeId>,
    next_id: u32,
}

/// Serializable snapshot of the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub nodes: Vec<Node>,
    pub edges: Vec<(NodeId, NodeId, f64)>,
}

impl TopoGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn current(&self) -> Option<NodeId> {
        self.current
    }

    pub fn ghosts(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(|n| n.is_ghost())
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.adjacency
            .get(&id)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&k, &v)| (k, v)))
    }

    pub fn edge(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.adjacency.get(&a).and_then(|m| m.get(&b)).copied()
    }

    /// Undirected edges with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, f64)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, m)| m.iter().filter(move |(&b, _)| a < b).map(move |(&b, &l)| (a, b, l)))
            .collect()
    }

    pub fn snapshot(&self) -> GraphSnapshot {
        GraphSnapshot {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges(),
        }
    }

    fn alloc_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn insert_node(&mut self, node: Node) {
        self.adjacency.entry(node.id).or_default();
        self.nodes.insert(node.id, node);
    }

    /// Adds an undirected edge measured at insertion time. Returns false for
    /// self-loops and existing edges.
    fn add_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        if a == b || self.edge(a, b).is_some() {
            return false;
        }
        let len = self.nodes[&a].position.distance(self.nodes[&b].position);
        self.adjacency.entry(a).or_default().insert(b, len);
        self.adjacency.entry(b).or_default().insert(a, len);
        true
    }

    /// Waypoint localization: the nearest node strictly closer than `gamma`,
    /// ties to the smaller id.
    pub fn localize(&self, p: Point, gamma: f64) -> Option<NodeId> {
        nearest_within(self.nodes.values().map(|n| (n.id, n.position)), p, gamma)
    }

    /// Integrates one decision step's observation.
    ///
    /// The previous current node becomes visited; the agent's position either
    /// reuses a visited node within γ or becomes a new current node linked to
    /// the previous one. Waypoints are then localized against the nodes as
    /// they stood before any waypoint of this batch was applied.
    pub fn update(
        &mut self,
        agent: Point,
        panorama_descriptor: &[f64],
        waypoints: &[ObservedWaypoint],
        step: u32,
        options: UpdateOptions,
    ) -> UpdateReport {
        let gamma = options.gamma;
        let mut report = UpdateReport::default();

        let previous = self.current.take();
        if let Some(prev) = previous {
            if let Some(n) = self.nodes.get_mut(&prev) {
                n.kind = NodeKind::Visited;
            }
        }
        let reuse = nearest_within(
            self.nodes.values().filter(|n| n.is_place()).map(|n| (n.id, n.position)),
            agent,
            gamma,
        );
        let current = match reuse {
            Some(id) => {
                let n = self.nodes.get_mut(&id).expect("localized node exists");
                n.kind = NodeKind::Current;
                n.last_visit_step = step;
                n.descriptor = panorama_descriptor.to_vec();
                report.current_reused = true;
                id
            }
            None => {
                let id = self.alloc_id();
                self.insert_node(Node {
                    id,
                    kind: NodeKind::Current,
                    position: agent,
                    descriptor: panorama_descriptor.to_vec(),
                    accum_count: 1,
                    last_visit_step: step,
                });
                id
            }
        };
        self.current = Some(current);
        report.current = Some(current);
        if let Some(prev) = previous {
            if self.nodes.contains_key(&prev) && self.add_edge(current, prev) {
                report.new_edges.push(edge_key(current, prev));
            }
        }

        let snapshot: Vec<(NodeId, NodeKind, Point)> =
            self.nodes.values().map(|n| (n.id, n.kind, n.position)).collect();
        for wp in waypoints {
            let hit = nearest_within(snapshot.iter().map(|&(id, _, p)| (id, p)), wp.position, gamma);
            let kind = hit.map(|id| snapshot.iter().find(|s| s.0 == id).expect("snapshot id").1);
            let outcome = match (hit, kind) {
                (Some(id), Some(NodeKind::Current)) => WaypointOutcome::OnCurrent(id),
                (Some(id), Some(NodeKind::Visited)) => {
                    if self.add_edge(current, id) {
                        report.new_edges.push(edge_key(current, id));
                    }
                    WaypointOutcome::LinkedVisited(id)
                }
                (Some(id), _) => {
                    let ghost = self.nodes.get_mut(&id).expect("snapshot id");
                    ghost.accum_count += 1;
                    if options.accumulate {
                        let w = 1.0 / ghost.accum_count as f64;
                        ghost.position = ghost.position + (wp.position - ghost.position) * w;
                        for (d, x) in ghost.descriptor.iter_mut().zip(&wp.descriptor) {
                            *d += (x - *d) * w;
                        }
                    } else {
                        ghost.position = wp.position;
                        ghost.descriptor = wp.descriptor.clone();
                    }
                    if self.add_edge(current, id) {
                        report.new_edges.push(edge_key(current, id));
                    }
                    WaypointOutcome::MergedGhost(id)
                }
                (None, _) => {
                    let id = self.alloc_id();
                    self.insert_node(Node {
                        id,
                        kind: NodeKind::Ghost,
                        position: wp.position,
                        descriptor: wp.descriptor.clone(),
                        accum_count: 1,
                        last_visit_step: 0,
                    });
                    self.add_edge(current, id);
                    report.new_edges.push(edge_key(current, id));
                    WaypointOutcome::NewGhost(id)
                }
            };
            report.outcomes.push(outcome);
        }
        report
    }

    /// Removes a ghost and its edges.
    pub fn delete_ghost(&mut self, id: NodeId) -> Result<Vec<(NodeId, NodeId)>> {
        let node = self.nodes.get(&id).ok_or(Error::MissingNode(id))?;
        if !node.is_ghost() {
            return Err(Error::NotAGhost(id));
        }
        self.nodes.remove(&id);
        let removed: Vec<_> = self
            .adjacency
            .remove(&id)
            .unwrap_or_default()
            .into_keys()
            .map(|n| edge_key(id, n))
            .collect();
        for (a, b) in &removed {
            let other = if *a == id { b } else { a };
            if let Some(m) = self.adjacency.get_mut(other) {
                m.remove(&id);
            }
        }
        Ok(removed)
    }

    /// Single-source shortest edge-length distances.
    pub fn distances_from(&self, source: NodeId) -> BTreeMap<NodeId, f64> {
        let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(source, 0.0);
        heap.push(HeapEntry(0.0, source));
        while let Some(HeapEntry(d, u)) = heap.pop() {
            if d > dist[&u] {
                continue;
            }
            for (v, w) in self.neighbors(u) {
                let nd = d + w;
                if dist.get(&v).is_none_or(|&old| nd < old) {
                    dist.insert(v, nd);
                    heap.push(HeapEntry(nd, v));
                }
            }
        }
        dist
    }

    /// All-pairs shortest path lengths over stored edge lengths, rows and
    /// columns in ascending id order.
    pub fn spatial_matrix(&self) -> SpatialMatrix {
        let ids: Vec<NodeId> = self.ids().collect();
        let n = ids.len();
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        for (i, &id) in ids.iter().enumerate() {
            let d = self.distances_from(id);
            for (j, other) in ids.iter().enumerate() {
                if let Some(&v) = d.get(other) {
                    dist[i][j] = v;
                }
            }
            dist[i][i] = 0.0;
        }
        debug_assert!(
            dist.iter().flatten().all(|d| d.is_finite()),
            "topological map is disconnected"
        );
        SpatialMatrix { ids, dist }
    }

    /// True if every node is reachable from every other.
    pub fn is_connected(&self) -> bool {
        let Some(first) = self.ids().next() else {
            return true;
        };
        self.distances_from(first).len() == self.nodes.len()
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let currents = self.nodes.values().filter(|n| n.kind == NodeKind::Current).count();
        if !self.nodes.is_empty() && currents != 1 {
            return Err(format!("{currents} current nodes"));
        }
        if !self.is_connected() {
            return Err("graph is disconnected".into());
        }
        for (a, m) in &self.adjacency {
            if !self.nodes.contains_key(a) {
                return Err(format!("edge endpoint {a} missing"));
            }
            for b in m.keys() {
                if a == b {
                    return Err(format!("self-loop at {a}"));
                }
                if self.edge(*b, *a).is_none() {
                    return Err(format!("edge {a}-{b} not symmetric"));
                }
            }
        }
        for n in self.nodes.values() {
            match n.kind {
                NodeKind::Ghost => {
                    if n.accum_count < 1 {
                        return Err(format!("ghost {} with no waypoints", n.id));
                    }
                    let mut deg = 0;
                    for (m, _) in self.neighbors(n.id) {
                        deg += 1;
                        if self.nodes[&m].is_ghost() {
                            return Err(format!("ghost {} adjacent to ghost {m}", n.id));
                        }
                    }
                    if deg == 0 {
                        return Err(format!("isolated ghost {}", n.id));
                    }
                }
                _ => {
                    if n.last_visit_step < 1 {
                        return Err(format!("place {} without visit step", n.id));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMatrix {
    pub ids: Vec<NodeId>,
    pub dist: Vec<Vec<f64>>,
}

impl SpatialMatrix {
    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.ids.iter().position(|&i| i == id)
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> Option<f64> {
        Some(self.dist[self.index_of(a)?][self.index_of(b)?])
    }
}

fn edge_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn nearest_within(candidates: impl Iterator<Item = (NodeId, Point)>, p: Point, gamma: f64) -> Option<NodeId> {
    let mut best: Option<(f64, NodeId)> = None;
    for (id, q) in candidates {
        let d = p.distance(q);
        if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
            best = Some((d, id));
        }
    }
    best.filter(|&(d, _)| d < gamma).map(|(_, id)| id)
}

#[derive(PartialEq)]
struct HeapEntry(f64, NodeId);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(x: f64, y: f64) -> ObservedWaypoint {
        ObservedWaypoint {
            position: Point::new(x, y),
            descriptor: vec![x, y],
        }
    }

    fn opts() -> UpdateOptions {
        UpdateOptions::default()
    }

    #[test]
    fn localize_threshold() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0, 0.0], &[], 1, opts());
        let id = g.current().unwrap();
        assert_eq!(g.localize(Point::new(0.0, 0.3), 0.5), Some(id));
        assert_eq!(g.localize(Point::new(0.0, 0.6), 0.5), None);
        assert_eq!(g.localize(Point::new(0.0, 0.5), 0.5), None);
    }

    #[test]
    fn localize_picks_nearest() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0, 0.0], &[wp(0.4, 0.0)], 1, UpdateOptions { gamma: 0.1, accumulate: true });
        let hit = g.localize(Point::new(0.15, 0.0), 0.5).unwrap();
        assert_eq!(g.node(hit).unwrap().position, Point::new(0.0, 0.0));
    }

    #[test]
    fn bootstrap_update() {
        let mut g = TopoGraph::new();
        let r = g.update(Point::new(0.0, 0.0), &[1.0, 0.0], &[wp(2.0, 0.0), wp(0.0, 2.0)], 1, opts());
        assert_eq!(g.len(), 3);
        assert_eq!(g.ghosts().count(), 2);
        assert_eq!(g.edges().len(), 2);
        assert_eq!(r.created().len(), 2);
        g.check_invariants().unwrap();
    }

    #[test]
    fn ghost_accumulates_mean() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0; 2], &[wp(1.0, 0.0)], 1, opts());
        let ghost = g.ghosts().next().unwrap().id;
        let r = g.update(Point::new(0.0, 0.0), &[0.0; 2], &[wp(1.2, 0.0)], 2, opts());
        assert_eq!(r.outcomes, vec![WaypointOutcome::MergedGhost(ghost)]);
        let n = g.node(ghost).unwrap();
        assert!((n.position.x - 1.1).abs() < 1e-12);
        assert_eq!(n.accum_count, 2);
        assert!((n.descriptor[0] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn waypoint_near_visited_adds_edge_only() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0; 2], &[], 1, opts());
        g.update(Point::new(2.0, 0.0), &[0.0; 2], &[], 2, opts());
        g.update(Point::new(2.0, 2.0), &[0.0; 2], &[], 3, opts());
        let before = g.len();
        let edges = g.edges().len();
        let r = g.update(Point::new(2.0, 2.0), &[0.0; 2], &[wp(0.1, 0.2)], 4, opts());
        assert!(matches!(r.outcomes[0], WaypointOutcome::LinkedVisited(_)));
        assert_eq!(g.len(), before);
        assert_eq!(g.edges().len(), edges + 1);
    }

    #[test]
    fn revisit_reuses_node() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0; 2], &[], 1, opts());
        let first = g.current().unwrap();
        g.update(Point::new(2.0, 0.0), &[0.0; 2], &[], 2, opts());
        let r = g.update(Point::new(0.1, 0.0), &[0.0; 2], &[], 3, opts());
        assert!(r.current_reused);
        assert_eq!(g.current(), Some(first));
        assert_eq!(g.node(first).unwrap().last_visit_step, 3);
        g.check_invariants().unwrap();
    }

    #[test]
    fn waypoint_on_current_is_dropped() {
        let mut g = TopoGraph::new();
        let r = g.update(Point::new(0.0, 0.0), &[0.0; 2], &[wp(0.2, 0.0)], 1, opts());
        assert!(matches!(r.outcomes[0], WaypointOutcome::OnCurrent(_)));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn delete_ghost_and_reobserve() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0; 2], &[wp(2.0, 0.0)], 1, opts());
        let ghost = g.ghosts().next().unwrap().id;
        let removed = g.delete_ghost(ghost).unwrap();
        assert_eq!(removed.len(), 1);
        assert_eq!(g.ghosts().count(), 0);
        assert!(g.edges().is_empty());

        g.update(Point::new(0.0, 0.0), &[0.0; 2], &[wp(2.0, 0.0)], 2, opts());
        let fresh = g.ghosts().next().unwrap();
        assert_ne!(fresh.id, ghost);
        assert_eq!(fresh.accum_count, 1);
    }

    #[test]
    fn delete_rejects_places_and_missing() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0; 2], &[], 1, opts());
        let cur = g.current().unwrap();
        assert!(matches!(g.delete_ghost(cur), Err(Error::NotAGhost(_))));
        assert!(matches!(g.delete_ghost(NodeId(99)), Err(Error::MissingNode(_))));
    }

    #[test]
    fn spatial_matrix_chain_and_single() {
        let mut g = TopoGraph::new();
        g.update(Point::new(0.0, 0.0), &[0.0; 2], &[], 1, opts());
        let m = g.spatial_matrix();
        assert_eq!(m.dist, vec![vec![0.0]]);
        g.update(Point::new(1.0, 0.0), &[0.0; 2], &[], 2, opts());
        g.update(Point::new(2.0, 0.0), &[0.0; 2], &[], 3, opts());
        let m = g.spatial_matrix();
        assert_eq!(m.get(NodeId(0), NodeId(2)), Some(2.0));
    }
}

use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::topomap::{NodeId, TopoGraph};

/// Subgoal sequence handed to the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Nodes after the start, ending with the goal.
    pub nodes: Vec<NodeId>,
    pub positions: Vec<Point>,
    /// Sum of stored edge lengths along the path.
    pub length: f64,
}

#[derive(PartialEq)]
struct Label {
    dist: f64,
    path: Vec<NodeId>,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on (distance, path)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.path.cmp(&self.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over stored edge lengths. Among equally short paths the
/// lexicographically smallest id sequence wins.
pub fn plan_path(graph: &TopoGraph, from: NodeId, goal: NodeId) -> Result<Plan> {
    if graph.node(from).is_none() {
        return Err(Error::MissingNode(from));
    }
    let goal_node = graph.node(goal).ok_or(Error::MissingNode(goal))?;
    if !goal_node.is_ghost() {
        return Err(Error::NotAGhost(goal));
    }
    let mut best: BTreeMap<NodeId, (f64, Vec<NodeId>)> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(from, (0.0, vec![from]));
    heap.push(Label {
        dist: 0.0,
        path: vec![from],
    });
    while let Some(Label { dist, path }) = heap.pop() {
        let u = *path.last().expect("non-empty path");
        if best.get(&u).is_some_and(|(d, p)| (*d, p) != (dist, &path)) {
            continue;
        }
        if u == goal {
            let nodes: Vec<NodeId> = path[1..].to_vec();
            let positions = nodes
                .iter()
                .map(|id| graph.node(*id).expect("path node").position)
                .collect();
            return Ok(Plan {
                nodes,
                positions,
                length: dist,
            });
        }
        for (v, w) in graph.neighbors(u) {
            let nd = dist + w;
            let mut np = path.clone();
            np.push(v);
            let better = match best.get(&v) {
                None => true,
                Some((d, p)) => nd < *d || (nd == *d && np < *p),
            };
            if better {
                best.insert(v, (nd, np.clone()));
                heap.push(Label { dist: nd, path: np });
            }
        }
    }
    Err(Error::Unreachable { from, goal })
}

//! Demonstrator policies with access to the true geodesic distances.

use super::scoring::Goal;
use crate::geometry::Point;
use crate::topomap::TopoGraph;
use crate::world::{ConfigSpace, DistanceField};

/// Agent stops once within this geodesic distance of the target.
pub const TEACHER_STOP_RADIUS: f64 = 3.0;
/// A reference subgoal counts as visited within this geodesic distance.
pub const SUBGOAL_VISIT_RADIUS: f64 = 1.5;
/// Ghost positions off the free space are snapped to free cells this close.
pub const GHOST_SNAP: f64 = 0.5;

fn nearest_ghost(graph: &TopoGraph, field: &DistanceField<'_, '_>) -> Option<Goal> {
    let mut best: Option<(f64, Goal)> = None;
    for g in graph.ghosts() {
        let d = field.distance_near(g.position, GHOST_SNAP);
        let cand = Goal::Node(g.id);
        if best.is_none_or(|(bd, bg)| d < bd || (d == bd && cand < bg)) {
            best = Some((d, cand));
        }
    }
    best.map(|(_, g)| g)
}

/// Shortest-path demonstrator: stop near the target, otherwise the ghost
/// geodesically closest to it.
pub fn teacher_goal_r2r(graph: &TopoGraph, agent: Point, target_field: &DistanceField<'_, '_>) -> Goal {
    if target_field.distance_near(agent, GHOST_SNAP) <= TEACHER_STOP_RADIUS {
        return Goal::Stop;
    }
    nearest_ghost(graph, target_field).unwrap_or(Goal::Stop)
}

/// Path-fidelity demonstrator state: ordered reference subgoals and which of
/// them the agent has passed.
pub struct SubgoalTracker<'s, 'w> {
    space: &'s ConfigSpace<'w>,
    subgoals: Vec<Point>,
    visited: Vec<bool>,
    fields: Vec<Option<DistanceField<'s, 'w>>>,
}

impl<'s, 'w> SubgoalTracker<'s, 'w> {
    pub fn new(space: &'s ConfigSpace<'w>, subgoals: Vec<Point>) -> Self {
        let n = subgoals.len();
        SubgoalTracker {
            space,
            subgoals,
            visited: vec![false; n],
            fields: (0..n).map(|_| None).collect(),
        }
    }

    pub fn visited(&self) -> &[bool] {
        &self.visited
    }

    fn field(&mut self, i: usize) -> Option<&DistanceField<'s, 'w>> {
        if self.fields[i].is_none() {
            self.fields[i] = self.space.distance_field(self.subgoals[i]).ok();
        }
        self.fields[i].as_ref()
    }

    fn distance(&mut self, i: usize, p: Point) -> f64 {
        match self.field(i) {
            Some(f) => f.distance_near(p, GHOST_SNAP),
            None => self.subgoals[i].distance(p),
        }
    }

    /// Marks every subgoal within reach of the agent, together with all
    /// subgoals before it, as visited.
    pub fn observe(&mut self, agent: Point) {
        let mut last_reached = None;
        for i in 0..self.subgoals.len() {
            if self.distance(i, agent) <= SUBGOAL_VISIT_RADIUS {
                last_reached = Some(i);
            }
        }
        if let Some(k) = last_reached {
            self.visited[..=k].iter_mut().for_each(|v| *v = true);
        }
    }

    /// Index of the first subgoal not yet visited.
    pub fn next_subgoal(&self) -> Option<usize> {
        self.visited.iter().position(|v| !v)
    }
}

/// Path-fidelity demonstrator: updates the visited mask, stops at the end
/// of the reference path, otherwise picks the ghost geodesically closest to
/// the next unvisited subgoal.
pub fn teacher_goal_rxr(graph: &TopoGraph, agent: Point, tracker: &mut SubgoalTracker<'_, '_>) -> Goal {
    tracker.observe(agent);
    let Some(next) = tracker.next_subgoal() else {
        let last = tracker.subgoals.len().saturating_sub(1);
        if tracker.subgoals.is_empty() || tracker.distance(last, agent) <= TEACHER_STOP_RADIUS {
            return Goal::Stop;
        }
        return match tracker.field(last) {
            Some(f) => nearest_ghost(graph, f).unwrap_or(Goal::Stop),
            None => Goal::Stop,
        };
    };
    match tracker.field(next) {
        Some(f) => nearest_ghost(graph, f).unwrap_or(Goal::Stop),
        None => Goal::Stop,
    }
}

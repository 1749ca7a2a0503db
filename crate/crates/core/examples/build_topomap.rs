//! Feeds a few observations into a topological map and prints how each
//! waypoint was absorbed.

use toponav::topomap::{ObservedWaypoint, TopoGraph, UpdateOptions};
use toponav::Point;

fn obs(x: f64, y: f64) -> ObservedWaypoint {
    ObservedWaypoint {
        position: Point::new(x, y),
        descriptor: vec![1.0; 4],
    }
}

fn main() {
    let mut graph = TopoGraph::new();
    let opts = UpdateOptions::default();
    let steps = [
        (Point::new(0.0, 0.0), vec![obs(1.0, 0.0), obs(0.0, 1.0)]),
        (Point::new(1.0, 0.1), vec![obs(2.0, 0.0), obs(0.1, 1.1)]),
        (Point::new(2.0, 0.0), vec![obs(3.0, 0.0), obs(1.0, 0.0)]),
    ];
    for (i, (agent, wps)) in steps.iter().enumerate() {
        // the agent travels to a ghost, which is removed before it arrives
        if let Some(goal) = graph.localize(*agent, opts.gamma).filter(|id| graph.node(*id).is_some_and(|n| n.is_ghost())) {
            graph.delete_ghost(goal).expect("ghost exists");
        }
        let report = graph.update(*agent, &[0.0; 4], wps, i as u32 + 1, opts);
        println!("step {i}: current {:?}, outcomes {:?}", report.current, report.outcomes);
    }
    for n in graph.nodes() {
        println!("{} {:?} at ({:.2}, {:.2}) x{}", n.id, n.kind, n.position.x, n.position.y, n.accum_count);
    }
    for (a, b, len) in graph.edges() {
        println!("edge {a} - {b}: {len:.3}");
    }
    graph.check_invariants().expect("graph invariants hold");
}

//! Scores a small map with the graph-aware planner, picks a goal and extracts
//! the node path to it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toponav::planner::{plan_path, score_graph, select_goal, Goal, PlannerWeights, SelectMode};
use toponav::topomap::{ObservedWaypoint, TopoGraph, UpdateOptions};
use toponav::waypoint::DESCRIPTOR_LEN;
use toponav::world::AgentState;
use toponav::Point;

fn main() -> toponav::Result<()> {
    let mut graph = TopoGraph::new();
    let desc = vec![0.5; DESCRIPTOR_LEN];
    let wp = |x, y| ObservedWaypoint {
        position: Point::new(x, y),
        descriptor: desc.clone(),
    };
    graph.update(Point::new(0.0, 0.0), &desc, &[wp(1.0, 0.0), wp(-1.0, 0.0)], 1, UpdateOptions::default());
    graph.update(Point::new(1.0, 0.0), &desc, &[wp(2.0, 0.0), wp(1.0, 1.0)], 2, UpdateOptions::default());

    let agent = AgentState::new(Point::new(1.0, 0.0), 0.0, 0.1);
    let weights = PlannerWeights::seeded(7);
    let scores = score_graph(&graph, &agent, &weights)?;
    for (c, s) in scores.candidates.iter().zip(&scores.scores) {
        println!("{c:?}: {s:.4}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    match select_goal(&scores, SelectMode::Argmax, &mut rng) {
        Goal::Stop => println!("stop"),
        Goal::Node(id) => {
            let from = graph.current().expect("current node");
            let plan = plan_path(&graph, from, id)?;
            println!("goal {id}: path {:?}, length {:.3}", plan.nodes, plan.length);
        }
    }
    Ok(())
}

//! Drives the controller through a doorway that is offset from the straight
//! line, with and without the tryout escape.

use toponav::controller::{execute_plan, ControlConfig};
use toponav::world::{AgentState, OccupancyGrid, Sliding, DEFAULT_RESOLUTION};
use toponav::Point;

fn main() -> toponav::Result<()> {
    let mut world = OccupancyGrid::room(4.0, 2.0, DEFAULT_RESOLUTION)?;
    // wall at x = 2 with a door between y = 1.3 and y = 1.9
    world.fill_rect(Point::new(2.0, 0.0), Point::new(2.1, 1.3));
    let start = AgentState::new(Point::new(1.0, 1.0), 0.0, 0.1);
    let subgoals = [Point::new(3.0, 1.6)];

    for tryout in [false, true] {
        let cfg = ControlConfig {
            sliding: Sliding::Forbidden,
            tryout,
            max_actions: 200,
        };
        let (end, trace) = execute_plan(&world, &start, &subgoals, &cfg);
        println!(
            "tryout {tryout}: end ({:.2}, {:.2}), {} actions, {} collisions, {} tryout attempts",
            end.position.x,
            end.position.y,
            trace.action_count(),
            trace.collision_count(),
            trace.tryout_events.len()
        );
    }
    Ok(())
}

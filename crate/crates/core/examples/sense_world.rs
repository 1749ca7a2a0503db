//! Builds a small room, casts a panoramic scan and steps the agent into a wall
//! under both sliding regimes.

use toponav::world::{panoramic_scan, step, AgentState, LowLevelAction, OccupancyGrid, Sliding, DEFAULT_RESOLUTION};
use toponav::Point;

fn main() -> toponav::Result<()> {
    let mut world = OccupancyGrid::room(4.0, 3.0, DEFAULT_RESOLUTION)?;
    world.fill_rect(Point::new(2.0, 0.0), Point::new(2.2, 2.0));
    for line in world.to_ascii(2) {
        println!("{line}");
    }

    let agent = AgentState::new(Point::new(1.0, 1.0), 0.0, 0.1);
    let scan = panoramic_scan(&world, &agent, 12, 3.5)?;
    for (h, d) in scan.ray_headings.iter().zip(&scan.distances) {
        println!("ray {h:>5.1} deg -> {d:.3} m");
    }

    // walk diagonally into the wall
    for sliding in [Sliding::Forbidden, Sliding::Allowed] {
        let mut s = AgentState::new(Point::new(1.5, 1.0), 30.0, 0.1);
        let mut blocked = 0;
        for _ in 0..10 {
            let out = step(&world, &s, LowLevelAction::Forward, sliding);
            blocked += out.collided as usize;
            s = out.state;
        }
        println!("{sliding}: ended at ({:.3}, {:.3}), {blocked} blocked moves", s.position.x, s.position.y);
    }
    Ok(())
}

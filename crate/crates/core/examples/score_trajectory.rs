//! Computes the episode metrics for a hand-made trajectory.

use toponav::metrics::{densify, dtw, episode_metrics, ndtw, DistanceMode, EpisodeTrajectory};
use toponav::world::{ConfigSpace, OccupancyGrid, DEFAULT_RESOLUTION};
use toponav::Point;

fn main() -> toponav::Result<()> {
    let world = OccupancyGrid::room(8.0, 3.0, DEFAULT_RESOLUTION)?;
    let reference = densify(&[Point::new(0.5, 1.5), Point::new(6.5, 1.5)], 0.25);
    let walked: Vec<Point> = (0..=20).map(|i| Point::new(0.5 + 0.25 * i as f64, 1.5 + 0.1 * (i % 2) as f64)).collect();

    println!("DTW  {:.4}", dtw(&walked, &reference)?);
    println!("nDTW {:.4}", ndtw(&walked, &reference, 3.0)?);

    let space = ConfigSpace::new(&world, 0.1);
    let goal = space.distance_field(*reference.last().unwrap())?;
    let traj = EpisodeTrajectory {
        positions: &walked,
        reference: &reference,
        actions: walked.len() - 1,
        rotations: 0,
        collisions: 0,
        subgoal_errors: &[0.2],
    };
    for mode in [DistanceMode::Geodesic, DistanceMode::Euclidean] {
        let m = episode_metrics(&traj, &goal, mode)?;
        println!("{mode:?}: {}", serde_json::to_string(&m).expect("metrics serialize"));
    }
    Ok(())
}

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use toponav::geometry::Point;
use toponav::planner::plan_path;
use toponav::topomap::{ObservedWaypoint, TopoGraph, UpdateOptions};
use toponav::world::{ConfigSpace, OccupancyGrid};

fn random_graph(rng: &mut ChaCha8Rng, steps: u32) -> TopoGraph {
    let mut g = TopoGraph::new();
    let mut agent = Point::new(0.0, 0.0);
    for step in 1..=steps {
        agent = agent + random_point(rng, -1.2, 1.2);
        let wps: Vec<ObservedWaypoint> = (0..rng.random_range(1..5))
            .map(|_| ObservedWaypoint {
                position: agent + random_point(rng, -2.5, 2.5),
                descriptor: vec![0.0; 8],
            })
            .collect();
        g.update(agent, &[0.0; 8], &wps, step, UpdateOptions::default());
    }
    g
}

#[test]
fn spatial_matrix_matches_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let steps = rng.random_range(1..12);
        let g = random_graph(&mut rng, steps);
        let sm = g.spatial_matrix();
        let (ids, fw) = floyd_warshall(&g);
        assert_eq!(sm.ids, ids);
        for i in 0..ids.len() {
            for j in 0..ids.len() {
                assert!((sm.dist[i][j] - fw[i][j]).abs() < 1e-9, "{i},{j}: {} vs {}", sm.dist[i][j], fw[i][j]);
            }
        }
    }
}

#[test]
fn plan_path_is_the_best_simple_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        let steps = rng.random_range(1..7);
        let g = random_graph(&mut rng, steps);
        let from = g.current().unwrap();
        for ghost in g.ghosts().map(|n| n.id).collect::<Vec<_>>() {
            let plan = plan_path(&g, from, ghost).unwrap();
            let mut paths = all_simple_paths(&g, from, ghost);
            paths.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            let (best_len, best) = &paths[0];
            assert!((plan.length - best_len).abs() < 1e-9);
            // exactly tied lengths must resolve to the smallest id sequence
            let tied: Vec<_> = paths.iter().filter(|p| (p.0 - best_len).abs() < 1e-12).collect();
            if tied.len() == 1 {
                assert_eq!(&plan.nodes[..], &best[1..]);
            }
            assert_eq!(*plan.nodes.last().unwrap(), ghost);
        }
    }
}

#[test]
fn plan_path_breaks_exact_ties_by_id_sequence() {
    // a square of places with the ghost opposite the start: two equal routes
    let mut g = TopoGraph::new();
    let opts = UpdateOptions::default();
    let at = |x, y| Point::new(x, y);
    let wp = |p| ObservedWaypoint {
        position: p,
        descriptor: vec![0.0; 8],
    };
    g.update(at(0.0, 0.0), &[0.0; 8], &[], 1, opts);
    g.update(at(1.0, 0.0), &[0.0; 8], &[], 2, opts);
    g.update(at(1.0, 1.0), &[0.0; 8], &[wp(at(2.0, 1.0))], 3, opts);
    g.update(at(0.0, 1.0), &[0.0; 8], &[], 4, opts);
    g.update(at(0.0, 0.0), &[0.0; 8], &[], 5, opts);
    let ghost = g.ghosts().next().unwrap().id;
    let start = g.current().unwrap();
    let plan = plan_path(&g, start, ghost).unwrap();
    let paths = all_simple_paths(&g, start, ghost);
    let best = paths
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .unwrap();
    assert_eq!(&plan.nodes[..], &best.1[1..]);
}

/// Cells reachable from `start` by 4-connected flood fill over free cells.
/// Without corner cutting, diagonal moves never join otherwise separate
/// regions, so this must agree with 8-connected geodesics on connectivity.
fn flood(space: &ConfigSpace<'_>, world: &OccupancyGrid, start: (i64, i64)) -> Vec<bool> {
    let w = world.width() as i64;
    let mut seen = vec![false; world.width() * world.height()];
    let mut queue = std::collections::VecDeque::from([start]);
    seen[(start.1 * w + start.0) as usize] = true;
    while let Some((c, r)) = queue.pop_front() {
        for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nc, nr) = (c + dc, r + dr);
            if space.cell_free(nc, nr) && !seen[(nr * w + nc) as usize] {
                seen[(nr * w + nc) as usize] = true;
                queue.push_back((nc, nr));
            }
        }
    }
    seen
}

#[test]
fn geodesic_connectivity_matches_flood_fill() {
    let s = load("rooms.scn");
    let space = ConfigSpace::new(&s.world, 0.10);
    let (w, h) = (s.world.width() as i64, s.world.height() as i64);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 30 {
        let a = (rng.random_range(0..w), rng.random_range(0..h));
        let b = (rng.random_range(0..w), rng.random_range(0..h));
        if !space.cell_free(a.0, a.1) || !space.cell_free(b.0, b.1) {
            continue;
        }
        let pa = s.world.cell_center(a.0 as usize, a.1 as usize);
        let pb = s.world.cell_center(b.0 as usize, b.1 as usize);
        let d = space.geodesic(pa, pb).unwrap();
        let reach = flood(&space, &s.world, a)[(b.1 * w + b.0) as usize];
        assert_eq!(d.is_finite(), reach, "{pa} -> {pb}");
        assert!(d >= pa.distance(pb) - 1e-12);
        checked += 1;
    }
}

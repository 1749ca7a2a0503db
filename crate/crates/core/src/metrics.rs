//! Episode evaluation: path length, navigation error, success, SPL and the
//! DTW-based path fidelity scores, plus controller diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::world::DistanceField;

/// Success threshold on navigation error, meters. Also the NDTW scale.
pub const SUCCESS_RADIUS: f64 = 3.0;

/// Dynamic time warping with Euclidean point cost and the match / insert /
/// delete step set. Both ends are pinned.
pub fn dtw(p: &[Point], r: &[Point]) -> Result<f64> {
    if p.is_empty() || r.is_empty() {
        return Err(Error::EmptyPath);
    }
    let m = r.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for (i, pi) in p.iter().enumerate() {
        for (j, rj) in r.iter().enumerate() {
            let cost = pi.distance(*rj);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { prev[j] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            cur[j] = best + cost;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Normalized DTW, `exp(-dtw / (|R| * d_th))`.
pub fn ndtw(p: &[Point], r: &[Point], d_th: f64) -> Result<f64> {
    Ok((-dtw(p, r)? / (r.len() as f64 * d_th)).exp())
}

/// Sum of consecutive displacements.
pub fn path_length(points: &[Point]) -> f64 {
    points.windows(2).fold(0.0, |acc, w| acc + w[0].distance(w[1]))
}

/// Resamples a polyline at (at most) `spacing` intervals, keeping vertices.
pub fn densify(points: &[Point], spacing: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(points.len());
    let Some(&first) = points.first() else {
        return out;
    };
    out.push(first);
    for w in points.windows(2) {
        let len = w[0].distance(w[1]);
        let n = (len / spacing).ceil().max(1.0) as usize;
        for i in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * (i as f64 / n as f64));
        }
    }
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    Geodesic,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EpisodeResult {
    pub TL: f64,
    pub NE: f64,
    pub SR: f64,
    pub OSR: f64,
    pub SPL: f64,
    pub NDTW: f64,
    pub SDTW: f64,
    pub AT: usize,
    pub RT: usize,
    pub CT: usize,
    /// Mean distance between the agent after each plan execution and the
    /// goal node of that plan; 0 when no plan ran.
    pub SG_NE: f64,
}

/// Inputs for [`episode_metrics`].
pub struct EpisodeTrajectory<'a> {
    /// Agent positions from the start pose onward, one per action.
    pub positions: &'a [Point],
    pub reference: &'a [Point],
    pub actions: usize,
    pub rotations: usize,
    pub collisions: usize,
    pub subgoal_errors: &'a [f64],
}

/// Computes every episode metric. `goal_field` is the geodesic distance
/// field rooted at the goal, used for NE, OSR and the shortest length.
pub fn episode_metrics(
    traj: &EpisodeTrajectory<'_>,
    goal_field: &DistanceField<'_, '_>,
    mode: DistanceMode,
) -> Result<EpisodeResult> {
    let (Some(&start), Some(&end)) = (traj.positions.first(), traj.positions.last()) else {
        return Err(Error::EmptyPath);
    };
    let goal = goal_field.source();
    let dist = |p: Point| -> Result<f64> {
        match mode {
            DistanceMode::Geodesic => goal_field.distance_to(p),
            DistanceMode::Euclidean => Ok(goal.distance(p)),
        }
    };
    let tl = path_length(traj.positions);
    let ne = dist(end)?;
    let sr = if ne < SUCCESS_RADIUS { 1.0 } else { 0.0 };
    let mut closest = f64::INFINITY;
    for &p in traj.positions {
        closest = closest.min(dist(p)?);
    }
    let osr = if closest < SUCCESS_RADIUS { 1.0 } else { 0.0 };
    let shortest = goal_field.distance_to(start)?;
    let spl = if sr > 0.0 {
        let denom = tl.max(shortest);
        if denom > 0.0 {
            sr * shortest / denom
        } else {
            sr
        }
    } else {
        0.0
    };

    let mut walked = traj.positions.to_vec();
    walked.dedup();
    let reference = densify(traj.reference, crate::world::FORWARD_STEP);
    let ndtw_v = if reference.is_empty() {
        0.0
    } else {
        ndtw(&walked, &reference, SUCCESS_RADIUS)?
    };
    let sg_ne = if traj.subgoal_errors.is_empty() {
        0.0
    } else {
        traj.subgoal_errors.iter().sum::<f64>() / traj.subgoal_errors.len() as f64
    };
    Ok(EpisodeResult {
        TL: tl,
        NE: ne,
        SR: sr,
        OSR: osr,
        SPL: spl,
        NDTW: ndtw_v,
        SDTW: sr * ndtw_v,
        AT: traj.actions,
        RT: traj.rotations,
        CT: traj.collisions,
        SG_NE: sg_ne,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{ConfigSpace, OccupancyGrid, DEFAULT_RESOLUTION};

    #[test]
    fn dtw_basics() {
        let a = [Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert_eq!(dtw(&a, &a).unwrap(), 0.0);
        assert_eq!(dtw(&[Point::new(0.0, 0.0)], &[Point::new(3.0, 4.0)]).unwrap(), 5.0);
        assert!(dtw(&[], &a).is_err());
    }

    #[test]
    fn ndtw_single_pair() {
        let v = ndtw(&[Point::new(0.0, 0.0)], &[Point::new(3.0, 0.0)], 3.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn ndtw_decreases_as_point_drifts() {
        let r: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 0.0)).collect();
        let mut last = 1.0 + 1e-12;
        for k in 0..10 {
            let mut p = r.clone();
            p[2].y = k as f64 * 0.2;
            let v = ndtw(&p, &r, 3.0).unwrap();
            assert!(v < last, "k={k}");
            last = v;
        }
    }

    #[test]
    fn densify_keeps_length() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 0.6)];
        let d = densify(&pts, 0.25);
        assert!((path_length(&d) - 1.6).abs() < 1e-12);
        assert!(d.windows(2).all(|w| w[0].distance(w[1]) <= 0.25 + 1e-12));
    }

    #[test]
    fn detour_halves_spl() {
        let w = OccupancyGrid::room(12.0, 4.0, DEFAULT_RESOLUTION).unwrap();
        let cs = ConfigSpace::new(&w, 0.18);
        let start = Point::new(1.0, 2.0);
        let goal = Point::new(5.0, 2.0);
        let field = cs.distance_field(goal).unwrap();
        let l = field.distance_to(start).unwrap();
        // overshoot and come back: p = (l + 2) + (l - 2) = 2l
        let positions = vec![start, start + Point::new(l + 2.0, 0.0), goal];
        let traj = EpisodeTrajectory {
            positions: &positions,
            reference: &[start, goal],
            actions: 0,
            rotations: 0,
            collisions: 0,
            subgoal_errors: &[],
        };
        let r = episode_metrics(&traj, &field, DistanceMode::Geodesic).unwrap();
        assert_eq!(r.SR, 1.0);
        assert!((r.SPL - 0.5).abs() < 1e-9, "{}", r.SPL);
    }

    #[test]
    fn failure_zeroes_success_metrics() {
        let w = OccupancyGrid::room(12.0, 4.0, DEFAULT_RESOLUTION).unwrap();
        let cs = ConfigSpace::new(&w, 0.18);
        let start = Point::new(1.0, 2.0);
        let goal = Point::new(10.0, 2.0);
        let field = cs.distance_field(goal).unwrap();
        let positions = vec![start, Point::new(1.5, 2.0)];
        let traj = EpisodeTrajectory {
            positions: &positions,
            reference: &[start, goal],
            actions: 2,
            rotations: 0,
            collisions: 0,
            subgoal_errors: &[],
        };
        let r = episode_metrics(&traj, &field, DistanceMode::Geodesic).unwrap();
        assert_eq!((r.SR, r.OSR, r.SPL, r.SDTW), (0.0, 0.0, 0.0, 0.0));
        assert!(r.NDTW > 0.0 && r.NDTW < 1.0);
    }
}

//! Geometric waypoint predictor.
//!
//! A polar accessibility heatmap is built from a range scan, and waypoints
//! are drawn from it by greedy non-maximum suppression. Each waypoint carries
//! a descriptor: the free-space histogram of the 30° view it falls in.

use serde::{Deserialize, Serialize};

use crate::geometry::{angular_distance, heading_vector, normalize_heading, Point};
use crate::world::{AgentState, OccupancyGrid, RangeScan};

/// Buckets in a view descriptor histogram.
pub const DESCRIPTOR_LEN: usize = 8;
/// Views in the panorama a waypoint descriptor is drawn from.
pub const PANORAMA_VIEWS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapConfig {
    pub angular_bins: usize,
    pub radial_bins: usize,
    /// Radial bin size, meters.
    pub radial_step: f64,
    pub chassis_radius: f64,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        HeatmapConfig {
            angular_bins: 120,
            radial_bins: 12,
            radial_step: 0.25,
            chassis_radius: 0.18,
        }
    }
}

impl HeatmapConfig {
    pub fn radial_extent(&self) -> f64 {
        self.radial_bins as f64 * self.radial_step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarHeatmap {
    pub angular_bins: usize,
    pub radial_bins: usize,
    pub radial_step: f64,
    /// Angular-major scores in [0, 1]: `scores[a * radial_bins + r]`.
    pub scores: Vec<f64>,
}

impl PolarHeatmap {
    pub fn zeros(angular_bins: usize, radial_bins: usize, radial_step: f64) -> Self {
        PolarHeatmap {
            angular_bins,
            radial_bins,
            radial_step,
            scores: vec![0.0; angular_bins * radial_bins],
        }
    }

    pub fn score(&self, a: usize, r: usize) -> f64 {
        self.scores[a * self.radial_bins + r]
    }

    pub fn set(&mut self, a: usize, r: usize, v: f64) {
        self.scores[a * self.radial_bins + r] = v;
    }

    pub fn angular_step(&self) -> f64 {
        360.0 / self.angular_bins as f64
    }

    /// Heading of bin `a` relative to the scan's first ray, degrees.
    pub fn bin_heading(&self, a: usize) -> f64 {
        a as f64 * self.angular_step()
    }

    pub fn bin_range(&self, r: usize) -> f64 {
        (r as f64 + 0.5) * self.radial_step
    }
}

/// Scan distance of the ray nearest to a heading relative to the first ray.
fn ray_distance_at(scan: &RangeScan, rel_heading: f64) -> f64 {
    let n = scan.len();
    let spacing = 360.0 / n as f64;
    let i = (normalize_heading(rel_heading) / spacing).round() as usize % n;
    scan.distances[i]
}

/// Scores each polar cell by straight-line accessibility: 1 when the cell
/// center is at least one chassis diameter short of the obstacle along its
/// heading, falling linearly to 0 at the obstacle.
pub fn build_heatmap(scan: &RangeScan, config: &HeatmapConfig) -> PolarHeatmap {
    let mut map = PolarHeatmap::zeros(config.angular_bins, config.radial_bins, config.radial_step);
    let margin = 2.0 * config.chassis_radius;
    for a in 0..map.angular_bins {
        let free = ray_distance_at(scan, map.bin_heading(a));
        for r in 0..map.radial_bins {
            let range = map.bin_range(r);
            let score = if margin > 0.0 {
                ((free - range) / margin).clamp(0.0, 1.0)
            } else if range < free {
                1.0
            } else {
                0.0
            };
            map.set(a, r, score);
        }
    }
    map
}

/// A heatmap cell selected by NMS, relative to the scan's first ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapPeak {
    pub angular_bin: usize,
    pub radial_bin: usize,
    pub rel_heading: f64,
    pub distance: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsWindow {
    pub degrees: f64,
    pub meters: f64,
}

impl Default for NmsWindow {
    fn default() -> Self {
        NmsWindow {
            degrees: 30.0,
            meters: 0.5,
        }
    }
}

/// Rank of a relative heading for tie-breaking: straight ahead first, then
/// increasing deviation with left (counterclockwise) before right.
fn heading_rank(rel_heading: f64) -> (u64, bool) {
    let d = crate::geometry::wrap_delta(rel_heading);
    ((d.abs() * 1e6).round() as u64, d < 0.0)
}

/// Greedy NMS: repeatedly emit the best remaining cell and suppress every
/// cell within the angular × radial window around it. Stops after `k`
/// peaks or when no positive score remains.
///
/// Equal scores prefer the farther cell, then the heading closest to
/// straight ahead (left before right).
pub fn predict_waypoints(heatmap: &PolarHeatmap, k: usize, window: NmsWindow) -> Vec<HeatmapPeak> {
    let mut order: Vec<(usize, usize)> = (0..heatmap.angular_bins)
        .flat_map(|a| (0..heatmap.radial_bins).map(move |r| (a, r)))
        .filter(|&(a, r)| heatmap.score(a, r) > 0.0)
        .collect();
    order.sort_by(|&(a1, r1), &(a2, r2)| {
        heatmap
            .score(a2, r2)
            .total_cmp(&heatmap.score(a1, r1))
            .then(r2.cmp(&r1))
            .then(heading_rank(heatmap.bin_heading(a1)).cmp(&heading_rank(heatmap.bin_heading(a2))))
    });

    let mut suppressed = vec![false; heatmap.scores.len()];
    let mut peaks = Vec::new();
    for (a, r) in order {
        if peaks.len() >= k {
            break;
        }
        if suppressed[a * heatmap.radial_bins + r] {
            continue;
        }
        let heading = heatmap.bin_heading(a);
        let range = heatmap.bin_range(r);
        peaks.push(HeatmapPeak {
            angular_bin: a,
            radial_bin: r,
            rel_heading: heading,
            distance: range,
            score: heatmap.score(a, r),
        });
        for a2 in 0..heatmap.angular_bins {
            if angular_distance(heatmap.bin_heading(a2), heading) >= window.degrees {
                continue;
            }
            for r2 in 0..heatmap.radial_bins {
                if (heatmap.bin_range(r2) - range).abs() < window.meters {
                    suppressed[a2 * heatmap.radial_bins + r2] = true;
                }
            }
        }
    }
    peaks
}

/// Normalized histogram of scan distances (as a fraction of max range)
/// over the rays of one 30° view.
pub fn view_descriptor(scan: &RangeScan, view: usize) -> Vec<f64> {
    let n = scan.len();
    let width = 360.0 / PANORAMA_VIEWS as f64;
    let spacing = 360.0 / n as f64;
    let mut hist = vec![0.0; DESCRIPTOR_LEN];
    let mut count = 0usize;
    for i in 0..n {
        let rel = i as f64 * spacing;
        if (rel / width).floor() as usize % PANORAMA_VIEWS != view {
            continue;
        }
        let frac = (scan.distances[i] / scan.max_range).clamp(0.0, 1.0);
        let bucket = ((frac * DESCRIPTOR_LEN as f64) as usize).min(DESCRIPTOR_LEN - 1);
        hist[bucket] += 1.0;
        count += 1;
    }
    if count > 0 {
        for h in &mut hist {
            *h /= count as f64;
        }
    }
    hist
}

/// Mean of the twelve view descriptors; the current node's representation.
pub fn panorama_descriptor(scan: &RangeScan) -> Vec<f64> {
    let mut mean = vec![0.0; DESCRIPTOR_LEN];
    for v in 0..PANORAMA_VIEWS {
        for (m, x) in mean.iter_mut().zip(view_descriptor(scan, v)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= PANORAMA_VIEWS as f64;
    }
    mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    /// Heading relative to the agent, degrees in [0, 360).
    pub rel_heading: f64,
    /// Distance from the agent, meters.
    pub distance: f64,
    pub descriptor: Vec<f64>,
    /// Decision-loop index at which it was predicted.
    pub source_step: u32,
}

impl Waypoint {
    pub fn world_position(&self, agent: &AgentState) -> Point {
        agent.position + heading_vector(agent.heading + self.rel_heading) * self.distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub heatmap: HeatmapConfig,
    pub k: usize,
    pub window: NmsWindow,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            heatmap: HeatmapConfig::default(),
            k: 5,
            window: NmsWindow::default(),
        }
    }
}

/// Scan → heatmap → NMS → waypoints with descriptors attached.
pub fn predict_from_scan(scan: &RangeScan, config: &PredictorConfig, step: u32) -> Vec<Waypoint> {
    let heatmap = build_heatmap(scan, &config.heatmap);
    let width = 360.0 / PANORAMA_VIEWS as f64;
    predict_waypoints(&heatmap, config.k, config.window)
        .into_iter()
        .map(|p| {
            let view = (normalize_heading(p.rel_heading) / width).floor() as usize % PANORAMA_VIEWS;
            Waypoint {
                rel_heading: p.rel_heading,
                distance: p.distance,
                descriptor: view_descriptor(scan, view),
                source_step: step,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointEval {
    pub count_diff: usize,
    pub percent_open: f64,
    pub chamfer: f64,
    pub hausdorff: f64,
}

/// Mean over `from` of the distance to the nearest point of `to`, and the
/// max of the same.
fn directed(from: &[Point], to: &[Point]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for p in from {
        let nearest = to.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min);
        sum += nearest;
        max = max.max(nearest);
    }
    (sum / from.len() as f64, max)
}

/// Symmetric Chamfer (mean of the two directed means) and Hausdorff distance.
pub fn chamfer_hausdorff(a: &[Point], b: &[Point]) -> (f64, f64) {
    if a.is_empty() || b.is_empty() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let (mean_ab, max_ab) = directed(a, b);
    let (mean_ba, max_ba) = directed(b, a);
    ((mean_ab + mean_ba) / 2.0, max_ab.max(max_ba))
}

/// Compares predicted waypoints against reference ones. A predicted waypoint
/// counts as open when the chassis can sweep straight to it from `pose`.
pub fn evaluate_waypoints(
    predicted: &[Point],
    reference: &[Point],
    world: &OccupancyGrid,
    pose: &AgentState,
) -> WaypointEval {
    let count_diff = predicted.len().abs_diff(reference.len());
    let open = predicted
        .iter()
        .filter(|&&p| world.segment_free(pose.position, p, pose.chassis_radius))
        .count();
    let percent_open = if predicted.is_empty() {
        0.0
    } else {
        open as f64 / predicted.len() as f64
    };
    let (chamfer, hausdorff) = chamfer_hausdorff(predicted, reference);
    WaypointEval {
        count_diff,
        percent_open,
        chamfer,
        hausdorff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{panoramic_scan, OccupancyGrid, DEFAULT_RESOLUTION};

    fn scan_at(world: &OccupancyGrid, p: Point, heading: f64, max_range: f64) -> RangeScan {
        let s = AgentState::new(p, heading, 0.18);
        panoramic_scan(world, &s, 120, max_range).unwrap()
    }

    #[test]
    fn open_scan_is_fully_accessible() {
        let w = OccupancyGrid::room(12.0, 12.0, DEFAULT_RESOLUTION).unwrap();
        let scan = scan_at(&w, Point::new(6.0, 6.0), 0.0, 3.5);
        let map = build_heatmap(&scan, &HeatmapConfig::default());
        assert!(map.scores.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn wall_blocks_sector() {
        let mut w = OccupancyGrid::room(12.0, 12.0, DEFAULT_RESOLUTION).unwrap();
        w.fill_rect(Point::new(7.0, 0.0), Point::new(7.5, 12.0));
        let scan = scan_at(&w, Point::new(6.0, 6.0), 0.0, 3.5);
        let cfg = HeatmapConfig::default();
        let map = build_heatmap(&scan, &cfg);
        // brute-force oracle per cell along heading 0: the wall face is 1 m away
        for r in 0..map.radial_bins {
            let range = map.bin_range(r);
            let expected = ((1.0 - range) / (2.0 * cfg.chassis_radius)).clamp(0.0, 1.0);
            assert!((map.score(0, r) - expected).abs() < 1e-9, "r={r}");
        }
        assert_eq!(map.score(0, 4), 0.0);
    }

    #[test]
    fn tiny_range_gives_zero_heatmap() {
        let w = OccupancyGrid::room(12.0, 12.0, DEFAULT_RESOLUTION).unwrap();
        let scan = scan_at(&w, Point::new(6.0, 6.0), 0.0, 0.1);
        let map = build_heatmap(&scan, &HeatmapConfig::default());
        assert!(map.scores.iter().all(|&s| s == 0.0));
        assert!(predict_waypoints(&map, 5, NmsWindow::default()).is_empty());
    }

    #[test]
    fn single_cell_heatmap() {
        let mut map = PolarHeatmap::zeros(120, 12, 0.25);
        map.set(17, 5, 0.4);
        let peaks = predict_waypoints(&map, 5, NmsWindow::default());
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks[0].angular_bin, peaks[0].radial_bin), (17, 5));
        assert_eq!(peaks[0].rel_heading, 51.0);
        assert_eq!(peaks[0].distance, 1.375);
    }

    #[test]
    fn flat_heatmap_fans_out_ahead_first() {
        let mut map = PolarHeatmap::zeros(120, 12, 0.25);
        map.scores.fill(1.0);
        let peaks = predict_waypoints(&map, 5, NmsWindow::default());
        let headings: Vec<f64> = peaks.iter().map(|p| p.rel_heading).collect();
        assert_eq!(headings, vec![0.0, 30.0, 330.0, 60.0, 300.0]);
        assert!(peaks.iter().all(|p| p.radial_bin == 11));
    }

    #[test]
    fn chamfer_singletons() {
        let (c, h) = chamfer_hausdorff(&[Point::new(0.0, 0.0)], &[Point::new(1.0, 0.0)]);
        assert_eq!((c, h), (1.0, 1.0));
        let pts = [Point::new(0.0, 1.0), Point::new(2.0, 3.0)];
        assert_eq!(chamfer_hausdorff(&pts, &pts), (0.0, 0.0));
        assert_eq!(chamfer_hausdorff(&[], &pts).0, f64::INFINITY);
    }

    #[test]
    fn descriptor_is_normalized() {
        let w = OccupancyGrid::room(6.0, 6.0, DEFAULT_RESOLUTION).unwrap();
        let scan = scan_at(&w, Point::new(2.0, 3.0), 0.0, 3.5);
        for v in 0..PANORAMA_VIEWS {
            let d = view_descriptor(&scan, v);
            assert_eq!(d.len(), DESCRIPTOR_LEN);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let p = panorama_descriptor(&scan);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_reports_infinite_distances() {
        let w = OccupancyGrid::room(6.0, 6.0, DEFAULT_RESOLUTION).unwrap();
        let pose = AgentState::new(Point::new(3.0, 3.0), 0.0, 0.18);
        let e = evaluate_waypoints(&[], &[Point::new(1.0, 1.0)], &w, &pose);
        assert_eq!(e.count_diff, 1);
        assert!(e.chamfer.is_infinite() && e.hausdorff.is_infinite());
    }
}

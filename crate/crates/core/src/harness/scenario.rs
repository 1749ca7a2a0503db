//! Scenario files: a world grid, its embodiment regime and a list of
//! episodes. See `docs/FORMATS.md` for the grammar.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::world::{OccupancyGrid, Sliding, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub sliding: Sliding,
    pub chassis_radius: f64,
    pub max_goal_predictions: u32,
}

impl Default for Regime {
    fn default() -> Self {
        Regime {
            sliding: Sliding::Allowed,
            chassis_radius: 0.10,
            max_goal_predictions: crate::planner::MAX_PREDICTIONS_R2R,
        }
    }
}

/// Reference waypoints annotated for one agent pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSet {
    pub pose: Pose,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub start: Pose,
    pub goal: Point,
    /// Reference path, beginning at the start position.
    pub reference: Vec<Point>,
    pub waypoint_sets: Vec<WaypointSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub world: OccupancyGrid,
    /// Grid cells per ASCII character.
    pub scale: usize,
    pub regime: Regime,
    pub episodes: Vec<Episode>,
}

fn parse_f64(s: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{what}: {s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what}: {s:?} is not finite"))
    }
}

fn parse_point(s: &str, what: &str) -> std::result::Result<Point, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts[..] {
        [x, y] => Ok(Point::new(parse_f64(x, what)?, parse_f64(y, what)?)),
        _ => Err(format!("{what}: expected `x,y`, got {s:?}")),
    }
}

fn parse_pose(s: &str, what: &str) -> std::result::Result<Pose, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts[..] {
        [x, y, h] => Ok(Pose {
            position: Point::new(parse_f64(x, what)?, parse_f64(y, what)?),
            heading: parse_f64(h, what)?,
        }),
        _ => Err(format!("{what}: expected `x,y,heading`, got {s:?}")),
    }
}

fn parse_points(s: &str, what: &str) -> std::result::Result<Vec<Point>, String> {
    s.split(';')
        .filter(|p| !p.is_empty())
        .map(|p| parse_point(p, what))
        .collect()
}

/// Splits `kind key:value key:value ...` into its fields, rejecting keys not
/// in `allowed` and duplicates.
fn fields<'a>(
    rest: &'a str,
    allowed: &[&str],
) -> std::result::Result<std::collections::BTreeMap<&'a str, &'a str>, String> {
    let mut out = std::collections::BTreeMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once(':')
            .ok_or_else(|| format!("field {tok:?} is not `key:value`"))?;
        if !allowed.contains(&k) {
            return Err(format!("unknown field {k:?} (expected one of {})", allowed.join(", ")));
        }
        if out.insert(k, v).is_some() {
            return Err(format!("duplicate field {k:?}"));
        }
    }
    Ok(out)
}

fn require<'a>(
    f: &std::collections::BTreeMap<&str, &'a str>,
    key: &str,
) -> std::result::Result<&'a str, String> {
    f.get(key).copied().ok_or_else(|| format!("missing field {key:?}"))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut name = None;
        let mut resolution = DEFAULT_RESOLUTION;
        let mut scale = 1usize;
        let mut regime = Regime::default();
        let mut grid_rows: Vec<(usize, String)> = Vec::new();
        let mut grid_line = None;
        let mut episodes: Vec<Episode> = Vec::new();
        let mut in_grid = false;

        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if in_grid {
                if line == "end" {
                    in_grid = false;
                } else {
                    grid_rows.push((n, line.to_string()));
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "grid:" {
                if grid_line.is_some() {
                    return Err(err(n, "second grid block".into()));
                }
                grid_line = Some(n);
                in_grid = true;
                continue;
            }
            if let Some(rest) = line.strip_prefix("episode ") {
                let f = fields(rest, &["id", "start", "goal", "reference"]).map_err(|m| err(n, m))?;
                let id = require(&f, "id").map_err(|m| err(n, m))?.to_string();
                let start = require(&f, "start")
                    .and_then(|s| parse_pose(s, "start"))
                    .map_err(|m| err(n, m))?;
                let goal = require(&f, "goal")
                    .and_then(|s| parse_point(s, "goal"))
                    .map_err(|m| err(n, m))?;
                let reference = require(&f, "reference")
                    .and_then(|s| parse_points(s, "reference"))
                    .map_err(|m| err(n, m))?;
                episodes.push(Episode {
                    id,
                    start,
                    goal,
                    reference,
                    waypoint_sets: Vec::new(),
                });
                continue;
            }
            if let Some(rest) = line.strip_prefix("waypoints ") {
                let f = fields(rest, &["episode", "pose", "points"]).map_err(|m| err(n, m))?;
                let id = require(&f, "episode").map_err(|m| err(n, m))?;
                let pose = require(&f, "pose")
                    .and_then(|s| parse_pose(s, "pose"))
                    .map_err(|m| err(n, m))?;
                let points = require(&f, "points")
                    .and_then(|s| parse_points(s, "points"))
                    .map_err(|m| err(n, m))?;
                let ep = episodes
                    .iter_mut()
                    .find(|e| e.id == id)
                    .ok_or_else(|| err(n, format!("waypoints for unknown episode {id:?}")))?;
                ep.waypoint_sets.push(WaypointSet { pose, points });
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err(n, format!("unrecognized line {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "resolution" => resolution = parse_f64(value, "resolution").map_err(|m| err(n, m))?,
                "scale" => {
                    scale = value
                        .parse()
                        .map_err(|_| err(n, format!("scale: {value:?} is not a positive integer")))?
                }
                "sliding" => regime.sliding = value.parse().map_err(|m| err(n, m))?,
                "chassis_radius" => {
                    regime.chassis_radius = parse_f64(value, "chassis_radius").map_err(|m| err(n, m))?
                }
                "max_goal_predictions" => {
                    regime.max_goal_predictions = value
                        .parse()
                        .map_err(|_| err(n, format!("max_goal_predictions: {value:?} is not a count")))?
                }
                other => return Err(err(n, format!("unknown field {other:?}"))),
            }
        }
        if in_grid {
            return Err(err(text.lines().count(), "grid block not closed with `end`".into()));
        }
        let grid_start = grid_line.ok_or_else(|| err(0, "no grid block".into()))?;
        let rows: Vec<&str> = grid_rows.iter().map(|(_, r)| r.as_str()).collect();
        if let Some((_, first)) = grid_rows.first() {
            let want = first.chars().count();
            if let Some((ln, r)) = grid_rows.iter().find(|(_, r)| r.chars().count() != want) {
                return Err(err(
                    *ln,
                    format!("grid row has length {}, expected {want}", r.chars().count()),
                ));
            }
        }
        let world = OccupancyGrid::from_ascii(&rows, resolution, scale).map_err(|e| err(grid_start, e.to_string()))?;
        let scenario = Scenario {
            name: name.unwrap_or_else(|| {
                source
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            }),
            world,
            scale,
            regime,
            episodes,
        };
        scenario
            .validate()
            .map_err(|m| err(0, m))?;
        Ok(scenario)
    }

    /// Checks episode-level invariants against the world and regime.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let r = self.regime.chassis_radius;
        if !(r > 0.0) {
            return Err(format!("chassis_radius must be positive, got {r}"));
        }
        if self.regime.max_goal_predictions == 0 {
            return Err("max_goal_predictions must be at least 1".into());
        }
        let mut ids = BTreeSet::new();
        for ep in &self.episodes {
            if !ids.insert(ep.id.as_str()) {
                return Err(format!("duplicate episode id {:?}", ep.id));
            }
            if self.world.disc_collides(ep.start.position, r) {
                return Err(format!("episode {}: start occluded", ep.id));
            }
            if self.world.disc_collides(ep.goal, r) {
                return Err(format!("episode {}: goal occluded", ep.id));
            }
            match ep.reference.first() {
                None => return Err(format!("episode {}: empty reference path", ep.id)),
                Some(p) if p.distance(ep.start.position) > 1e-9 => {
                    return Err(format!("episode {}: reference path does not begin at start", ep.id))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name: {}", self.name);
        let _ = writeln!(out, "resolution: {}", self.world.resolution());
        let _ = writeln!(out, "scale: {}", self.scale);
        let _ = writeln!(out, "sliding: {}", self.regime.sliding);
        let _ = writeln!(out, "chassis_radius: {}", self.regime.chassis_radius);
        let _ = writeln!(out, "max_goal_predictions: {}", self.regime.max_goal_predictions);
        out.push_str("grid:\n");
        for row in self.world.to_ascii(self.scale) {
            out.push_str(&row);
            out.push('\n');
        }
        out.push_str("end\n");
        let pt = |p: &Point| format!("{},{}", p.x, p.y);
        let pose = |p: &Pose| format!("{},{},{}", p.position.x, p.position.y, p.heading);
        let pts = |v: &[Point]| v.iter().map(pt).collect::<Vec<_>>().join(";");
        for ep in &self.episodes {
            let _ = writeln!(
                out,
                "episode id:{} start:{} goal:{} reference:{}",
                ep.id,
                pose(&ep.start),
                pt(&ep.goal),
                pts(&ep.reference)
            );
        }
        for ep in &self.episodes {
            for set in &ep.waypoint_sets {
                let _ = writeln!(
                    out,
                    "waypoints episode:{} pose:{} points:{}",
                    ep.id,
                    pose(&set.pose),
                    pts(&set.points)
                );
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
name: mini
resolution: 0.05
scale: 5
sliding: forbidden
chassis_radius: 0.1
max_goal_predictions: 25
grid:
#####
#...#
#...#
#...#
#####
end
episode id:a start:0.5,0.5,0 goal:0.75,0.75 reference:0.5,0.5;0.75,0.75
waypoints episode:a pose:0.5,0.5,90 points:0.75,0.5;0.5,0.75
";

    #[test]
    fn round_trip() {
        let s = Scenario::parse(MINIMAL, Path::new("mini.scn")).unwrap();
        assert_eq!(s.world.width(), 25);
        assert_eq!(s.regime.sliding, Sliding::Forbidden);
        assert_eq!(s.episodes[0].waypoint_sets.len(), 1);
        let text = s.to_text();
        let back = Scenario::parse(&text, Path::new("mini.scn")).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn ragged_row_is_named() {
        let bad = MINIMAL.replace("#...#\n#...#\n#...#", "#...#\n#..#\n#...#");
        let e = Scenario::parse(&bad, Path::new("bad.scn")).unwrap_err();
        let msg = e.to_string();
        assert!(msg.starts_with("bad.scn:10:"), "{msg}");
        assert!(msg.contains("length 4"), "{msg}");
    }

    #[test]
    fn occluded_start() {
        let bad = MINIMAL.replace("start:0.5,0.5,0", "start:0.1,0.1,0").replace("reference:0.5,0.5;", "reference:0.1,0.1;");
        let e = Scenario::parse(&bad, Path::new("bad.scn")).unwrap_err();
        assert!(e.to_string().contains("start occluded"), "{e}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = MINIMAL.replace("scale: 5", "scale: 5\ncolour: red");
        assert!(Scenario::parse(&bad, Path::new("x")).unwrap_err().to_string().contains("unknown field"));
        let bad = MINIMAL.replace("episode id:a ", "episode id:a speed:3 ");
        assert!(Scenario::parse(&bad, Path::new("x")).unwrap_err().to_string().contains("unknown field"));
    }

    #[test]
    fn reference_must_start_at_start() {
        let bad = MINIMAL.replace("reference:0.5,0.5;", "reference:0.6,0.5;");
        assert!(Scenario::parse(&bad, Path::new("x")).is_err());
    }
}

//! Continuous 2D environment over an occupancy grid.
//!
//! The grid is stored row-major with row 0 at the bottom (lowest y). Cell
//! `(col, row)` covers `[origin.x + col*res, origin.x + (col+1)*res)` and the
//! analogous y interval. Anything outside the grid counts as obstacle.

mod geodesic;

pub use geodesic::{geodesic_distance, ConfigSpace, DistanceField};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{heading_vector, normalize_heading, Point};

/// Forward displacement of one FORWARD action, meters.
pub const FORWARD_STEP: f64 = 0.25;
/// Rotation of one ROTATE action, degrees.
pub const ROTATE_STEP: f64 = 15.0;
/// Default grid resolution, meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    /// Builds a grid from row-major cells (row 0 = bottom). The outermost
    /// ring of cells must be obstacles.
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point,
        cells: Vec<bool>,
    ) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if cells.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        let grid = OccupancyGrid {
            width,
            height,
            resolution,
            origin,
            cells,
        };
        for col in 0..width {
            if !grid.cell(col, 0) || !grid.cell(col, height - 1) {
                return Err(Error::InvalidGrid(format!(
                    "boundary cell in column {col} is free; the world must be closed"
                )));
            }
        }
        for row in 0..height {
            if !grid.cell(0, row) || !grid.cell(width - 1, row) {
                return Err(Error::InvalidGrid(format!(
                    "boundary cell in row {row} is free; the world must be closed"
                )));
            }
        }
        Ok(grid)
    }

    /// Parses ASCII rows, top row first, `#` obstacle and `.` free. Each
    /// character expands to a `scale`×`scale` block of cells.
    pub fn from_ascii<S: AsRef<str>>(rows: &[S], resolution: f64, scale: usize) -> Result<Self> {
        if scale == 0 {
            return Err(Error::InvalidGrid("scale must be at least 1".into()));
        }
        let Some(first) = rows.first() else {
            return Err(Error::InvalidGrid("no grid rows".into()));
        };
        let cols = first.as_ref().chars().count();
        let mut parsed = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            let n = row.chars().count();
            if n != cols {
                return Err(Error::InvalidGrid(format!(
                    "grid row {} has length {n}, expected {cols}",
                    i + 1
                )));
            }
            let mut line = Vec::with_capacity(n);
            for c in row.chars() {
                match c {
                    '#' => line.push(true),
                    '.' => line.push(false),
                    other => {
                        return Err(Error::InvalidGrid(format!(
                            "grid row {} has invalid character {other:?}",
                            i + 1
                        )))
                    }
                }
            }
            parsed.push(line);
        }
        let width = cols * scale;
        let height = rows.len() * scale;
        let mut cells = vec![false; width * height];
        for (i, line) in parsed.iter().enumerate() {
            // top row of the text is the highest grid row
            let block_row = rows.len() - 1 - i;
            for (j, &occ) in line.iter().enumerate() {
                for dr in 0..scale {
                    for dc in 0..scale {
                        let r = block_row * scale + dr;
                        let c = j * scale + dc;
                        cells[r * width + c] = occ;
                    }
                }
            }
        }
        Self::new(width, height, resolution, Point::new(0.0, 0.0), cells)
    }

    /// Renders the grid back to ASCII rows (top first), sampling one cell per
    /// `scale`×`scale` block. Inverse of [`from_ascii`](Self::from_ascii) for
    /// grids built at that scale.
    pub fn to_ascii(&self, scale: usize) -> Vec<String> {
        let scale = scale.max(1);
        let rows = self.height / scale;
        let cols = self.width / scale;
        (0..rows)
            .rev()
            .map(|br| {
                (0..cols)
                    .map(|bc| if self.cell(bc * scale, br * scale) { '#' } else { '.' })
                    .collect()
            })
            .collect()
    }

    /// Closed `width_m`×`height_m` room with a one-cell boundary wall.
    pub fn room(width_m: f64, height_m: f64, resolution: f64) -> Result<Self> {
        let width = (width_m / resolution).round() as usize;
        let height = (height_m / resolution).round() as usize;
        let mut cells = vec![false; width * height];
        for row in 0..height {
            for col in 0..width {
                if row == 0 || col == 0 || row + 1 == height || col + 1 == width {
                    cells[row * width + col] = true;
                }
            }
        }
        Self::new(width, height, resolution, Point::new(0.0, 0.0), cells)
    }

    /// Marks every cell whose center lies inside the axis-aligned rectangle.
    pub fn fill_rect(&mut self, min: Point, max: Point) {
        for row in 0..self.height {
            for col in 0..self.width {
                let c = self.cell_center(col, row);
                if c.x >= min.x && c.x <= max.x && c.y >= min.y && c.y <= max.y {
                    self.cells[row * self.width + col] = true;
                }
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Occupancy of a cell given by signed indices; outside is occupied.
    pub fn is_occupied(&self, col: i64, row: i64) -> bool {
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return true;
        }
        self.cells[row as usize * self.width + col as usize]
    }

    fn cell(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn cell_of(&self, p: Point) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    /// True if the point itself lies in an obstacle cell.
    pub fn point_occupied(&self, p: Point) -> bool {
        let (c, r) = self.cell_of(p);
        self.is_occupied(c, r)
    }

    /// True if a disc of radius `r` at `center` overlaps any obstacle cell.
    /// Touching a cell boundary is not an overlap.
    pub fn disc_collides(&self, center: Point, r: f64) -> bool {
        let res = self.resolution;
        let c0 = ((center.x - r - self.origin.x) / res).floor() as i64;
        let c1 = ((center.x + r - self.origin.x) / res).floor() as i64;
        let r0 = ((center.y - r - self.origin.y) / res).floor() as i64;
        let r1 = ((center.y + r - self.origin.y) / res).floor() as i64;
        let r2 = r * r;
        for row in r0..=r1 {
            for col in c0..=c1 {
                if !self.is_occupied(col, row) {
                    continue;
                }
                let x0 = self.origin.x + col as f64 * res;
                let y0 = self.origin.y + row as f64 * res;
                let dx = (x0 - center.x).max(center.x - (x0 + res)).max(0.0);
                let dy = (y0 - center.y).max(center.y - (y0 + res)).max(0.0);
                if dx * dx + dy * dy < r2 {
                    return true;
                }
            }
        }
        false
    }

    /// Sweeps a disc from `a` to `b`, sampling every half cell (endpoints
    /// included). True if no sample collides.
    pub fn segment_free(&self, a: Point, b: Point, r: f64) -> bool {
        let len = a.distance(b);
        let n = (len / (self.resolution * 0.5)).ceil().max(1.0) as usize;
        (0..=n).all(|i| {
            let t = i as f64 / n as f64;
            !self.disc_collides(a + (b - a) * t, r)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Point,
    /// Degrees in [0, 360), counterclockwise from +x.
    pub heading: f64,
    pub chassis_radius: f64,
}

impl AgentState {
    pub fn new(position: Point, heading: f64, chassis_radius: f64) -> Self {
        AgentState {
            position,
            heading: normalize_heading(heading),
            chassis_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LowLevelAction {
    Forward,
    RotateLeft,
    RotateRight,
    Stop,
}

impl LowLevelAction {
    pub fn is_rotation(self) -> bool {
        matches!(self, LowLevelAction::RotateLeft | LowLevelAction::RotateRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sliding {
    Allowed,
    Forbidden,
}

impl std::str::FromStr for Sliding {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "allowed" => Ok(Sliding::Allowed),
            "forbidden" => Ok(Sliding::Forbidden),
            other => Err(format!("unknown sliding mode {other:?} (allowed|forbidden)")),
        }
    }
}

impl std::fmt::Display for Sliding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sliding::Allowed => "allowed",
            Sliding::Forbidden => "forbidden",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeScan {
    /// Absolute ray headings, degrees.
    pub ray_headings: Vec<f64>,
    pub distances: Vec<f64>,
    pub max_range: f64,
}

impl RangeScan {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Heading of the first ray; the scan is laid out counterclockwise from it.
    pub fn base_heading(&self) -> f64 {
        self.ray_headings.first().copied().unwrap_or(0.0)
    }
}

/// Distance from `origin` to the first obstacle cell boundary along
/// `heading`, clamped to `max_range`.
pub fn ray_cast(world: &OccupancyGrid, origin: Point, heading: f64, max_range: f64) -> Result<f64> {
    let (mut col, mut row) = world.cell_of(origin);
    if world.is_occupied(col, row) {
        return Err(Error::OriginOccluded(origin));
    }
    let dir = heading_vector(heading);
    let res = world.resolution;
    let o = world.origin;
    let step_c: i64 = if dir.x > 0.0 { 1 } else { -1 };
    let step_r: i64 = if dir.y > 0.0 { 1 } else { -1 };

    // parametric distance to the next vertical / horizontal cell boundary
    let next_x = |col: i64| -> f64 {
        if dir.x == 0.0 {
            f64::INFINITY
        } else {
            let edge = if dir.x > 0.0 { col + 1 } else { col };
            (o.x + edge as f64 * res - origin.x) / dir.x
        }
    };
    let next_y = |row: i64| -> f64 {
        if dir.y == 0.0 {
            f64::INFINITY
        } else {
            let edge = if dir.y > 0.0 { row + 1 } else { row };
            (o.y + edge as f64 * res - origin.y) / dir.y
        }
    };

    loop {
        let tx = next_x(col);
        let ty = next_y(row);
        let t = tx.min(ty);
        if t >= max_range {
            return Ok(max_range);
        }
        if tx <= ty {
            col += step_c;
        }
        if ty <= tx {
            row += step_r;
        }
        if world.is_occupied(col, row) {
            return Ok(t.max(0.0));
        }
    }
}

/// Casts `n_rays` equally spaced rays counterclockwise from the agent heading.
pub fn panoramic_scan(
    world: &OccupancyGrid,
    state: &AgentState,
    n_rays: usize,
    max_range: f64,
) -> Result<RangeScan> {
    if n_rays < 12 {
        return Err(Error::InvalidArgument(format!(
            "panoramic scan needs at least 12 rays, got {n_rays}"
        )));
    }
    let spacing = 360.0 / n_rays as f64;
    let mut ray_headings = Vec::with_capacity(n_rays);
    let mut distances = Vec::with_capacity(n_rays);
    for i in 0..n_rays {
        let h = normalize_heading(state.heading + i as f64 * spacing);
        distances.push(ray_cast(world, state.position, h, max_range)?);
        ray_headings.push(h);
    }
    Ok(RangeScan {
        ray_headings,
        distances,
        max_range,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: AgentState,
    /// The full displacement was blocked (FORWARD only).
    pub collided: bool,
}

/// Executes one low-level action.
///
/// A blocked FORWARD under [`Sliding::Forbidden`] leaves the position
/// bit-identical; deadlock detection compares positions with `==`.
pub fn step(
    world: &OccupancyGrid,
    state: &AgentState,
    action: LowLevelAction,
    sliding: Sliding,
) -> StepOutcome {
    let mut next = *state;
    match action {
        LowLevelAction::RotateLeft => {
            next.heading = normalize_heading(state.heading + ROTATE_STEP);
        }
        LowLevelAction::RotateRight => {
            next.heading = normalize_heading(state.heading - ROTATE_STEP);
        }
        LowLevelAction::Stop => {}
        LowLevelAction::Forward => {
            let r = state.chassis_radius;
            let p = state.position;
            let d = heading_vector(state.heading) * FORWARD_STEP;
            let target = p + d;
            if world.segment_free(p, target, r) {
                next.position = target;
                return StepOutcome {
                    state: next,
                    collided: false,
                };
            }
            if sliding == Sliding::Allowed {
                let mut q = p;
                if d.x != 0.0 {
                    let qx = Point::new(q.x + d.x, q.y);
                    if world.segment_free(q, qx, r) {
                        q = qx;
                    }
                }
                if d.y != 0.0 {
                    let qy = Point::new(q.x, q.y + d.y);
                    if world.segment_free(q, qy, r) {
                        q = qy;
                    }
                }
                next.position = q;
            }
            return StepOutcome {
                state: next,
                collided: true,
            };
        }
    }
    StepOutcome {
        state: next,
        collided: false,
    }
}

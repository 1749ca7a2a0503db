use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::Point;

use super::OccupancyGrid;

/// Free/blocked mask of cell centers for a disc of fixed radius; the
/// configuration space the geodesic oracle searches.
#[derive(Debug, Clone)]
pub struct ConfigSpace<'w> {
    world: &'w OccupancyGrid,
    radius: f64,
    free: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    cell: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'w> ConfigSpace<'w> {
    pub fn new(world: &'w OccupancyGrid, radius: f64) -> Self {
        let (w, h) = (world.width(), world.height());
        let mut free = vec![false; w * h];
        for row in 0..h {
            for col in 0..w {
                if world.is_occupied(col as i64, row as i64) {
                    continue;
                }
                free[row * w + col] = !world.disc_collides(world.cell_center(col, row), radius);
            }
        }
        ConfigSpace { world, radius, free }
    }

    pub fn world(&self) -> &'w OccupancyGrid {
        self.world
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn index(&self, col: i64, row: i64) -> Option<usize> {
        let (w, h) = (self.world.width() as i64, self.world.height() as i64);
        (col >= 0 && row >= 0 && col < w && row < h).then(|| (row * w + col) as usize)
    }

    fn center(&self, idx: usize) -> Point {
        let w = self.world.width();
        self.world.cell_center(idx % w, idx / w)
    }

    /// Grid cell standing in for `p`: its own cell if that is free, else the
    /// nearest free cell among the 8 neighbors. `None` if `p` itself is not
    /// free for the disc or no nearby cell is.
    pub fn anchor(&self, p: Point) -> Option<usize> {
        if self.world.disc_collides(p, self.radius) {
            return None;
        }
        let (col, row) = self.world.cell_of(p);
        if let Some(i) = self.index(col, row).filter(|&i| self.free[i]) {
            return Some(i);
        }
        let mut best: Option<(f64, usize)> = None;
        for dr in -1..=1 {
            for dc in -1..=1 {
                if let Some(i) = self.index(col + dc, row + dr).filter(|&i| self.free[i]) {
                    let d = self.center(i).distance(p);
                    if best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                        best = Some((d, i));
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }

    /// Like [`anchor`](Self::anchor), but falls back to the nearest free cell
    /// whose center lies within `slack` of `p`.
    pub fn anchor_within(&self, p: Point, slack: f64) -> Option<usize> {
        if let Some(i) = self.anchor(p) {
            return Some(i);
        }
        let res = self.world.resolution();
        let reach = (slack / res).ceil() as i64 + 1;
        let (col, row) = self.world.cell_of(p);
        let mut best: Option<(f64, usize)> = None;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let Some(i) = self.index(col + dc, row + dr).filter(|&i| self.free[i]) else {
                    continue;
                };
                let d = self.center(i).distance(p);
                if d <= slack && best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                    best = Some((d, i));
                }
            }
        }
        best.map(|(_, i)| i)
    }

    pub fn is_free(&self, p: Point) -> bool {
        self.anchor(p).is_some()
    }

    /// Whether the chassis fits centered on cell `(col, row)`.
    pub fn cell_free(&self, col: i64, row: i64) -> bool {
        self.index(col, row).is_some_and(|i| self.free[i])
    }

    fn neighbors(&self, idx: usize, mut visit: impl FnMut(usize, f64)) {
        let w = self.world.width() as i64;
        let (col, row) = ((idx as i64) % w, (idx as i64) / w);
        let res = self.world.resolution();
        let diag = std::f64::consts::SQRT_2 * res;
        for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if let Some(j) = self.index(col + dc, row + dr).filter(|&j| self.free[j]) {
                visit(j, res);
            }
        }
        for (dc, dr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            // no corner cutting: both orthogonal neighbors must be free
            let ok_c = self.index(col + dc, row).is_some_and(|j| self.free[j]);
            let ok_r = self.index(col, row + dr).is_some_and(|j| self.free[j]);
            if !(ok_c && ok_r) {
                continue;
            }
            if let Some(j) = self.index(col + dc, row + dr).filter(|&j| self.free[j]) {
                visit(j, diag);
            }
        }
    }

    /// Single-source shortest distances over the 8-connected free cells.
    pub fn distance_field(&self, source: Point) -> Result<DistanceField<'_, 'w>> {
        let src = self.anchor(source).ok_or(Error::EndpointOccluded {
            what: "source",
            at: source,
        })?;
        let mut dist = vec![f64::INFINITY; self.free.len()];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Frontier { cost: 0.0, cell: src });
        while let Some(Frontier { cost, cell }) = heap.pop() {
            if cost > dist[cell] {
                continue;
            }
            self.neighbors(cell, |j, w| {
                let c = cost + w;
                if c < dist[j] {
                    dist[j] = c;
                    heap.push(Frontier { cost: c, cell: j });
                }
            });
        }
        Ok(DistanceField {
            space: self,
            source,
            source_cell: src,
            dist,
        })
    }

    /// Geodesic distance between two points; `+inf` when disconnected.
    pub fn geodesic(&self, a: Point, b: Point) -> Result<f64> {
        let field = self.distance_field(a)?;
        field.distance_to(b)
    }
}

/// Distances from one source to every free cell.
#[derive(Debug, Clone)]
pub struct DistanceField<'s, 'w> {
    space: &'s ConfigSpace<'w>,
    source: Point,
    source_cell: usize,
    dist: Vec<f64>,
}

impl DistanceField<'_, '_> {
    pub fn source(&self) -> Point {
        self.source
    }

    /// Point-to-point distance: straight offsets to the anchor cells plus the
    /// grid path between them. Points sharing an anchor use the straight
    /// line, so the result never undercuts the Euclidean distance.
    pub fn distance_to(&self, p: Point) -> Result<f64> {
        let cell = self.space.anchor(p).ok_or(Error::EndpointOccluded {
            what: "target",
            at: p,
        })?;
        Ok(self.distance_via(cell, p))
    }

    fn distance_via(&self, cell: usize, p: Point) -> f64 {
        if cell == self.source_cell {
            return self.source.distance(p);
        }
        let grid = self.dist[cell];
        if grid.is_infinite() {
            return f64::INFINITY;
        }
        let s = self.space.center(self.source_cell);
        let c = self.space.center(cell);
        self.source.distance(s) + grid + c.distance(p)
    }

    /// Distance to a point that may sit slightly off the free space, snapping
    /// it to a free cell within `slack`; `+inf` if there is none.
    pub fn distance_near(&self, p: Point, slack: f64) -> f64 {
        match self.space.anchor_within(p, slack) {
            Some(cell) => self.distance_via(cell, p),
            None => f64::INFINITY,
        }
    }

    /// Like [`distance_to`](Self::distance_to) but `+inf` for occluded points.
    pub fn distance_or_inf(&self, p: Point) -> f64 {
        self.distance_to(p).unwrap_or(f64::INFINITY)
    }

    /// A shortest path from the source to `p` as a polyline through cell
    /// centers, with both exact endpoints included.
    pub fn path_to(&self, p: Point) -> Result<Option<Vec<Point>>> {
        let cell = self.space.anchor(p).ok_or(Error::EndpointOccluded {
            what: "target",
            at: p,
        })?;
        if self.dist[cell].is_infinite() {
            return Ok(None);
        }
        let mut cells = vec![cell];
        let mut cur = cell;
        while cur != self.source_cell {
            let mut best: Option<(f64, usize)> = None;
            self.space.neighbors(cur, |j, w| {
                let via = self.dist[j] + w;
                // predecessor on a shortest path
                if (via - self.dist[cur]).abs() <= 1e-9
                    && best.is_none_or(|(bd, bj)| self.dist[j] < bd || (self.dist[j] == bd && j < bj))
                {
                    best = Some((self.dist[j], j));
                }
            });
            let Some((_, j)) = best else {
                return Ok(None);
            };
            cells.push(j);
            cur = j;
        }
        cells.reverse();
        let mut path = vec![self.source];
        path.extend(cells.iter().map(|&i| self.space.center(i)));
        path.push(p);
        path.dedup();
        Ok(Some(path))
    }
}

/// Shortest obstacle-free distance for a disc of `radius` between `a` and
/// `b`; `+inf` when they are disconnected.
pub fn geodesic_distance(world: &OccupancyGrid, a: Point, b: Point, radius: f64) -> Result<f64> {
    ConfigSpace::new(world, radius).geodesic(a, b)
}

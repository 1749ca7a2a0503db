//! Planar points and heading arithmetic.
//!
//! Headings are in degrees, `0` along +x, counterclockwise positive.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Absolute heading of `other` seen from `self`, in [0, 360).
    pub fn bearing_to(self, other: Point) -> f64 {
        let d = other - self;
        normalize_heading(d.y.atan2(d.x).to_degrees())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Wraps a heading into [0, 360).
pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Wraps an angle difference into (-180, 180].
pub fn wrap_delta(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Unit vector for a heading. Axis-aligned headings are exact so that
/// axis-parallel motion never drifts off-axis.
pub fn heading_vector(deg: f64) -> Point {
    let h = normalize_heading(deg);
    if h == 0.0 {
        Point::new(1.0, 0.0)
    } else if h == 90.0 {
        Point::new(0.0, 1.0)
    } else if h == 180.0 {
        Point::new(-1.0, 0.0)
    } else if h == 270.0 {
        Point::new(0.0, -1.0)
    } else {
        let r = h.to_radians();
        Point::new(r.cos(), r.sin())
    }
}

/// Smallest absolute angle between two headings, in [0, 180].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_delta(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_headings() {
        assert_eq!(normalize_heading(360.0), 0.0);
        assert_eq!(normalize_heading(-15.0), 345.0);
        assert_eq!(wrap_delta(190.0), -170.0);
        assert_eq!(wrap_delta(-180.0), 180.0);
        assert_eq!(wrap_delta(180.0), 180.0);
    }

    #[test]
    fn axis_headings_are_exact() {
        assert_eq!(heading_vector(90.0), Point::new(0.0, 1.0));
        assert_eq!(heading_vector(-90.0), Point::new(0.0, -1.0));
        let v = heading_vector(45.0);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bearing() {
        let o = Point::new(1.0, 1.0);
        assert!((o.bearing_to(Point::new(1.0, 3.0)) - 90.0).abs() < 1e-12);
        assert!((o.bearing_to(Point::new(0.0, 1.0)) - 180.0).abs() < 1e-12);
    }
}

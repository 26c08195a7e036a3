//! Exact 2D primitives: vectors, segments, simple polygons, ray and distance queries.
//!
//! Everything is `f64`. Intersection predicates use [`EPS`] as their only
//! tolerance; scenes are at most 20 m across so this leaves ample margin.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for intersection and on-boundary predicates.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("degenerate segment: both endpoints at ({0}, {1})")]
    DegenerateSegment(f64, f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("query origin ({0:.3}, {1:.3}) lies outside the free space")]
    OutsideFreeSpace(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Rejects NaN and infinite components.
    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Vec2 { x, y })
        } else {
            Err(GeometryError::NonFinite(x, y))
        }
    }

    /// Unit vector at `angle` radians from +x.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2 { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).length()
    }

    /// `None` for (near-)zero vectors.
    pub fn normalized(self) -> Option<Vec2> {
        let len = self.length();
        if len > EPS {
            Some(self / len)
        } else {
            None
        }
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand perpendicular (rotated +90°).
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Signed angle that rotates `from` onto `to`, in (−π, π]. Positive is counter-clockwise.
pub fn signed_angle(from: Vec2, to: Vec2) -> f64 {
    from.cross(to).atan2(from.dot(to))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Result<Self, GeometryError> {
        if a == b {
            return Err(GeometryError::DegenerateSegment(a.x, a.y));
        }
        Ok(Segment { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        closest_point_on_segment(p, self.a, self.b)
    }
}

pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.length_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

#[inline]
pub fn distance_point_to_edge(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.distance(closest_point_on_segment(p, a, b))
}

/// Euclidean distance from `p` to the closest point of `s`.
pub fn distance_point_segment(p: Vec2, s: &Segment) -> f64 {
    distance_point_to_edge(p, s.a, s.b)
}

/// Distance along the ray `origin + t·dir` (t ≥ 0) to segment `ab`, if it is hit.
///
/// `dir` need not be unit length; the returned `t` is in units of `dir`.
pub fn ray_edge_intersection(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    let w = a - origin;
    if denom.abs() < EPS * e.length().max(1.0) {
        // Parallel. Collinear overlap counts as a hit at the nearest point ahead.
        if w.cross(dir).abs() > EPS {
            return None;
        }
        let d2 = dir.length_squared();
        let ta = w.dot(dir) / d2;
        let tb = (b - origin).dot(dir) / d2;
        let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
        if hi < -EPS {
            return None;
        }
        return Some(lo.max(0.0));
    }
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    if t >= -EPS && (-EPS..=1.0 + EPS).contains(&u) {
        Some(t.max(0.0))
    } else {
        None
    }
}

/// Closed-segment intersection test, touching endpoints included.
pub fn edges_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    segment_segment_distance(p1, p2, q1, q2) <= EPS
}

/// Minimum distance between closed segments `p1p2` and `q1q2`.
pub fn segment_segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> f64 {
    let d1 = p2 - p1;
    let d2 = q2 - q1;
    let denom = d1.cross(d2);
    if denom.abs() > EPS {
        let w = q1 - p1;
        let t = w.cross(d2) / denom;
        let u = w.cross(d1) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    distance_point_to_edge(p1, q1, q2)
        .min(distance_point_to_edge(p2, q1, q2))
        .min(distance_point_to_edge(q1, p1, p2))
        .min(distance_point_to_edge(q2, p1, p2))
}

/// A simple polygon stored with counter-clockwise winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl TryFrom<Vec<Vec2>> for Polygon {
    type Error = GeometryError;
    fn try_from(v: Vec<Vec2>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Vec2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    /// Validates the vertex ring. Clockwise input is reversed to counter-clockwise.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(v.x, v.y));
        }
        let area = signed_area(&vertices);
        if area.abs() < EPS {
            return Err(GeometryError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            if a == b {
                return Err(GeometryError::DegenerateSegment(a.x, a.y));
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if edges_intersect(a, b, c, d) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(Polygon { vertices })
    }

    /// Axis-aligned rectangle centred at `center`.
    pub fn rect(center: Vec2, width: f64, height: f64) -> Self {
        Self::oriented_rect(center, width, height, 0.0)
    }

    /// Rectangle of size `length × thickness` whose long axis points along `angle`.
    pub fn oriented_rect(center: Vec2, length: f64, thickness: f64, angle: f64) -> Self {
        let u = Vec2::from_angle(angle) * (length / 2.0);
        let v = Vec2::from_angle(angle).perp() * (thickness / 2.0);
        Polygon {
            vertices: vec![
                center - u - v,
                center + u - v,
                center + u + v,
                center - u + v,
            ],
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Minimum distance from `p` to the polygon outline.
    pub fn distance_to_boundary(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| distance_point_to_edge(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        point_in_polygon(p, self)
    }

    /// Returns `(min, max)` corners of the bounding box.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Reflects across the x-axis, keeping counter-clockwise winding.
    pub fn mirrored_y(&self) -> Polygon {
        let mut vertices: Vec<Vec2> = self.vertices.iter().map(|v| Vec2::new(v.x, -v.y)).collect();
        vertices.reverse();
        Polygon { vertices }
    }

    /// Applies a rotation about the origin followed by a translation.
    pub fn transformed(&self, angle: f64, offset: Vec2) -> Polygon {
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|v| v.rotated(angle) + offset)
                .collect(),
        }
    }

    pub fn min_distance_to(&self, other: &Polygon) -> f64 {
        let mut best = f64::INFINITY;
        for (a, b) in self.edges() {
            for (c, d) in other.edges() {
                best = best.min(segment_segment_distance(a, b, c, d));
            }
        }
        best
    }
}

fn signed_area(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    (0..n).map(|i| vs[i].cross(vs[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Boundary-inclusive containment: points on an edge or vertex count as inside.
pub fn point_in_polygon(p: Vec2, poly: &Polygon) -> bool {
    if poly.distance_to_boundary(p) <= EPS {
        return true;
    }
    let mut inside = false;
    for (a, b) in poly.edges() {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

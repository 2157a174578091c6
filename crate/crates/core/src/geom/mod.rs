//! Planar geometry: points, polygons, Delaunay triangulation, alpha-shapes,
//! nearest-boundary queries, oriented bounding rectangles and rasterized IoU.

mod alpha;
mod delaunay;
mod hull;
mod nearest;
mod normalize;
pub mod predicates;
mod raster;

pub use alpha::{
    alpha_complex, alpha_shape, alpha_shape_with_fallback, alpha_shape_with_fallback_by, AlphaComplex, AlphaParam,
    FallbackPolicy, ShapeSource,
};
pub use delaunay::{delaunay, Triangle};
pub use hull::{convex_hull, min_area_rect};
pub use nearest::{distance_to_boundary, nearest_point_on_polygon, NearestPoint};
pub use normalize::{denormalize_polygon, normalize_points, NormTransform};
pub use raster::{point_in_polygon, polygon_iou, row_spans, GridSpec};

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// Tolerance used for geometric comparisons on normalized coordinates.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("alpha-shape is empty: every triangle exceeds alpha = {alpha}")]
    EmptyShape { alpha: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

/// A point in image pixels (or normalized units, depending on context).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist2(self, other: Point2) -> f64 {
        let d = self - other;
        d.dot(d)
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Ccw,
    Cw,
}

/// A closed polygon. The closing edge from the last vertex back to the first
/// is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point2>,
    orientation: Orientation,
}

impl Polygon {
    /// Builds a polygon from at least three finite vertices enclosing a
    /// non-zero area. Simplicity is not checked here; see [`Polygon::is_simple`].
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(GeomError::Degenerate(format!("polygon needs at least 3 vertices, got {}", vertices.len())));
        }
        if let Some(bad) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(GeomError::Degenerate(format!("non-finite vertex {bad:?}")));
        }
        let area = signed_area(&vertices);
        if area == 0.0 || !area.is_finite() {
            return Err(GeomError::Degenerate("polygon has zero area".into()));
        }
        let orientation = if area > 0.0 { Orientation::Ccw } else { Orientation::Cw };
        Ok(Self { vertices, orientation })
    }

    /// Axis-aligned rectangle with corners `min` and `max`, counter-clockwise.
    pub fn rect(min: Point2, max: Point2) -> Result<Self> {
        Self::new(vec![min, Point2::new(max.x, min.y), max, Point2::new(min.x, max.y)])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Same polygon with counter-clockwise vertex order.
    pub fn to_ccw(&self) -> Polygon {
        let mut out = self.clone();
        if out.orientation == Orientation::Cw {
            out.vertices.reverse();
            out.orientation = Orientation::Ccw;
        }
        out
    }

    /// Iterator over directed edges, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        bbox(&self.vertices).expect("polygon has vertices")
    }

    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Result<Polygon> {
        Polygon::new(self.vertices.iter().copied().map(f).collect())
    }

    /// True when no two non-adjacent edges touch and no adjacent edges
    /// overlap. Quadratic in the vertex count.
    pub fn is_simple(&self) -> bool {
        is_simple_ring(&self.vertices)
    }

    /// Drops vertices that are collinear with their neighbours (within
    /// `tol` of twice the local triangle area) and repeated vertices.
    pub fn without_collinear(&self, tol: f64) -> Vec<Point2> {
        remove_collinear(&self.vertices, tol)
    }
}

pub(crate) fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc * 0.5
}

pub(crate) fn bbox(points: &[Point2]) -> Option<(Point2, Point2)> {
    let first = *points.first()?;
    let mut lo = first;
    let mut hi = first;
    for p in &points[1..] {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    Some((lo, hi))
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test with exact orientation signs.
pub(crate) fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = predicates::orient2d(a, b, c);
    let o2 = predicates::orient2d(a, b, d);
    let o3 = predicates::orient2d(c, d, a);
    let o4 = predicates::orient2d(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

pub(crate) fn is_simple_ring(v: &[Point2]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            let c = v[j];
            let d = v[(j + 1) % n];
            let adjacent_next = j == i + 1;
            let adjacent_wrap = (j + 1) % n == i;
            if adjacent_next || adjacent_wrap {
                // Adjacent edges share one vertex; they may only overlap if
                // they fold back onto each other.
                let (shared, p, q) = if adjacent_next { (b, a, d) } else { (a, b, c) };
                if predicates::orient2d(p, shared, q) == 0.0 && (q - shared).dot(p - shared) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn remove_collinear(vertices: &[Point2], tol: f64) -> Vec<Point2> {
    let mut v: Vec<Point2> = Vec::with_capacity(vertices.len());
    for &p in vertices {
        if v.last() != Some(&p) {
            v.push(p);
        }
    }
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    let mut changed = true;
    while changed && v.len() > 3 {
        changed = false;
        let n = v.len();
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            if (cur - prev).cross(next - prev).abs() <= tol {
                v.remove(i);
                changed = true;
                break;
            }
        }
    }
    v
}

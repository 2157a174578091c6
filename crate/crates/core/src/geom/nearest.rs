use super::{Point2, Polygon};

/// Closest boundary point and the signed offset from the query to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPoint {
    pub point: Point2,
    pub dx: f64,
    pub dy: f64,
    pub distance: f64,
}

/// Relative slack under which two candidate distances count as tied.
const TIE_EPS: f64 = 1e-12;

/// Nearest point on the polygon boundary, treating edges as continuous
/// segments. Ties (equal distance) are broken by smallest `y`, then
/// smallest `x` of the boundary point.
pub fn nearest_point_on_polygon(p: Point2, poly: &Polygon) -> NearestPoint {
    let mut best: Option<(f64, Point2)> = None;
    for (a, b) in poly.edges() {
        let q = closest_on_segment(p, a, b);
        let d2 = p.dist2(q);
        let replace = match best {
            None => true,
            Some((bd2, bq)) => {
                let slack = TIE_EPS * bd2.max(d2).max(1.0);
                if d2 < bd2 - slack {
                    true
                } else if d2 <= bd2 + slack {
                    (q.y, q.x) < (bq.y, bq.x)
                } else {
                    false
                }
            }
        };
        if replace {
            best = Some((d2, q));
        }
    }
    let (d2, q) = best.expect("polygon has edges");
    NearestPoint { point: q, dx: q.x - p.x, dy: q.y - p.y, distance: d2.sqrt() }
}

pub(crate) fn closest_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else if ab.x == 0.0 {
        // Keep axis-aligned projections exact.
        Point2::new(a.x, a.y + ab.y * t)
    } else if ab.y == 0.0 {
        Point2::new(a.x + ab.x * t, a.y)
    } else {
        a + ab * t
    }
}

pub fn distance_to_boundary(p: Point2, poly: &Polygon) -> f64 {
    poly.edges().map(|(a, b)| p.dist(closest_on_segment(p, a, b))).fold(f64::INFINITY, f64::min)
}

use super::predicates::orient2d;
use super::{GeomError, Point2, Polygon, Result};

/// Convex hull by monotone chain, counter-clockwise, without collinear
/// vertices. Errors when fewer than three non-collinear points exist.
pub fn convex_hull(points: &[Point2]) -> Result<Vec<Point2>> {
    let mut pts: Vec<Point2> = points.to_vec();
    if let Some(bad) = pts.iter().find(|p| !p.is_finite()) {
        return Err(GeomError::Degenerate(format!("non-finite point {bad:?}")));
    }
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeomError::Degenerate("hull needs 3 distinct points".into()));
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && orient2d(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient2d(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeomError::Degenerate("points are collinear".into()));
    }
    Ok(lower)
}

/// Minimum-area enclosing rectangle via rotating calipers over the hull
/// edges. The rectangle is returned counter-clockwise.
pub fn min_area_rect(poly: &Polygon) -> Result<Polygon> {
    let hull = convex_hull(poly.vertices())?;
    let n = hull.len();
    let mut best: Option<(f64, [Point2; 4])> = None;
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let len = a.dist(b);
        let u = (b - a) * (1.0 / len);
        let v = Point2::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &p in &hull {
            let d = p - a;
            let pu = d.dot(u);
            let pv = d.dot(v);
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.as_ref().is_none_or(|(a0, _)| area < *a0) {
            let corner = |s: f64, t: f64| a + u * s + v * t;
            best = Some((area, [corner(umin, vmin), corner(umax, vmin), corner(umax, vmax), corner(umin, vmax)]));
        }
    }
    let (_, corners) = best.expect("hull has edges");
    Polygon::new(corners.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(2.0, 2.0), p(1.0, 1.0), p(0.0, 2.0)];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull, vec![p(0.0, 0.0), p(2.0, 0.0), p(2.0, 2.0), p(0.0, 2.0)]);
    }

    #[test]
    fn axis_aligned_rect_is_its_own_min_rect() {
        let r = Polygon::rect(p(1.0, 2.0), p(11.0, 6.0)).unwrap();
        let m = min_area_rect(&r).unwrap();
        assert!((m.area() - r.area()).abs() < 1e-9);
    }

    #[test]
    fn rotated_rect_keeps_area() {
        let r = Polygon::rect(p(-5.0, -2.0), p(5.0, 2.0)).unwrap();
        let (s, c) = 30f64.to_radians().sin_cos();
        let rotated = r.map(|q| p(c * q.x - s * q.y, s * q.x + c * q.y)).unwrap();
        let m = min_area_rect(&rotated).unwrap();
        assert!((m.area() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn min_rect_of_triangle_contains_it() {
        let t = Polygon::new(vec![p(0.0, 0.0), p(4.0, 1.0), p(1.0, 3.0)]).unwrap();
        let m = min_area_rect(&t).unwrap();
        let (lo, hi) = t.bbox();
        assert!(m.area() <= (hi.x - lo.x) * (hi.y - lo.y) + 1e-9);
        for &v in t.vertices() {
            for (a, b) in m.edges() {
                assert!((b - a).cross(v - a) >= -1e-6);
            }
        }
    }
}

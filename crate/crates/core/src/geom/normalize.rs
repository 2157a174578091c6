use super::{bbox, GeomError, Point2, Polygon, Result};
use serde::{Deserialize, Serialize};

/// Isotropic map `p -> (p - offset) * scale` into the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormTransform {
    pub offset: Point2,
    pub scale: f64,
}

impl NormTransform {
    pub const IDENTITY: NormTransform = NormTransform { offset: Point2::new(0.0, 0.0), scale: 1.0 };

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new((p.x - self.offset.x) * self.scale, (p.y - self.offset.y) * self.scale)
    }

    pub fn invert(&self, p: Point2) -> Point2 {
        Point2::new(p.x / self.scale + self.offset.x, p.y / self.scale + self.offset.y)
    }
}

/// Maps points into `[0,1]²` with a single scale of `1 / max(width, height)`
/// of their bounding box, preserving aspect ratio.
pub fn normalize_points(points: &[Point2]) -> Result<(Vec<Point2>, NormTransform)> {
    let (lo, hi) = bbox(points).ok_or_else(|| GeomError::Degenerate("no points to normalize".into()))?;
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(GeomError::Degenerate("points are identical or non-finite".into()));
    }
    let t = NormTransform { offset: lo, scale: 1.0 / extent };
    let out = points
        .iter()
        .map(|&p| {
            let q = t.apply(p);
            // Rounding may push the far edge a hair past 1.
            Point2::new(q.x.clamp(0.0, 1.0), q.y.clamp(0.0, 1.0))
        })
        .collect();
    Ok((out, t))
}

pub fn denormalize_polygon(poly: &Polygon, t: &NormTransform) -> Polygon {
    poly.map(|p| t.invert(p)).expect("scaling preserves non-degeneracy")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn rectangle_normalizes_isotropically() {
        let (out, t) = normalize_points(&[p(10.0, 10.0), p(110.0, 10.0), p(110.0, 60.0), p(10.0, 60.0)]).unwrap();
        assert_eq!(out, vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.5), p(0.0, 0.5)]);
        assert_eq!(t.offset, p(10.0, 10.0));
        assert!((t.scale - 0.01).abs() < 1e-15);
    }

    #[test]
    fn unit_square_is_identity() {
        let (_, t) = normalize_points(&[p(0.0, 0.0), p(1.0, 1.0), p(0.3, 0.7)]).unwrap();
        assert!(t.offset.x.abs() < 1e-9 && t.offset.y.abs() < 1e-9 && (t.scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_points_are_degenerate() {
        assert!(normalize_points(&[p(3.0, 3.0), p(3.0, 3.0)]).is_err());
        assert!(normalize_points(&[]).is_err());
    }

    #[test]
    fn denormalize_unit_square() {
        let sq = Polygon::rect(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        let t = NormTransform { offset: p(5.0, 7.0), scale: 1.0 / 20.0 };
        let out = denormalize_polygon(&sq, &t);
        assert_eq!(out.vertices(), &[p(5.0, 7.0), p(25.0, 7.0), p(25.0, 27.0), p(5.0, 27.0)]);
        assert_eq!(denormalize_polygon(&sq, &NormTransform::IDENTITY), sq);
    }

    proptest! {
        #[test]
        fn roundtrip_recovers_input(
            pts in proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 2..40)
        ) {
            let pts: Vec<Point2> = pts.into_iter().map(Point2::from).collect();
            prop_assume!(pts.iter().any(|q| *q != pts[0]));
            let (norm, t) = normalize_points(&pts).unwrap();
            for (orig, n) in pts.iter().zip(&norm) {
                prop_assert!((0.0..=1.0).contains(&n.x) && (0.0..=1.0).contains(&n.y));
                let back = t.invert(*n);
                prop_assert!((back.x - orig.x).abs() <= 1e-9 * orig.x.abs().max(1.0));
                prop_assert!((back.y - orig.y).abs() <= 1e-9 * orig.y.abs().max(1.0));
            }
        }
    }
}

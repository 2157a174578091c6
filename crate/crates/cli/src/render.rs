//! Static SVG overlays: ground truth in blue, detections in green, derived
//! quads in red.

use shapereg::decode::Detection;
use shapereg::encode::AnnotationPolygon;
use shapereg::geom::{min_area_rect, Point2};
use std::fmt::Write as _;

pub struct Layer {
    pub id: &'static str,
    pub color: &'static str,
    pub rings: Vec<Vec<Point2>>,
}

fn path(ring: &[Point2]) -> String {
    let mut d = String::new();
    for (i, p) in ring.iter().enumerate() {
        let _ = write!(d, "{}{:.3} {:.3} ", if i == 0 { "M" } else { "L" }, p.x, p.y);
    }
    d.push('Z');
    format!("<path d=\"{d}\"/>")
}

pub fn layers(gts: &[AnnotationPolygon], dets: &[Detection], quads: bool) -> Vec<Layer> {
    let mut out = vec![
        Layer { id: "ground-truth", color: "blue", rings: gts.iter().map(|g| g.ring()).collect() },
        Layer { id: "detections", color: "green", rings: dets.iter().map(|d| d.polygon.vertices().to_vec()).collect() },
    ];
    if quads {
        let rings = dets
            .iter()
            .filter_map(|d| d.quad.clone().or_else(|| min_area_rect(&d.polygon).ok()))
            .map(|q| q.vertices().to_vec())
            .collect();
        out.push(Layer { id: "quads", color: "red", rings });
    }
    out
}

/// Canvas size: the given image size, or the extent of all shapes.
pub fn svg(layers: &[Layer], size: Option<(usize, usize)>) -> String {
    let (w, h) = size.unwrap_or_else(|| {
        let (mut w, mut h) = (1.0f64, 1.0f64);
        for p in layers.iter().flat_map(|l| l.rings.iter().flatten()) {
            w = w.max(p.x);
            h = h.max(p.y);
        }
        (w.ceil() as usize, h.ceil() as usize)
    });
    let mut s = String::new();
    let _ =
        writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">");
    for layer in layers {
        let _ = writeln!(s, "<g id=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\">", layer.id, layer.color);
        for ring in &layer.rings {
            let _ = writeln!(s, "{}", path(ring));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapereg::geom::Polygon;

    fn square() -> AnnotationPolygon {
        AnnotationPolygon::new(
            vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)],
            vec![Point2::new(0.0, 10.0), Point2::new(10.0, 10.0)],
            false,
        )
        .unwrap()
    }

    #[test]
    fn one_path_per_shape_and_layer() {
        let g = square();
        let d = Detection::new(Polygon::new(g.ring()).unwrap(), 0.9);
        let two = svg(&layers(std::slice::from_ref(&g), std::slice::from_ref(&d), false), None);
        assert_eq!(two.matches("<path").count(), 2);
        assert_eq!(two.matches("<g ").count(), 2);
        let three = svg(&layers(&[g], &[d], true), Some((20, 20)));
        assert_eq!(three.matches("<path").count(), 3);
        assert!(three.contains("id=\"quads\""));
    }

    #[test]
    fn empty_is_valid() {
        let s = svg(&layers(&[], &[], false), None);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<path").count(), 0);
    }
}

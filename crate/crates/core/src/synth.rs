//! Deterministic synthetic text annotations: axis-aligned rectangles,
//! rotated rectangles and circular-arc text lines.

use crate::encode::AnnotationPolygon;
use crate::geom::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShapeKind {
    Rect,
    RotatedRect { degrees: f64 },
    Arc { sweep_degrees: f64 },
}

/// One annotation placed in its own image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticInstance {
    pub kind: ShapeKind,
    pub aspect: f64,
    pub height: f64,
    pub annotation: AnnotationPolygon,
    pub image_size: (usize, usize),
}

/// Length-to-height ratios cycled through by the generators.
pub const ASPECTS: [f64; 8] = [1.0, 2.0, 3.0, 5.0, 8.0, 12.0, 16.0, 20.0];

const MARGIN: f64 = 12.0;
const ARC_VERTICES_PER_CHAIN: usize = 7;

/// Text heights are drawn uniformly from this range (pixels).
pub const HEIGHT_RANGE: (f64, f64) = (40.0, 72.0);

fn rotate(p: Point2, degrees: f64) -> Point2 {
    let (s, c) = degrees.to_radians().sin_cos();
    Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Translates the chains so the bounding box starts at the margin and
/// sizes the image to fit.
fn place(upper: Vec<Point2>, lower: Vec<Point2>) -> (AnnotationPolygon, (usize, usize)) {
    let all: Vec<Point2> = upper.iter().chain(&lower).copied().collect();
    let lo = all.iter().fold(Point2::new(f64::MAX, f64::MAX), |a, p| Point2::new(a.x.min(p.x), a.y.min(p.y)));
    let hi = all.iter().fold(Point2::new(f64::MIN, f64::MIN), |a, p| Point2::new(a.x.max(p.x), a.y.max(p.y)));
    let shift = Point2::new(MARGIN - lo.x.floor(), MARGIN - lo.y.floor());
    let moved = |v: Vec<Point2>| v.into_iter().map(|p| p + shift).collect::<Vec<_>>();
    let ann = AnnotationPolygon::new(moved(upper), moved(lower), false).expect("synthetic annotation is simple");
    let w = (hi.x - lo.x.floor() + 2.0 * MARGIN).ceil() as usize;
    let h = (hi.y - lo.y.floor() + 2.0 * MARGIN).ceil() as usize;
    (ann, (w, h))
}

/// Rectangle of `length x height` rotated by `degrees` about its centre.
pub fn rect_chains(length: f64, height: f64, degrees: f64) -> (Vec<Point2>, Vec<Point2>) {
    let (hl, hh) = (length / 2.0, height / 2.0);
    let r = |x: f64, y: f64| rotate(Point2::new(x, y), degrees);
    (vec![r(-hl, -hh), r(hl, -hh)], vec![r(-hl, hh), r(hl, hh)])
}

/// Annular sector with centreline radius `radius`, thickness `height`,
/// spanning `sweep_degrees`. `arch` bends the line upwards (centre below the
/// text), otherwise it smiles.
pub fn arc_chains(radius: f64, height: f64, sweep_degrees: f64, arch: bool) -> (Vec<Point2>, Vec<Point2>) {
    let (outer, inner) = (radius + height / 2.0, radius - height / 2.0);
    let sweep = sweep_degrees.to_radians();
    let n = ARC_VERTICES_PER_CHAIN;
    let chain = |r: f64| -> Vec<Point2> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                // Image coordinates: y grows downwards, so "up" is -PI/2.
                let theta = if arch { -PI / 2.0 - sweep / 2.0 + t * sweep } else { PI / 2.0 + sweep / 2.0 - t * sweep };
                Point2::new(r * theta.cos(), r * theta.sin())
            })
            .collect()
    };
    if arch {
        (chain(outer), chain(inner))
    } else {
        (chain(inner), chain(outer))
    }
}

/// The roundtrip suite: `n` instances split between axis-aligned
/// rectangles, rectangles rotated in 10 degree steps over 0..=170, and arcs
/// with sweeps up to a half circle. Aspect ratios cycle over [`ASPECTS`].
pub fn synthetic_suite(n: usize, seed: u64) -> Vec<SyntheticInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let aspect = ASPECTS[(i / 3) % ASPECTS.len()];
        let height = rng.random_range(HEIGHT_RANGE.0..HEIGHT_RANGE.1).round();
        let length = aspect * height;
        let (kind, (upper, lower)) = match i % 3 {
            0 => (ShapeKind::Rect, rect_chains(length, height, 0.0)),
            1 => {
                let degrees = 10.0 * ((i / 3) % 18) as f64;
                (ShapeKind::RotatedRect { degrees }, rect_chains(length, height, degrees))
            }
            _ => {
                // Sweep up to 180 degrees, never tighter than the text height.
                let sweep_degrees: f64 = [45.0, 90.0, 135.0, 180.0][(i / 3) % 4];
                let radius = (length / sweep_degrees.to_radians()).max(height);
                let arch = rng.random_bool(0.5);
                (ShapeKind::Arc { sweep_degrees }, arc_chains(radius, height, sweep_degrees, arch))
            }
        };
        let (annotation, image_size) = place(upper, lower);
        out.push(SyntheticInstance { kind, aspect, height, annotation, image_size });
    }
    out
}

/// Parallel horizontal text lines stacked vertically with the given gap,
/// as a fraction of the line height.
pub fn stacked_lines(
    count: usize,
    length: f64,
    height: f64,
    gap_fraction: f64,
) -> (Vec<AnnotationPolygon>, (usize, usize)) {
    let pitch = height * (1.0 + gap_fraction);
    let anns = (0..count)
        .map(|k| {
            let y = MARGIN + k as f64 * pitch;
            AnnotationPolygon::new(
                vec![Point2::new(MARGIN, y), Point2::new(MARGIN + length, y)],
                vec![Point2::new(MARGIN, y + height), Point2::new(MARGIN + length, y + height)],
                false,
            )
            .expect("rectangle")
        })
        .collect();
    let w = (length + 2.0 * MARGIN).ceil() as usize;
    let h = (count as f64 * pitch + 2.0 * MARGIN).ceil() as usize;
    (anns, (w, h))
}

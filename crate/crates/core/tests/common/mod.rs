//! Reference implementations used as oracles. Deliberately naive and
//! independent of the library's own geometry code.
#![allow(dead_code)]

use shapereg::geom::Point2;

pub fn seg_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.x + t * abx, a.y + t * aby);
    ((p.x - qx).powi(2) + (p.y - qy).powi(2)).sqrt()
}

pub fn ring_dist(p: Point2, ring: &[Point2]) -> f64 {
    (0..ring.len()).map(|i| seg_dist(p, ring[i], ring[(i + 1) % ring.len()])).fold(f64::INFINITY, f64::min)
}

/// Sorted x positions where the horizontal line at `y` crosses the ring.
fn crossings(ring: &[Point2], y: f64) -> Vec<f64> {
    let mut xs = Vec::new();
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        if (a.y <= y) != (b.y <= y) {
            xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
        }
    }
    xs.sort_by(f64::total_cmp);
    xs
}

fn intervals(ring: &[Point2], y: f64) -> Vec<(f64, f64)> {
    crossings(ring, y).chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

fn overlap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            total += (a1.min(b1) - a0.max(b0)).max(0.0);
        }
    }
    total
}

/// IoU of two simple rings, exact along x and sampled on `rows` scanlines
/// in y over the joint bounding box.
pub fn scanline_iou(a: &[Point2], b: &[Point2], rows: usize) -> f64 {
    let all = a.iter().chain(b);
    let y0 = all.clone().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let y1 = all.map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let (mut inter, mut union) = (0.0, 0.0);
    for k in 0..rows {
        let y = y0 + (k as f64 + 0.5) * (y1 - y0) / rows as f64;
        let (ia, ib) = (intervals(a, y), intervals(b, y));
        let len = |v: &[(f64, f64)]| v.iter().map(|(s, e)| e - s).sum::<f64>();
        let i = overlap(&ia, &ib);
        inter += i;
        union += len(&ia) + len(&ib) - i;
    }
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn cross_i(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i128 {
    (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
}

/// Strict convex hull corners of integer points by gift wrapping.
pub fn gift_wrap(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let start = pts[0];
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = if pts[0] == cur { pts[1] } else { pts[0] };
        for &q in &pts {
            if q == cur {
                continue;
            }
            let c = cross_i(cur, next, q);
            let farther = |a: (i64, i64), b: (i64, i64)| {
                let d = |p: (i64, i64)| (p.0 - cur.0).pow(2) + (p.1 - cur.1).pow(2);
                d(b) > d(a)
            };
            // Keep the most clockwise candidate; on collinear, the farthest.
            if c < 0 || (c == 0 && farther(next, q)) {
                next = q;
            }
        }
        if next == start {
            break;
        }
        hull.push(next);
        cur = next;
        if hull.len() > pts.len() {
            break;
        }
    }
    hull
}

/// Positive when `d` is strictly inside the circle through the
/// counter-clockwise triangle `a b c`.
pub fn incircle_i(a: (i64, i64), b: (i64, i64), c: (i64, i64), d: (i64, i64)) -> i128 {
    let row = |p: (i64, i64)| {
        let (x, y) = ((p.0 - d.0) as i128, (p.1 - d.1) as i128);
        (x, y, x * x + y * y)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    ax * (by * cw - bw * cy) - ay * (bx * cw - bw * cx) + aw * (bx * cy - by * cx)
}

pub fn orient_i(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i128 {
    cross_i(a, b, c)
}

pub fn to_i(p: Point2) -> (i64, i64) {
    assert!(p.x.fract() == 0.0 && p.y.fract() == 0.0, "expected integer coordinates, got {p:?}");
    (p.x as i64, p.y as i64)
}

/// Twice the signed area of an integer ring.
pub fn twice_area_i(ring: &[(i64, i64)]) -> i128 {
    (0..ring.len())
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            a.0 as i128 * b.1 as i128 - b.0 as i128 * a.1 as i128
        })
        .sum()
}

/// Central-difference derivative.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative error with both-tiny treated as agreement.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// P, R, F from raw counts, written out longhand.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    (p, r, 2.0 * p * r / (p + r))
}

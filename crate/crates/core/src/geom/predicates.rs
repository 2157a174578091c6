//! Orientation and in-circle predicates with exact fallback.
//!
//! Both predicates first evaluate the determinant in plain `f64` and accept
//! the sign when it clears a forward error bound. Otherwise the determinant
//! is re-evaluated exactly with floating-point expansions (sums of
//! non-overlapping doubles), so the returned sign is always the sign of the
//! exact real-valued determinant of the given doubles.

use super::Point2;

const EPSILON: f64 = f64::EPSILON * 0.5;
const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
const CCW_ERR_BOUND: f64 = (3.0 + 16.0 * EPSILON) * EPSILON;
const ICC_ERR_BOUND: f64 = (10.0 + 96.0 * EPSILON) * EPSILON;

/// Positive when `a, b, c` turn counter-clockwise, negative when clockwise,
/// zero when collinear. The magnitude is twice the signed triangle area
/// when the fast path is taken.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> f64 {
    let detleft = (a.x - c.x) * (b.y - c.y);
    let detright = (a.y - c.y) * (b.x - c.x);
    let det = detleft - detright;

    let detsum = if detleft > 0.0 {
        if detright <= 0.0 {
            return det;
        }
        detleft + detright
    } else if detleft < 0.0 {
        if detright >= 0.0 {
            return det;
        }
        -detleft - detright
    } else {
        return det;
    };
    if det.abs() >= CCW_ERR_BOUND * detsum {
        return det;
    }
    orient2d_exact(a, b, c)
}

/// Positive when `d` lies strictly inside the circle through `a, b, c`
/// (which must be counter-clockwise), negative outside, zero on it.
pub fn incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let adx = a.x - d.x;
    let bdx = b.x - d.x;
    let cdx = c.x - d.x;
    let ady = a.y - d.y;
    let bdy = b.y - d.y;
    let cdy = c.y - d.y;

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let alift = adx * adx + ady * ady;

    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let blift = bdx * bdx + bdy * bdy;

    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;
    let clift = cdx * cdx + cdy * cdy;

    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * alift
        + (cdxady.abs() + adxcdy.abs()) * blift
        + (adxbdy.abs() + bdxady.abs()) * clift;
    if det.abs() > ICC_ERR_BOUND * permanent {
        return det;
    }
    incircle_exact(a, b, c, d)
}

fn orient2d_exact(a: Point2, b: Point2, c: Point2) -> f64 {
    // Expanded form; the cx*cy terms cancel.
    let terms = [
        two_product(a.x, b.y),
        two_product(-a.x, c.y),
        two_product(-c.x, b.y),
        two_product(-a.y, b.x),
        two_product(a.y, c.x),
        two_product(c.y, b.x),
    ];
    let mut acc = Vec::with_capacity(12);
    for (hi, lo) in terms {
        acc = grow_expansion(&acc, lo);
        acc = grow_expansion(&acc, hi);
    }
    expansion_sign(&acc)
}

fn incircle_exact(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let diff = |p: f64, q: f64| -> Vec<f64> {
        let (hi, lo) = two_diff(p, q);
        compress(&[lo, hi])
    };
    let adx = diff(a.x, d.x);
    let ady = diff(a.y, d.y);
    let bdx = diff(b.x, d.x);
    let bdy = diff(b.y, d.y);
    let cdx = diff(c.x, d.x);
    let cdy = diff(c.y, d.y);

    let lift = |x: &[f64], y: &[f64]| expansion_sum(&expansion_product(x, x), &expansion_product(y, y));
    let cross = |x1: &[f64], y2: &[f64], y1: &[f64], x2: &[f64]| {
        let left = expansion_product(x1, y2);
        let right = negate(&expansion_product(y1, x2));
        expansion_sum(&left, &right)
    };

    let alift = lift(&adx, &ady);
    let blift = lift(&bdx, &bdy);
    let clift = lift(&cdx, &cdy);

    let bc = cross(&bdx, &cdy, &bdy, &cdx);
    let ca = cross(&cdx, &ady, &cdy, &adx);
    let ab = cross(&adx, &bdy, &ady, &bdx);

    let det = expansion_sum(
        &expansion_sum(&expansion_product(&alift, &bc), &expansion_product(&blift, &ca)),
        &expansion_product(&clift, &ab),
    );
    expansion_sign(&det)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    let bv = x - a;
    let av = x - bv;
    let br = b - bv;
    let ar = a - av;
    (x, ar + br)
}

#[inline]
fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let x = a - b;
    let bv = a - x;
    let av = x + bv;
    let br = bv - b;
    let ar = a - av;
    (x, ar + br)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let abig = c - a;
    let hi = c - abig;
    (hi, a - hi)
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let x = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err1 = x - ahi * bhi;
    let err2 = err1 - alo * bhi;
    let err3 = err2 - ahi * blo;
    (x, alo * blo - err3)
}

/// Adds a scalar to an increasing-magnitude expansion, dropping zeros.
fn grow_expansion(e: &[f64], b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(e.len() + 1);
    let mut q = b;
    for &component in e {
        let (sum, err) = two_sum(q, component);
        if err != 0.0 {
            out.push(err);
        }
        q = sum;
    }
    if q != 0.0 || out.is_empty() {
        out.push(q);
    }
    out
}

fn expansion_sum(e: &[f64], f: &[f64]) -> Vec<f64> {
    let mut acc = e.to_vec();
    for &component in f {
        acc = grow_expansion(&acc, component);
    }
    acc
}

fn scale_expansion(e: &[f64], b: f64) -> Vec<f64> {
    let mut acc = Vec::with_capacity(e.len() * 2);
    for &component in e {
        let (hi, lo) = two_product(component, b);
        acc = grow_expansion(&acc, lo);
        acc = grow_expansion(&acc, hi);
    }
    acc
}

fn expansion_product(e: &[f64], f: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for &component in f {
        acc = expansion_sum(&acc, &scale_expansion(e, component));
    }
    acc
}

fn negate(e: &[f64]) -> Vec<f64> {
    e.iter().map(|v| -v).collect()
}

fn compress(e: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for &component in e {
        acc = grow_expansion(&acc, component);
    }
    acc
}

fn expansion_sign(e: &[f64]) -> f64 {
    e.iter().rev().copied().find(|v| *v != 0.0).unwrap_or(0.0)
}

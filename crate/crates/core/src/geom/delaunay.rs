//! Incremental Delaunay triangulation.
//!
//! Points are inserted one at a time (Bowyer–Watson cavity re-triangulation)
//! into a triangulation closed by a single ghost vertex: every convex-hull
//! edge carries a ghost triangle, so points outside the current hull are
//! handled by the same cavity logic as interior points and no bounding
//! super-triangle is needed. All decisions go through the exact predicates
//! in [`super::predicates`].

use super::predicates::{incircle, orient2d};
use super::{GeomError, Point2, Result};
use serde::{Deserialize, Serialize};

const GHOST: usize = usize::MAX;
const NONE: usize = usize::MAX;

/// A non-degenerate triangle with its circumscribed-circle radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
    pub circumradius: f64,
}

impl Triangle {
    /// Returns `None` for collinear input.
    pub fn new(a: Point2, b: Point2, c: Point2) -> Option<Self> {
        if orient2d(a, b, c) == 0.0 {
            return None;
        }
        Some(Self { a, b, c, circumradius: circumradius(a, b, c) })
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.b - self.a).cross(self.c - self.a).abs()
    }

    pub fn circumcenter(&self) -> Point2 {
        circumcenter(self.a, self.b, self.c)
    }

    pub fn vertices(&self) -> [Point2; 3] {
        [self.a, self.b, self.c]
    }
}

pub(crate) fn circumcenter(a: Point2, b: Point2, c: Point2) -> Point2 {
    let b = b - a;
    let c = c - a;
    let d = 2.0 * b.cross(c);
    let bb = b.dot(b);
    let cc = c.dot(c);
    Point2::new(a.x + (c.y * bb - b.y * cc) / d, a.y + (b.x * cc - c.x * bb) / d)
}

pub(crate) fn circumradius(a: Point2, b: Point2, c: Point2) -> f64 {
    let ab = a.dist(b);
    let bc = b.dist(c);
    let ca = c.dist(a);
    let twice_area = (b - a).cross(c - a).abs();
    ab * bc * ca / (2.0 * twice_area)
}

/// Delaunay triangulation of `points`. Exact duplicates are merged first.
///
/// Cocircular configurations are resolved by insertion order; any resulting
/// diagonal satisfies the empty-circumcircle property.
pub fn delaunay(points: &[Point2]) -> Result<Vec<Triangle>> {
    let mesh = Mesh::build(points)?;
    Ok(mesh
        .triangles
        .iter()
        .map(|&[i, j, k]| {
            let (a, b, c) = (mesh.points[i], mesh.points[j], mesh.points[k]);
            Triangle { a, b, c, circumradius: circumradius(a, b, c) }
        })
        .collect())
}

/// Index form of a triangulation: deduplicated points and counter-clockwise
/// finite triangles.
#[derive(Debug, Clone)]
pub(crate) struct Mesh {
    pub points: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    // n[k] is the neighbour across the edge opposite v[k].
    n: [usize; 3],
    alive: bool,
}

impl Tri {
    fn ghost_slot(&self) -> Option<usize> {
        self.v.iter().position(|&v| v == GHOST)
    }
}

struct Builder<'a> {
    pts: &'a [Point2],
    tris: Vec<Tri>,
    free: Vec<usize>,
    stamp: Vec<u32>,
    epoch: u32,
    last: usize,
    rng: u32,
}

impl Mesh {
    pub fn build(input: &[Point2]) -> Result<Self> {
        if let Some(bad) = input.iter().find(|p| !p.is_finite()) {
            return Err(GeomError::Degenerate(format!("non-finite point {bad:?}")));
        }
        let mut points = input.to_vec();
        points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        points.dedup();
        if points.len() < 3 {
            return Err(GeomError::Degenerate(format!("need at least 3 distinct points, got {}", points.len())));
        }

        let (i0, i1) = (0, 1);
        let i2 = (2..points.len())
            .find(|&k| orient2d(points[i0], points[i1], points[k]) != 0.0)
            .ok_or_else(|| GeomError::Degenerate("all points are collinear".into()))?;

        let order = spatial_order(&points, [i0, i1, i2]);
        let mut builder = Builder::new(&points, [i0, i1, i2]);
        for idx in order {
            builder.insert(idx);
        }
        let triangles = builder.tris.iter().filter(|t| t.alive && t.ghost_slot().is_none()).map(|t| t.v).collect();
        Ok(Mesh { points, triangles })
    }
}

/// Insertion order: all points except the seed triangle, sorted along a
/// Morton curve so consecutive insertions are spatially close.
fn spatial_order(points: &[Point2], seed: [usize; 3]) -> Vec<usize> {
    let (lo, hi) = super::bbox(points).expect("non-empty");
    let span_x = (hi.x - lo.x).max(f64::MIN_POSITIVE);
    let span_y = (hi.y - lo.y).max(f64::MIN_POSITIVE);
    let quant = |v: f64, lo: f64, span: f64| -> u32 { (((v - lo) / span) * 65535.0).clamp(0.0, 65535.0) as u32 };
    let mut keyed: Vec<(u64, usize)> = (0..points.len())
        .filter(|i| !seed.contains(i))
        .map(|i| {
            let p = points[i];
            let code = interleave(quant(p.x, lo.x, span_x)) | (interleave(quant(p.y, lo.y, span_y)) << 1);
            (code, i)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn interleave(v: u32) -> u64 {
    let mut x = v as u64 & 0xffff;
    x = (x | (x << 8)) & 0x00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333;
    x = (x | (x << 1)) & 0x5555_5555;
    x
}

impl<'a> Builder<'a> {
    fn new(pts: &'a [Point2], seed: [usize; 3]) -> Self {
        let [a, mut b, mut c] = seed;
        if orient2d(pts[a], pts[b], pts[c]) < 0.0 {
            std::mem::swap(&mut b, &mut c);
        }
        let mut builder = Builder {
            pts,
            tris: Vec::with_capacity(pts.len() * 2 + 8),
            free: Vec::new(),
            stamp: Vec::new(),
            epoch: 0,
            last: 0,
            rng: 0x1234_5678,
        };
        // Finite seed triangle plus one ghost triangle per edge.
        let raw = [[a, b, c], [b, a, GHOST], [c, b, GHOST], [a, c, GHOST]];
        for v in raw {
            builder.tris.push(Tri { v, n: [NONE; 3], alive: true });
        }
        for t in 0..4 {
            for k in 0..3 {
                let (u, w) = edge(&builder.tris[t], k);
                let nb = (0..4)
                    .find(|&s| s != t && (0..3).any(|m| edge(&builder.tris[s], m) == (w, u)))
                    .expect("seed triangulation is closed");
                builder.tris[t].n[k] = nb;
            }
        }
        builder.stamp = vec![0; builder.tris.len()];
        builder
    }

    fn next_rand(&mut self) -> u32 {
        self.rng ^= self.rng << 13;
        self.rng ^= self.rng >> 17;
        self.rng ^= self.rng << 5;
        self.rng
    }

    fn point(&self, v: usize) -> Point2 {
        self.pts[v]
    }

    /// Visibility walk from the last touched triangle. Returns either a
    /// finite triangle containing `p` (possibly on its boundary) or a ghost
    /// triangle whose hull edge sees `p` strictly from outside.
    fn locate(&mut self, p: Point2) -> usize {
        let mut t = self.last;
        if !self.tris[t].alive {
            t = self.tris.iter().position(|t| t.alive).expect("live triangle");
        }
        if let Some(g) = self.tris[t].ghost_slot() {
            t = self.tris[t].n[g];
        }
        let mut guard = 0usize;
        'walk: loop {
            guard += 1;
            if guard > 4 * self.tris.len() + 16 {
                // Should not happen on a Delaunay triangulation; fall back to
                // an exhaustive scan rather than loop forever.
                return self.locate_scan(p);
            }
            let tri = self.tris[t];
            if tri.ghost_slot().is_some() {
                return t;
            }
            let start = (self.next_rand() % 3) as usize;
            for off in 0..3 {
                let k = (start + off) % 3;
                let (u, w) = edge(&tri, k);
                if orient2d(self.point(u), self.point(w), p) < 0.0 {
                    t = tri.n[k];
                    continue 'walk;
                }
            }
            return t;
        }
    }

    fn locate_scan(&self, p: Point2) -> usize {
        for (i, tri) in self.tris.iter().enumerate() {
            if tri.alive && self.in_conflict(tri, p) {
                return i;
            }
        }
        unreachable!("point is in conflict with no triangle")
    }

    fn in_conflict(&self, tri: &Tri, p: Point2) -> bool {
        match tri.ghost_slot() {
            None => incircle(self.point(tri.v[0]), self.point(tri.v[1]), self.point(tri.v[2]), p) > 0.0,
            Some(g) => {
                let a = self.point(tri.v[(g + 1) % 3]);
                let b = self.point(tri.v[(g + 2) % 3]);
                let o = orient2d(a, b, p);
                if o > 0.0 {
                    return true;
                }
                // On the hull edge's supporting line: conflict only strictly
                // inside the segment.
                o == 0.0 && (p - a).dot(b - a) > 0.0 && (p - b).dot(a - b) > 0.0
            }
        }
    }

    fn insert(&mut self, pi: usize) {
        let p = self.point(pi);
        let start = self.locate(p);
        if self.tris[start].v.iter().any(|&v| v != GHOST && self.point(v) == p) {
            return;
        }
        debug_assert!(self.in_conflict(&self.tris[start], p));

        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![start];
        self.stamp[start] = epoch;
        // (u, w, outer neighbour) with u -> w oriented as in the cavity triangle.
        let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
        let mut i = 0;
        while i < cavity.len() {
            let t = cavity[i];
            i += 1;
            for k in 0..3 {
                let nb = self.tris[t].n[k];
                if self.stamp[nb] == epoch {
                    continue;
                }
                if self.in_conflict(&self.tris[nb], p) {
                    self.stamp[nb] = epoch;
                    cavity.push(nb);
                } else {
                    let (u, w) = edge(&self.tris[t], k);
                    boundary.push((u, w, nb));
                }
            }
        }
        // A neighbour rejected early may have joined the cavity later.
        boundary.retain(|&(_, _, nb)| self.stamp[nb] != epoch);

        for &t in &cavity {
            self.tris[t].alive = false;
            self.free.push(t);
        }

        let mut created: Vec<usize> = Vec::with_capacity(boundary.len());
        for &(u, w, _) in &boundary {
            let tri = Tri { v: [u, w, pi], n: [NONE; 3], alive: true };
            let idx = if let Some(slot) = self.free.pop() {
                self.tris[slot] = tri;
                slot
            } else {
                self.tris.push(tri);
                self.stamp.push(0);
                self.tris.len() - 1
            };
            created.push(idx);
        }

        for (bi, &(u, w, outer)) in boundary.iter().enumerate() {
            let t = created[bi];
            self.tris[t].n[2] = outer;
            let k = (0..3)
                .find(|&k| edge(&self.tris[outer], k) == (w, u))
                .expect("outer neighbour shares the boundary edge");
            self.tris[outer].n[k] = t;
            // Across edge w -> p lies the new triangle starting at w.
            let next = boundary.iter().position(|&(s, _, _)| s == w).expect("closed cavity boundary");
            self.tris[t].n[0] = created[next];
            // Across edge p -> u lies the new triangle ending at u.
            let prev = boundary.iter().position(|&(_, e, _)| e == u).expect("closed cavity boundary");
            self.tris[t].n[1] = created[prev];
        }
        self.last = created[0];
    }
}

fn edge(tri: &Tri, k: usize) -> (usize, usize) {
    (tri.v[(k + 1) % 3], tri.v[(k + 2) % 3])
}

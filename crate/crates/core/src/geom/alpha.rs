//! Alpha-shapes over a Delaunay triangulation.
//!
//! A triangle survives when its circumradius is at most alpha. Surviving
//! triangles are grouped into edge-connected components; the component with
//! the largest area is kept and its outer boundary is returned as a polygon.

use super::delaunay::{circumradius, Mesh, Triangle};
use super::{convex_hull, GeomError, Point2, Polygon, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Alpha radius in normalized units. `f64::INFINITY` keeps every triangle.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub const INFINITY: AlphaParam = AlphaParam(f64::INFINITY);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && !alpha.is_nan() {
            Ok(Self(alpha))
        } else {
            Err(GeomError::InvalidParameter(format!("alpha must be > 0, got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn doubled(self) -> Self {
        Self(self.0 * 2.0)
    }
}

impl Default for AlphaParam {
    fn default() -> Self {
        Self(crate::DEFAULT_ALPHA)
    }
}

/// Triangulation of a point set annotated with circumradii, queried for
/// different alpha values without re-triangulating.
#[derive(Debug, Clone)]
pub struct AlphaComplex {
    points: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    radii: Vec<f64>,
}

/// Builds the alpha complex of `points`.
pub fn alpha_complex(points: &[Point2]) -> Result<AlphaComplex> {
    AlphaComplex::new(points)
}

/// Outline of the largest retained component at one alpha value.
#[derive(Debug, Clone)]
pub struct ShapeOutline {
    pub polygon: Polygon,
    /// Share of the (deduplicated) input points that are vertices of the
    /// kept component.
    pub coverage: f64,
}

impl AlphaComplex {
    pub fn new(points: &[Point2]) -> Result<Self> {
        let mesh = Mesh::build(points)?;
        let radii = mesh
            .triangles
            .iter()
            .map(|&[a, b, c]| circumradius(mesh.points[a], mesh.points[b], mesh.points[c]))
            .collect();
        Ok(Self { points: mesh.points, triangles: mesh.triangles, radii })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// All Delaunay triangles with their circumradii.
    pub fn triangles(&self) -> Vec<Triangle> {
        self.triangles
            .iter()
            .zip(&self.radii)
            .map(|(&[a, b, c], &r)| Triangle {
                a: self.points[a],
                b: self.points[b],
                c: self.points[c],
                circumradius: r,
            })
            .collect()
    }

    /// Indices (into [`AlphaComplex::triangles`]) of triangles with
    /// circumradius <= alpha.
    pub fn retained(&self, alpha: AlphaParam) -> Vec<usize> {
        (0..self.triangles.len()).filter(|&i| self.radii[i] <= alpha.value()).collect()
    }

    /// Outer boundary of the largest-area component retained at `alpha`.
    pub fn outline(&self, alpha: AlphaParam) -> Result<ShapeOutline> {
        let kept = self.retained(alpha);
        if kept.is_empty() {
            return Err(GeomError::EmptyShape { alpha: alpha.value() });
        }
        let component = self.largest_component(&kept);
        let mut used = vec![false; self.points.len()];
        for &t in &component {
            for v in self.triangles[t] {
                used[v] = true;
            }
        }
        let coverage = used.iter().filter(|&&u| u).count() as f64 / self.points.len() as f64;
        let ring = self.outer_ring(&component);
        let polygon = Polygon::new(ring.into_iter().map(|v| self.points[v]).collect())?;
        Ok(ShapeOutline { polygon, coverage })
    }

    fn largest_component(&self, kept: &[usize]) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..kept.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(kept.len() * 3);
        for (slot, &t) in kept.iter().enumerate() {
            let [a, b, c] = self.triangles[t];
            for (u, w) in [(a, b), (b, c), (c, a)] {
                if let Some(&other) = edge_owner.get(&(w, u)) {
                    let (ra, rb) = (find(&mut parent, slot), find(&mut parent, other));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
                edge_owner.insert((u, w), slot);
            }
        }
        let mut area: HashMap<usize, f64> = HashMap::new();
        for (slot, &t) in kept.iter().enumerate() {
            let root = find(&mut parent, slot);
            let [a, b, c] = self.triangles[t];
            let tri_area = 0.5 * (self.points[b] - self.points[a]).cross(self.points[c] - self.points[a]);
            *area.entry(root).or_insert(0.0) += tri_area;
        }
        // Largest area; ties go to the component with the smallest root.
        let best = area
            .iter()
            .max_by(|x, y| x.1.total_cmp(y.1).then(y.0.cmp(x.0)))
            .map(|(&root, _)| root)
            .expect("at least one component");
        (0..kept.len()).filter(|&slot| find(&mut parent, slot) == best).map(|slot| kept[slot]).collect()
    }

    /// Walks boundary edges of a component into closed rings and returns the
    /// one with the largest positive area. At a vertex with several unused
    /// outgoing edges the walk takes the tightest left turn, which splits
    /// rings at pinch vertices instead of producing figure-eights.
    fn outer_ring(&self, component: &[usize]) -> Vec<usize> {
        let mut directed: HashSet<(usize, usize)> = HashSet::with_capacity(component.len() * 3);
        for &t in component {
            let [a, b, c] = self.triangles[t];
            directed.extend([(a, b), (b, c), (c, a)]);
        }
        let mut boundary: Vec<(usize, usize)> =
            directed.iter().copied().filter(|&(u, w)| !directed.contains(&(w, u))).collect();
        boundary.sort_unstable();

        let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(u, w) in &boundary {
            outgoing.entry(u).or_default().push(w);
        }
        let mut used: HashSet<(usize, usize)> = HashSet::with_capacity(boundary.len());
        let mut best: Option<(f64, Vec<usize>)> = None;

        for &(s, t) in &boundary {
            if used.contains(&(s, t)) {
                continue;
            }
            used.insert((s, t));
            let mut ring = vec![s];
            let (mut prev, mut cur) = (s, t);
            while cur != s {
                ring.push(cur);
                let candidates: Vec<usize> =
                    outgoing[&cur].iter().copied().filter(|&w| !used.contains(&(cur, w))).collect();
                let next = match candidates.as_slice() {
                    [] => break,
                    [only] => *only,
                    many => self.tightest_turn(prev, cur, many),
                };
                used.insert((cur, next));
                prev = cur;
                cur = next;
            }
            let area = super::signed_area(&ring.iter().map(|&v| self.points[v]).collect::<Vec<_>>());
            if best.as_ref().is_none_or(|(a, _)| area > *a) {
                best = Some((area, ring));
            }
        }
        best.expect("component has a boundary").1
    }

    fn tightest_turn(&self, prev: usize, cur: usize, candidates: &[usize]) -> usize {
        let origin = self.points[cur];
        let back = self.points[prev] - origin;
        let clockwise_angle = |w: usize| {
            let d = self.points[w] - origin;
            let ccw = back.cross(d).atan2(back.dot(d));
            let cw = -ccw;
            if cw <= 0.0 {
                cw + std::f64::consts::TAU
            } else {
                cw
            }
        };
        *candidates
            .iter()
            .min_by(|&&a, &&b| clockwise_angle(a).total_cmp(&clockwise_angle(b)).then(a.cmp(&b)))
            .expect("non-empty candidates")
    }
}

/// Concave hull of `points` at the given alpha. Points are expected in
/// normalized units; see [`super::normalize_points`].
pub fn alpha_shape(points: &[Point2], alpha: AlphaParam) -> Result<Polygon> {
    Ok(AlphaComplex::new(points)?.outline(alpha)?.polygon)
}

/// When to give up on an alpha value and retry with a larger one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallbackPolicy {
    /// How many times alpha may be doubled before using the convex hull.
    pub max_doublings: u32,
    /// Minimum share of input points the kept component must touch.
    pub min_coverage: f64,
}

impl Default for FallbackPolicy {
    fn default() -> Self {
        Self { max_doublings: 4, min_coverage: crate::DEFAULT_MIN_COVERAGE }
    }
}

/// Which construction produced a fallback-aware shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShapeSource {
    Alpha(f64),
    ConvexHull,
}

/// Alpha-shape with retries: if no triangle survives, or the kept
/// component leaves too many points out, alpha is doubled (up to
/// `policy.max_doublings` times) before falling back to the convex hull.
pub fn alpha_shape_with_fallback(
    points: &[Point2],
    alpha: AlphaParam,
    policy: FallbackPolicy,
) -> Result<(Polygon, ShapeSource)> {
    alpha_shape_with_fallback_by(points, alpha, policy, |_| true)
}

/// Like [`alpha_shape_with_fallback`], with an extra caller check that a
/// candidate outline must also pass before it is accepted.
pub fn alpha_shape_with_fallback_by(
    points: &[Point2],
    alpha: AlphaParam,
    policy: FallbackPolicy,
    mut accept: impl FnMut(&Polygon) -> bool,
) -> Result<(Polygon, ShapeSource)> {
    let complex = AlphaComplex::new(points)?;
    let mut current = alpha;
    for _ in 0..=policy.max_doublings {
        match complex.outline(current) {
            Ok(outline) if outline.coverage >= policy.min_coverage && accept(&outline.polygon) => {
                return Ok((outline.polygon, ShapeSource::Alpha(current.value())));
            }
            Ok(_) | Err(GeomError::EmptyShape { .. }) => current = current.doubled(),
            Err(e) => return Err(e),
        }
    }
    let hull = convex_hull(complex.points())?;
    Ok((Polygon::new(hull)?, ShapeSource::ConvexHull))
}

//! Prediction maps -> text instances -> boundary points -> polygons.

use crate::encode::{LabelRaster, RasterGrid};
use crate::geom::{
    alpha_shape_with_fallback_by, min_area_rect, normalize_points, point_in_polygon, AlphaParam, FallbackPolicy,
    GeomError, NormTransform, Point2, Polygon, ShapeSource,
};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("instance {instance_id} rejected: {reason}")]
    InstanceRejected { instance_id: usize, reason: String },
    #[error("invalid prediction raster: {0}")]
    InvalidRaster(String),
}

/// Network output for one image. Arrays are indexed `[[row, col]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRaster {
    pub grid: RasterGrid,
    pub prob: Array2<f64>,
    pub dist_x: Array2<f64>,
    pub dist_y: Array2<f64>,
}

impl PredictionRaster {
    pub fn new(
        grid: RasterGrid,
        prob: Array2<f64>,
        dist_x: Array2<f64>,
        dist_y: Array2<f64>,
    ) -> Result<Self, DecodeError> {
        let raster = Self { grid, prob, dist_x, dist_y };
        raster.validate()?;
        Ok(raster)
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let shape = self.grid.shape();
        for (name, dim) in [("prob", self.prob.dim()), ("dist_x", self.dist_x.dim()), ("dist_y", self.dist_y.dim())] {
            if dim != shape {
                return Err(DecodeError::InvalidRaster(format!("{name} has shape {dim:?}, grid expects {shape:?}")));
            }
        }
        if let Some(v) = self.prob.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DecodeError::InvalidRaster(format!("probability {v} outside [0, 1]")));
        }
        Ok(())
    }

    /// A perfect prediction: probability equals the label mask.
    pub fn from_labels(labels: &LabelRaster) -> Self {
        Self {
            grid: labels.grid,
            prob: labels.mask.mapv(f64::from),
            dist_x: labels.dist_x.clone(),
            dist_y: labels.dist_y.clone(),
        }
    }

    /// Adds i.i.d. Gaussian noise of standard deviation `sigma` (pixels) to
    /// both distance maps. The underlying standard-normal draws depend only
    /// on `seed` and the grid, so different sigmas scale the same pattern.
    pub fn with_distance_noise(&self, sigma: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for (dx, dy) in out.dist_x.iter_mut().zip(out.dist_y.iter_mut()) {
            let zx: f64 = StandardNormal.sample(&mut rng);
            let zy: f64 = StandardNormal.sample(&mut rng);
            *dx += sigma * zx;
            *dy += sigma * zy;
        }
        out
    }
}

/// A cell as `(row, col)`.
pub type Cell = (usize, usize);

/// Dense regressed boundary points of one text instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPointSet {
    pub points: Vec<Point2>,
    pub norm: NormTransform,
    pub instance_id: usize,
    pub score: f64,
    /// Sampled cell centres of the component; a reconstruction must
    /// enclose most of them.
    pub anchors: Vec<Point2>,
}

/// A reconstructed text polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub polygon: Polygon,
    pub quad: Option<Polygon>,
    pub score: f64,
}

impl Detection {
    pub fn new(polygon: Polygon, score: f64) -> Self {
        Self { polygon, quad: None, score }
    }

    /// Attaches the minimum-area oriented rectangle of the polygon.
    pub fn with_quad(mut self) -> Self {
        self.quad = min_area_rect(&self.polygon).ok();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub prob_threshold: f64,
    pub alpha: AlphaParam,
    pub fallback: FallbackPolicy,
    pub min_points: usize,
    /// `None` derives the size filter from the stride (64 cells at stride 1).
    pub min_cells: Option<usize>,
    /// Boundary points closer than this (pixels) are merged.
    pub merge_radius: f64,
    /// Each regressed point is averaged with those of component cells
    /// within this Chebyshev radius. 0 disables.
    pub smooth_radius: usize,
    pub derive_quads: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            prob_threshold: 0.5,
            alpha: AlphaParam::default(),
            fallback: FallbackPolicy::default(),
            min_points: 8,
            min_cells: None,
            merge_radius: 0.5,
            smooth_radius: DEFAULT_SMOOTH_RADIUS,
            derive_quads: false,
        }
    }
}

pub const DEFAULT_SMOOTH_RADIUS: usize = 1;

impl DecodeConfig {
    pub fn min_cells_for(&self, grid: &RasterGrid) -> usize {
        self.min_cells.unwrap_or_else(|| default_min_cells(grid.stride))
    }
}

/// 64 image pixels worth of cells, at least one.
pub fn default_min_cells(stride: usize) -> usize {
    64usize.div_ceil(stride * stride).max(1)
}

pub fn binarize(prob: &Array2<f64>, threshold: f64) -> Array2<u8> {
    prob.mapv(|p| u8::from(p >= threshold))
}

/// 4-connected components of the non-zero cells, largest first (ties by
/// first cell in row-major order). Components with fewer than `min_cells`
/// cells are dropped. Cells inside a component are in row-major order.
pub fn extract_instances(mask: &Array2<u8>, min_cells: usize) -> Vec<Vec<Cell>> {
    let (rows, cols) = mask.dim();
    let mut seen = Array2::<bool>::from_elem((rows, cols), false);
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if mask[[r, c]] == 0 || seen[[r, c]] {
                continue;
            }
            let mut cells = Vec::new();
            seen[[r, c]] = true;
            stack.push((r, c));
            while let Some((y, x)) = stack.pop() {
                cells.push((y, x));
                let mut visit = |ny: usize, nx: usize| {
                    if mask[[ny, nx]] != 0 && !seen[[ny, nx]] {
                        seen[[ny, nx]] = true;
                        stack.push((ny, nx));
                    }
                };
                if y > 0 {
                    visit(y - 1, x);
                }
                if y + 1 < rows {
                    visit(y + 1, x);
                }
                if x > 0 {
                    visit(y, x - 1);
                }
                if x + 1 < cols {
                    visit(y, x + 1);
                }
            }
            if cells.len() >= min_cells {
                cells.sort_unstable();
                components.push(cells);
            }
        }
    }
    // Discovery order is row-major by first cell, so a stable sort keeps
    // that as the tie-break.
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));
    components
}

/// Regressed boundary points of one component: cell centre plus predicted
/// offset, with near-duplicates (closer than `merge_radius`) merged in
/// row-major order. The score is the mean probability over the component.
pub fn boundary_points(
    component: &[Cell],
    pred: &PredictionRaster,
    instance_id: usize,
    min_points: usize,
    merge_radius: f64,
) -> Result<BoundaryPointSet, DecodeError> {
    smoothed_boundary_points(component, pred, instance_id, min_points, merge_radius, 0)
}

/// [`boundary_points`] where each cell's point is first replaced by the mean
/// point of the component cells within `smooth_radius` of it.
pub fn smoothed_boundary_points(
    component: &[Cell],
    pred: &PredictionRaster,
    instance_id: usize,
    min_points: usize,
    merge_radius: f64,
    smooth_radius: usize,
) -> Result<BoundaryPointSet, DecodeError> {
    if component.is_empty() {
        return Err(DecodeError::InstanceRejected { instance_id, reason: "empty component".into() });
    }
    let score = component.iter().map(|&(r, c)| pred.prob[[r, c]]).sum::<f64>() / component.len() as f64;

    let raw = |r: usize, c: usize| {
        let center = pred.grid.cell_center(c, r);
        Point2::new(center.x + pred.dist_x[[r, c]], center.y + pred.dist_y[[r, c]])
    };
    let regressed: Vec<Point2> = if smooth_radius == 0 {
        component.iter().map(|&(r, c)| raw(r, c)).collect()
    } else {
        smooth_points(component, smooth_radius, raw)
    };

    let mut merger = PointMerger::new(merge_radius);
    for p in regressed {
        if p.is_finite() {
            merger.offer(p);
        }
    }
    let points = merger.into_points();
    if points.len() < min_points {
        return Err(DecodeError::InstanceRejected {
            instance_id,
            reason: format!("{} boundary points, need {min_points}", points.len()),
        });
    }
    let (_, norm) =
        normalize_points(&points).map_err(|e| DecodeError::InstanceRejected { instance_id, reason: e.to_string() })?;
    let step = component.len().div_ceil(MAX_ANCHORS);
    let anchors = component.iter().step_by(step).map(|&(r, c)| pred.grid.cell_center(c, r)).collect();
    Ok(BoundaryPointSet { points, norm, instance_id, score, anchors })
}

fn smooth_points(component: &[Cell], radius: usize, raw: impl Fn(usize, usize) -> Point2) -> Vec<Point2> {
    let r0 = component.iter().map(|c| c.0).min().unwrap_or(0);
    let c0 = component.iter().map(|c| c.1).min().unwrap_or(0);
    let r1 = component.iter().map(|c| c.0).max().unwrap_or(0);
    let c1 = component.iter().map(|c| c.1).max().unwrap_or(0);
    let mut member: Array2<Option<Point2>> = Array2::from_elem((r1 - r0 + 1, c1 - c0 + 1), None);
    for &(r, c) in component {
        member[[r - r0, c - c0]] = Some(raw(r, c));
    }
    component
        .iter()
        .map(|&(r, c)| {
            let (mut sum, mut n) = (Point2::new(0.0, 0.0), 0.0);
            for rr in r.saturating_sub(radius).max(r0)..=(r + radius).min(r1) {
                for cc in c.saturating_sub(radius).max(c0)..=(c + radius).min(c1) {
                    if let Some(p) = member[[rr - r0, cc - c0]] {
                        sum = sum + p;
                        n += 1.0;
                    }
                }
            }
            sum * (1.0 / n)
        })
        .collect()
}

const MAX_ANCHORS: usize = 256;

/// Greedy radius-based deduplication on a hash grid.
struct PointMerger {
    radius: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point2>,
}

impl PointMerger {
    fn new(radius: f64) -> Self {
        Self { radius, buckets: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        let size = self.radius.max(1e-9);
        ((p.x / size).floor() as i64, (p.y / size).floor() as i64)
    }

    fn offer(&mut self, p: Point2) {
        if self.radius > 0.0 {
            let (kx, ky) = self.key(p);
            let r2 = self.radius * self.radius;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                        if ids.iter().any(|&i| self.points[i].dist2(p) < r2) {
                            return;
                        }
                    }
                }
            }
            self.buckets.entry((kx, ky)).or_default().push(self.points.len());
        }
        self.points.push(p);
    }

    fn into_points(self) -> Vec<Point2> {
        self.points
    }
}

/// Normalize, take the alpha-shape (with fallbacks), and map back to
/// image pixels. Outlines that leave the component anchors outside count
/// as failures and trigger the same alpha doubling.
pub fn reconstruct(
    set: &BoundaryPointSet,
    alpha: AlphaParam,
    fallback: FallbackPolicy,
) -> Result<(Detection, ShapeSource), DecodeError> {
    let reject = |e: GeomError| DecodeError::InstanceRejected { instance_id: set.instance_id, reason: e.to_string() };
    let normalized: Vec<Point2> = set.points.iter().map(|&p| set.norm.apply(p)).collect();
    let anchors: Vec<Point2> = set.anchors.iter().map(|&p| set.norm.apply(p)).collect();
    let encloses_anchors = |poly: &Polygon| {
        let inside = anchors.iter().filter(|&&a| point_in_polygon(a, poly.vertices())).count();
        inside as f64 >= fallback.min_coverage * anchors.len() as f64
    };
    let (shape, source) =
        alpha_shape_with_fallback_by(&normalized, alpha, fallback, encloses_anchors).map_err(reject)?;
    let polygon = crate::geom::denormalize_polygon(&shape, &set.norm);
    Ok((Detection::new(polygon, set.score), source))
}

/// Detections plus per-image bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub detections: Vec<Detection>,
    pub rejected: Vec<DecodeError>,
    pub sources: Vec<ShapeSource>,
}

/// Full decode: binarize, group cells into instances, regress boundary
/// points, reconstruct polygons. Detections are sorted by score,
/// descending (stable on ties).
pub fn decode(pred: &PredictionRaster, cfg: &DecodeConfig) -> DecodeOutput {
    let mask = binarize(&pred.prob, cfg.prob_threshold);
    let components = extract_instances(&mask, cfg.min_cells_for(&pred.grid));
    let mut found: Vec<(Detection, ShapeSource)> = Vec::with_capacity(components.len());
    let mut rejected = Vec::new();
    for (id, cells) in components.iter().enumerate() {
        let result = smoothed_boundary_points(cells, pred, id, cfg.min_points, cfg.merge_radius, cfg.smooth_radius)
            .and_then(|set| reconstruct(&set, cfg.alpha, cfg.fallback));
        match result {
            Ok((det, source)) => {
                let det = if cfg.derive_quads { det.with_quad() } else { det };
                found.push((det, source));
            }
            Err(e) => rejected.push(e),
        }
    }
    found.sort_by(|a, b| b.0.score.total_cmp(&a.0.score));
    let (detections, sources) = found.into_iter().unzip();
    DecodeOutput { detections, rejected, sources }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{encode, split_sides};
    use crate::geom::{nearest_point_on_polygon, polygon_iou};

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn binarize_thresholds_per_cell() {
        let prob = Array2::from_shape_vec((2, 3), vec![0.9, 0.1, 0.5, 0.49, 1.0, 0.0]).unwrap();
        assert_eq!(binarize(&prob, 0.5).into_raw_vec_and_offset().0, vec![1, 0, 1, 0, 1, 0]);
        assert!(binarize(&Array2::from_elem((4, 4), 0.9), 0.5).iter().all(|&v| v == 1));
        assert!(binarize(&Array2::from_elem((4, 4), 0.1), 0.5).iter().all(|&v| v == 0));
    }

    #[test]
    fn components_use_four_connectivity() {
        let mut mask = Array2::<u8>::zeros((6, 6));
        mask[[0, 0]] = 1;
        mask[[1, 1]] = 1;
        for c in 3..6 {
            mask[[4, c]] = 1;
            mask[[5, c]] = 1;
        }
        let comps = extract_instances(&mask, 1);
        assert_eq!(comps.len(), 3);
        assert_eq!(comps[0].len(), 6);
        assert_eq!(comps[1], vec![(0, 0)]);
        assert_eq!(extract_instances(&mask, 2).len(), 1);
        assert!(extract_instances(&Array2::zeros((3, 3)), 1).is_empty());
    }

    #[test]
    fn default_min_cells_by_stride() {
        assert_eq!(default_min_cells(1), 64);
        assert_eq!(default_min_cells(4), 4);
        assert_eq!(default_min_cells(16), 1);
    }

    fn rect_prediction() -> (PredictionRaster, Polygon) {
        let ann = split_sides(&[p(10.0, 10.0), p(110.0, 10.0), p(110.0, 50.0), p(10.0, 50.0)]).unwrap();
        let grid = RasterGrid::new(120, 60, 1).unwrap();
        let (labels, _) = encode(std::slice::from_ref(&ann), grid).unwrap();
        (PredictionRaster::from_labels(&labels), ann.polygon())
    }

    #[test]
    fn perfect_points_lie_on_the_boundary() {
        let (pred, poly) = rect_prediction();
        let comps = extract_instances(&binarize(&pred.prob, 0.5), 64);
        assert_eq!(comps.len(), 1);
        let set = boundary_points(&comps[0], &pred, 0, 8, 0.5).unwrap();
        assert_eq!(set.score, 1.0);
        for &q in &set.points {
            assert!(nearest_point_on_polygon(q, &poly).distance < 1e-6);
        }
    }

    #[test]
    fn zero_offsets_give_cell_centres() {
        let grid = RasterGrid::new(4, 4, 2).unwrap();
        let pred =
            PredictionRaster::new(grid, Array2::from_elem((4, 4), 1.0), Array2::zeros((4, 4)), Array2::zeros((4, 4)))
                .unwrap();
        let cells: Vec<Cell> = (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).collect();
        let set = boundary_points(&cells, &pred, 0, 8, 0.5).unwrap();
        assert_eq!(set.points.len(), 16);
        assert_eq!(set.points[0], p(1.0, 1.0));
        assert_eq!(set.points[5], p(3.0, 3.0));
    }

    #[test]
    fn small_component_is_rejected() {
        let (pred, _) = rect_prediction();
        let err = boundary_points(&[(30, 30), (30, 31), (30, 32)], &pred, 7, 8, 0.5).unwrap_err();
        assert!(matches!(err, DecodeError::InstanceRejected { instance_id: 7, .. }));
    }

    #[test]
    fn rectangle_boundary_reconstructs() {
        let poly = Polygon::rect(p(20.0, 30.0), p(220.0, 70.0)).unwrap();
        let mut pts = Vec::new();
        for (a, b) in poly.edges() {
            let n = (a.dist(b) / 1.0) as usize;
            for i in 0..n {
                pts.push(a.lerp(b, i as f64 / n as f64));
            }
        }
        let (_, norm) = normalize_points(&pts).unwrap();
        let set = BoundaryPointSet { points: pts, norm, instance_id: 0, score: 0.8, anchors: Vec::new() };
        let (det, _) = reconstruct(&set, AlphaParam::default(), FallbackPolicy::default()).unwrap();
        assert!(polygon_iou(&det.polygon, &poly, 512).unwrap() >= 0.95);
        assert_eq!(det.score, 0.8);
    }

    #[test]
    fn three_points_give_their_triangle() {
        let pts = vec![p(0.0, 0.0), p(30.0, 5.0), p(10.0, 20.0)];
        let (_, norm) = normalize_points(&pts).unwrap();
        let set = BoundaryPointSet { points: pts.clone(), norm, instance_id: 0, score: 1.0, anchors: Vec::new() };
        let (det, _) = reconstruct(&set, AlphaParam::default(), FallbackPolicy::default()).unwrap();
        assert_eq!(det.polygon.len(), 3);
        for q in pts {
            assert!(det.polygon.vertices().iter().any(|v| v.dist(q) < 1e-9));
        }
    }

    #[test]
    fn decode_rectangle_and_empty() {
        let (pred, poly) = rect_prediction();
        let out = decode(&pred, &DecodeConfig { derive_quads: true, ..Default::default() });
        assert_eq!(out.detections.len(), 1);
        assert!(out.rejected.is_empty());
        assert!(polygon_iou(&out.detections[0].polygon, &poly, 512).unwrap() >= 0.9);
        assert!(out.detections[0].quad.is_some());

        let mut empty = pred.clone();
        empty.prob.fill(0.0);
        assert!(decode(&empty, &DecodeConfig::default()).detections.is_empty());
    }

    #[test]
    fn noise_is_deterministic_and_scaled() {
        let (pred, _) = rect_prediction();
        let a = pred.with_distance_noise(1.0, 9);
        let b = pred.with_distance_noise(2.0, 9);
        let da = &a.dist_x - &pred.dist_x;
        let db = &b.dist_x - &pred.dist_x;
        for (x, y) in da.iter().zip(db.iter()) {
            assert!((2.0 * x - y).abs() < 1e-9);
        }
        assert_eq!(a, pred.with_distance_noise(1.0, 9));
    }

    #[test]
    fn raster_validation() {
        let grid = RasterGrid::new(3, 2, 1).unwrap();
        assert!(
            PredictionRaster::new(grid, Array2::zeros((2, 3)), Array2::zeros((2, 3)), Array2::zeros((3, 2))).is_err()
        );
        assert!(PredictionRaster::new(
            grid,
            Array2::from_elem((2, 3), 1.5),
            Array2::zeros((2, 3)),
            Array2::zeros((2, 3))
        )
        .is_err());
    }
}

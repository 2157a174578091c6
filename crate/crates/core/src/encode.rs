//! Ground-truth generation: annotation polygon -> central text region mask
//! plus signed x/y offsets to the nearest annotation boundary point.

use crate::geom::{nearest_point_on_polygon, row_spans, GeomError, GridSpec, Point2, Polygon, Triangle};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of a connecting edge's length at which the central-region
/// vertices are placed, measured from each end.
pub const SHRINK_FRACTION: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("malformed annotation: {0}")]
    MalformedAnnotation(String),
    #[error("invalid raster grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// A text annotation split into its upper and lower chains, both running
/// left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationPolygon {
    pub upper: Vec<Point2>,
    pub lower: Vec<Point2>,
    pub ignore: bool,
    pub source_vertex_count: usize,
    /// Transcription, when the source format carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl AnnotationPolygon {
    /// Validates chain lengths, finiteness and simplicity of the closed ring.
    pub fn new(upper: Vec<Point2>, lower: Vec<Point2>, ignore: bool) -> Result<Self> {
        if upper.len() < 2 || lower.len() < 2 {
            return Err(CodecError::MalformedAnnotation(format!(
                "chains need at least 2 vertices each, got {} upper and {} lower",
                upper.len(),
                lower.len()
            )));
        }
        let source_vertex_count = upper.len() + lower.len();
        let ann = Self { upper, lower, ignore, source_vertex_count, text: None };
        let ring = ann.ring();
        if ring.iter().any(|p| !p.is_finite()) {
            return Err(CodecError::MalformedAnnotation("non-finite vertex".into()));
        }
        let poly = Polygon::new(ring).map_err(|e| CodecError::MalformedAnnotation(e.to_string()))?;
        if !poly.is_simple() {
            return Err(CodecError::MalformedAnnotation("annotation polygon self-intersects".into()));
        }
        Ok(ann)
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    /// Closed vertex ring: upper chain left to right, then lower chain
    /// right to left.
    pub fn ring(&self) -> Vec<Point2> {
        self.upper.iter().chain(self.lower.iter().rev()).copied().collect()
    }

    pub fn polygon(&self) -> Polygon {
        Polygon::new(self.ring()).expect("validated at construction")
    }

    pub fn is_quad(&self) -> bool {
        self.upper.len() == 2 && self.lower.len() == 2
    }
}

/// Splits a vertex list in dataset order (upper chain left to right, then
/// lower chain right to left) into an annotation.
pub fn split_sides(vertices: &[Point2]) -> Result<AnnotationPolygon> {
    let n = vertices.len();
    if n < 4 || !n.is_multiple_of(2) {
        return Err(CodecError::MalformedAnnotation(format!("expected an even vertex count >= 4, got {n}")));
    }
    let upper = vertices[..n / 2].to_vec();
    let lower = vertices[n / 2..].iter().rev().copied().collect();
    AnnotationPolygon::new(upper, lower, false)
}

fn arc_params(chain: &[Point2]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for w in chain.windows(2) {
        acc.push(acc.last().unwrap() + w[0].dist(w[1]));
    }
    let total = *acc.last().unwrap();
    if total > 0.0 {
        acc.iter_mut().for_each(|t| *t /= total);
    } else {
        let n = (acc.len() - 1) as f64;
        acc.iter_mut().enumerate().for_each(|(i, t)| *t = i as f64 / n);
    }
    acc
}

/// Zip-merge of the two chains: triangles as vertex triples, and the
/// chain-connecting edges in order (upper end first), including both end
/// edges.
fn zip_merge(a: &AnnotationPolygon) -> (Vec<[Point2; 3]>, Vec<(Point2, Point2)>) {
    let (up, lo) = (&a.upper, &a.lower);
    let (tu, tl) = (arc_params(up), arc_params(lo));
    let (mut i, mut j) = (0, 0);
    let mut tris = Vec::with_capacity(up.len() + lo.len() - 2);
    let mut edges = vec![(up[0], lo[0])];
    while i + 1 < up.len() || j + 1 < lo.len() {
        let advance_upper = if i + 1 == up.len() {
            false
        } else if j + 1 == lo.len() {
            true
        } else {
            tu[i + 1] <= tl[j + 1]
        };
        if advance_upper {
            tris.push([up[i], up[i + 1], lo[j]]);
            i += 1;
        } else {
            tris.push([up[i], lo[j], lo[j + 1]]);
            j += 1;
        }
        edges.push((up[i], lo[j]));
    }
    (tris, edges)
}

/// Triangulates the annotation so every triangle has two vertices on one
/// chain and the third on the other. Collinear triples are skipped.
pub fn triangulate_annotation(a: &AnnotationPolygon) -> Result<Vec<Triangle>> {
    if a.upper.len() < 2 || a.lower.len() < 2 {
        return Err(CodecError::MalformedAnnotation("chains need at least 2 vertices".into()));
    }
    let (tris, _) = zip_merge(a);
    Ok(tris.into_iter().filter_map(|[p, q, r]| Triangle::new(p, q, r)).collect())
}

/// Central text region: on every chain-connecting edge of the
/// triangulation, take the points at 25% of its length from each end and
/// join them into an inner upper and inner lower chain.
pub fn central_region_polygon(a: &AnnotationPolygon) -> Result<Polygon> {
    let (_, edges) = zip_merge(a);
    let mut upper = Vec::with_capacity(edges.len());
    let mut lower = Vec::with_capacity(edges.len());
    for (u, l) in edges {
        if u == l {
            continue;
        }
        upper.push(u.lerp(l, SHRINK_FRACTION));
        lower.push(u.lerp(l, 1.0 - SHRINK_FRACTION));
    }
    let ring: Vec<Point2> = upper.into_iter().chain(lower.into_iter().rev()).collect();
    if ring.len() < 3 {
        return Err(CodecError::MalformedAnnotation("central region has fewer than 3 vertices".into()));
    }
    Polygon::new(ring).map_err(|e| CodecError::MalformedAnnotation(format!("central region: {e}")))
}

/// Raster geometry: `width x height` cells of `stride x stride` image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub width: usize,
    pub height: usize,
    pub stride: usize,
}

impl RasterGrid {
    pub fn new(width: usize, height: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(CodecError::InvalidGrid("stride must be >= 1".into()));
        }
        Ok(Self { width, height, stride })
    }

    /// Smallest grid covering an image of `image_w x image_h` pixels.
    pub fn for_image(image_w: usize, image_h: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(CodecError::InvalidGrid("stride must be >= 1".into()));
        }
        Ok(Self { width: image_w.div_ceil(stride), height: image_h.div_ceil(stride), stride })
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        let s = self.stride as f64;
        Point2::new((col as f64 + 0.5) * s, (row as f64 + 0.5) * s)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub(crate) fn spec(&self) -> GridSpec {
        let s = self.stride as f64;
        GridSpec { origin: Point2::new(0.0, 0.0), cell_w: s, cell_h: s, cols: self.width, rows: self.height }
    }

    /// Rows whose centres may fall inside a polygon with this bounding box.
    pub(crate) fn row_range(&self, lo: Point2, hi: Point2) -> std::ops::Range<usize> {
        let s = self.stride as f64;
        let first = ((lo.y / s) - 0.5).floor().max(0.0) as usize;
        let last = (((hi.y / s) - 0.5).ceil() + 1.0).max(0.0) as usize;
        first.min(self.height)..last.min(self.height)
    }
}

/// Training targets for one image. Arrays are indexed `[[row, col]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRaster {
    pub grid: RasterGrid,
    pub mask: Array2<u8>,
    pub dist_x: Array2<f64>,
    pub dist_y: Array2<f64>,
    pub ignore_mask: Array2<u8>,
}

impl LabelRaster {
    pub fn zeros(grid: RasterGrid) -> Self {
        let shape = grid.shape();
        Self {
            grid,
            mask: Array2::zeros(shape),
            dist_x: Array2::zeros(shape),
            dist_y: Array2::zeros(shape),
            ignore_mask: Array2::zeros(shape),
        }
    }
}

/// Side information produced while encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeDiagnostics {
    /// Cells claimed by more than one central region.
    pub conflicts: usize,
    /// Annotations that produced a central region.
    pub instances: usize,
    /// Per-cell owner: 0 for none, otherwise annotation index + 1.
    pub owner: Array2<u32>,
}

/// Rasterizes central regions and distance targets for all annotations.
///
/// A cell belongs to a central region when its centre is inside it. Cells
/// claimed by several regions go to the annotation with the nearest
/// boundary (earlier annotation on exact ties). Ignored annotations only
/// mark `ignore_mask`, over their full polygon.
pub fn encode(annotations: &[AnnotationPolygon], grid: RasterGrid) -> Result<(LabelRaster, EncodeDiagnostics)> {
    let mut out = LabelRaster::zeros(grid);
    let mut owner: Array2<u32> = Array2::zeros(grid.shape());
    let mut best_dist: Array2<f64> = Array2::from_elem(grid.shape(), f64::INFINITY);
    let mut conflicts = 0;
    let mut instances = 0;
    let spec = grid.spec();

    for (k, ann) in annotations.iter().enumerate() {
        let full = ann.polygon();
        if ann.ignore {
            let (lo, hi) = full.bbox();
            for row in grid.row_range(lo, hi) {
                for (s, e) in row_spans(full.vertices(), &spec, row) {
                    out.ignore_mask.slice_mut(ndarray::s![row, s..e]).fill(1);
                }
            }
            continue;
        }
        let central = central_region_polygon(ann)?;
        instances += 1;
        let (lo, hi) = central.bbox();
        for row in grid.row_range(lo, hi) {
            for (s, e) in row_spans(central.vertices(), &spec, row) {
                for col in s..e {
                    let near = nearest_point_on_polygon(grid.cell_center(col, row), &full);
                    let cell = [row, col];
                    if owner[cell] != 0 {
                        conflicts += 1;
                        if near.distance >= best_dist[cell] {
                            continue;
                        }
                    }
                    owner[cell] = k as u32 + 1;
                    best_dist[cell] = near.distance;
                    out.mask[cell] = 1;
                    out.dist_x[cell] = near.dx;
                    out.dist_y[cell] = near.dy;
                }
            }
        }
    }
    Ok((out, EncodeDiagnostics { conflicts, instances, owner }))
}

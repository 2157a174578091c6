//! Scan conversion by cell centres (even-odd rule) and rasterized IoU.

use super::{GeomError, Point2, Polygon, Result};

/// A regular grid of `cols x rows` cells anchored at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point2,
    pub cell_w: f64,
    pub cell_h: f64,
    pub cols: usize,
    pub rows: usize,
}

impl GridSpec {
    pub fn center_x(&self, col: usize) -> f64 {
        self.origin.x + (col as f64 + 0.5) * self.cell_w
    }

    pub fn center_y(&self, row: usize) -> f64 {
        self.origin.y + (row as f64 + 0.5) * self.cell_h
    }
}

/// Even-odd point-in-polygon test. Points exactly on a left or bottom edge
/// count as inside, on a right or top edge as outside, so a tiling of
/// polygons assigns every point to exactly one tile.
pub fn point_in_polygon(p: Point2, vertices: &[Point2]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = crossing_x(a, b, p.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[inline]
fn crossing_x(a: Point2, b: Point2, y: f64) -> f64 {
    a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
}

/// Half-open column ranges of cells in `row` whose centres are inside the
/// polygon, consistent with [`point_in_polygon`].
pub fn row_spans(vertices: &[Point2], grid: &GridSpec, row: usize) -> Vec<(usize, usize)> {
    let y = grid.center_y(row);
    let n = vertices.len();
    let mut xs: Vec<f64> = Vec::new();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a.y > y) != (b.y > y) {
            xs.push(crossing_x(a, b, y));
        }
    }
    xs.sort_by(f64::total_cmp);
    let mut spans = Vec::with_capacity(xs.len() / 2);
    for pair in xs.chunks_exact(2) {
        let start = first_col_at_or_after(grid, pair[0]);
        let end = first_col_at_or_after(grid, pair[1]);
        if end > start {
            spans.push((start, end));
        }
    }
    spans
}

/// Smallest column whose centre is >= x (or `cols`).
fn first_col_at_or_after(grid: &GridSpec, x: f64) -> usize {
    let guess = ((x - grid.origin.x) / grid.cell_w - 0.5).ceil();
    let mut col = if guess <= 0.0 {
        0
    } else if guess >= grid.cols as f64 {
        grid.cols
    } else {
        guess as usize
    };
    while col > 0 && grid.center_x(col - 1) >= x {
        col -= 1;
    }
    while col < grid.cols && grid.center_x(col) < x {
        col += 1;
    }
    col
}

fn span_len(spans: &[(usize, usize)]) -> usize {
    spans.iter().map(|(s, e)| e - s).sum()
}

fn span_overlap(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let (mut i, mut j, mut acc) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            acc += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    acc
}

/// Intersection-over-union of two polygons, both scan-converted onto a
/// shared `resolution x resolution` grid spanning their joint bounding box.
pub fn polygon_iou(a: &Polygon, b: &Polygon, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(GeomError::InvalidParameter(format!("IoU resolution must be >= 64, got {resolution}")));
    }
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    if alo.x > bhi.x || blo.x > ahi.x || alo.y > bhi.y || blo.y > ahi.y {
        return Ok(0.0);
    }
    let lo = Point2::new(alo.x.min(blo.x), alo.y.min(blo.y));
    let hi = Point2::new(ahi.x.max(bhi.x), ahi.y.max(bhi.y));
    let grid = GridSpec {
        origin: lo,
        cell_w: (hi.x - lo.x) / resolution as f64,
        cell_h: (hi.y - lo.y) / resolution as f64,
        cols: resolution,
        rows: resolution,
    };
    let (mut inter, mut union) = (0usize, 0usize);
    for row in 0..grid.rows {
        let sa = row_spans(a.vertices(), &grid, row);
        let sb = row_spans(b.vertices(), &grid, row);
        let i = span_overlap(&sa, &sb);
        inter += i;
        union += span_len(&sa) + span_len(&sb) - i;
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn square(x0: f64, y0: f64, s: f64) -> Polygon {
        Polygon::rect(p(x0, y0), p(x0 + s, y0 + s)).unwrap()
    }

    #[test]
    fn spans_match_point_tests() {
        let poly = Polygon::new(vec![p(0.3, 0.1), p(9.7, 2.2), p(6.1, 9.3), p(4.0, 4.0), p(1.2, 8.8)]).unwrap();
        let grid = GridSpec { origin: p(-1.0, -1.0), cell_w: 0.37, cell_h: 0.41, cols: 32, rows: 28 };
        for row in 0..grid.rows {
            let spans = row_spans(poly.vertices(), &grid, row);
            for col in 0..grid.cols {
                let inside = spans.iter().any(|&(s, e)| (s..e).contains(&col));
                let c = p(grid.center_x(col), grid.center_y(row));
                assert_eq!(inside, point_in_polygon(c, poly.vertices()), "cell ({col},{row})");
            }
        }
    }

    #[test]
    fn self_iou_is_near_one() {
        let poly = Polygon::new(vec![p(0.0, 0.0), p(10.0, 1.0), p(7.0, 8.0), p(5.0, 3.0), p(1.0, 6.0)]).unwrap();
        assert!(polygon_iou(&poly, &poly, 512).unwrap() >= 0.99);
    }

    #[test]
    fn half_overlap_is_one_third() {
        let a = square(0.0, 0.0, 1.0);
        let b = Polygon::rect(p(0.5, 0.0), p(1.5, 1.0)).unwrap();
        let iou = polygon_iou(&a, &b, 512).unwrap();
        assert!((iou - 1.0 / 3.0).abs() <= 0.02, "{iou}");
        assert_eq!(iou, polygon_iou(&b, &a, 512).unwrap());
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(polygon_iou(&square(0.0, 0.0, 1.0), &square(3.0, 0.0, 1.0), 128).unwrap(), 0.0);
        assert_eq!(polygon_iou(&square(0.0, 0.0, 1.0), &square(1.5, 1.5, 1.0), 128).unwrap(), 0.0);
    }

    #[test]
    fn low_resolution_is_rejected() {
        assert!(polygon_iou(&square(0.0, 0.0, 1.0), &square(0.0, 0.0, 1.0), 16).is_err());
    }
}

//! Line formats for the four annotation styles.
//!
//! | format     | line                                           |
//! |------------|------------------------------------------------|
//! | ctw1500    | `x1,y1,...,xn,yn`, upper chain then lower chain reversed |
//! | icdar2015  | `x1,y1,x2,y2,x3,y3,x4,y4,transcription` (`###` = ignore) |
//! | msra_td500 | `index difficulty x y w h angle` (radians)     |
//! | totaltext  | `n,x1,y1,...,xn,yn[,ignore]`                   |

use super::ParseError;
use crate::encode::{split_sides, AnnotationPolygon};
use crate::geom::Point2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationFormat {
    Ctw1500,
    Icdar2015,
    MsraTd500,
    TotalText,
}

impl AnnotationFormat {
    pub const ALL: [AnnotationFormat; 4] = [Self::Ctw1500, Self::Icdar2015, Self::MsraTd500, Self::TotalText];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ctw1500 => "ctw1500",
            Self::Icdar2015 => "icdar2015",
            Self::MsraTd500 => "msra_td500",
            Self::TotalText => "totaltext",
        }
    }

    pub fn parse_line(self, line: &str) -> Result<AnnotationPolygon, ParseError> {
        match self {
            Self::Ctw1500 => parse_ctw1500(line),
            Self::Icdar2015 => parse_icdar2015(line),
            Self::MsraTd500 => parse_msra_td500(line),
            Self::TotalText => parse_totaltext(line),
        }
    }

    /// `index` is only used by formats that number their lines.
    pub fn format_line(self, ann: &AnnotationPolygon, index: usize) -> String {
        match self {
            Self::Ctw1500 => format_ctw1500(ann),
            Self::Icdar2015 => format_icdar2015(ann),
            Self::MsraTd500 => format_msra_td500(ann, index),
            Self::TotalText => format_totaltext(ann),
        }
    }
}

impl fmt::Display for AnnotationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnnotationFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ctw1500" | "ctw" => Ok(Self::Ctw1500),
            "icdar2015" | "ic15" => Ok(Self::Icdar2015),
            "msra_td500" | "msra-td500" | "td500" => Ok(Self::MsraTd500),
            "totaltext" | "total_text" | "total-text" => Ok(Self::TotalText),
            other => Err(format!("unknown annotation format {other:?}")),
        }
    }
}

fn err(msg: impl Into<String>) -> ParseError {
    ParseError::new(1, msg)
}

fn number(tok: &str, what: &str) -> Result<f64, ParseError> {
    let t = tok.trim();
    let v: f64 = t.parse().map_err(|_| err(format!("{what}: {t:?} is not a number")))?;
    if !v.is_finite() {
        return Err(err(format!("{what}: {t:?} is not finite")));
    }
    Ok(v)
}

fn points(tokens: &[&str]) -> Result<Vec<Point2>, ParseError> {
    tokens
        .chunks(2)
        .enumerate()
        .map(|(i, xy)| Ok(Point2::new(number(xy[0], &format!("x{}", i + 1))?, number(xy[1], &format!("y{}", i + 1))?)))
        .collect()
}

fn annotation(vertices: &[Point2], ignore: bool) -> Result<AnnotationPolygon, ParseError> {
    let mut ann = split_sides(vertices).map_err(|e| err(e.to_string()))?;
    ann.ignore = ignore;
    Ok(ann)
}

fn join_numbers(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn ring_numbers(ann: &AnnotationPolygon) -> impl Iterator<Item = f64> {
    ann.ring().into_iter().flat_map(|p| [p.x, p.y])
}

/// Polygon with an even number of vertices, at least four.
pub fn parse_ctw1500(line: &str) -> Result<AnnotationPolygon, ParseError> {
    let tokens: Vec<&str> = line.trim().split(',').collect();
    if tokens.len() < 8 || !tokens.len().is_multiple_of(4) {
        return Err(err(format!("expected a multiple of 4 coordinates (at least 8), got {} fields", tokens.len())));
    }
    annotation(&points(&tokens)?, false)
}

pub fn format_ctw1500(ann: &AnnotationPolygon) -> String {
    join_numbers(ring_numbers(ann))
}

/// Quadrilateral followed by a transcription that may itself contain commas.
pub fn parse_icdar2015(line: &str) -> Result<AnnotationPolygon, ParseError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.splitn(9, ',').collect();
    if fields.len() < 9 {
        return Err(err(format!("expected 8 coordinates and a transcription, got {} fields", fields.len())));
    }
    let text = fields[8].to_string();
    let ann = annotation(&points(&fields[..8])?, text == "###")?;
    Ok(ann.with_text(text))
}

pub fn format_icdar2015(ann: &AnnotationPolygon) -> String {
    let text = match (&ann.text, ann.ignore) {
        (_, true) => "###",
        (Some(t), false) => t.as_str(),
        (None, false) => "",
    };
    format!("{},{}", join_numbers(ring_numbers(ann)), text)
}

/// Rectangle `(x, y, w, h)` rotated by `angle` radians about its centre.
pub fn parse_msra_td500(line: &str) -> Result<AnnotationPolygon, ParseError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 7 {
        return Err(err(format!("expected 7 whitespace-separated fields, got {}", fields.len())));
    }
    fields[0].parse::<u64>().map_err(|_| err(format!("index: {:?} is not an integer", fields[0])))?;
    let ignore = match fields[1] {
        "0" => false,
        "1" => true,
        other => return Err(err(format!("difficulty: expected 0 or 1, got {other:?}"))),
    };
    let x = number(fields[2], "x")?;
    let y = number(fields[3], "y")?;
    let w = number(fields[4], "w")?;
    let h = number(fields[5], "h")?;
    let angle = number(fields[6], "angle")?;
    if w <= 0.0 || h <= 0.0 {
        return Err(err(format!("rectangle size must be positive, got {w}x{h}")));
    }
    annotation(&rotated_rect(x, y, w, h, angle), ignore)
}

/// Corners in dataset order: top-left, top-right, bottom-right, bottom-left
/// of the unrotated rectangle.
pub fn rotated_rect(x: f64, y: f64, w: f64, h: f64, angle: f64) -> Vec<Point2> {
    let c = Point2::new(x + w / 2.0, y + h / 2.0);
    let (s, co) = angle.sin_cos();
    [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
        .into_iter()
        .map(|(px, py)| {
            let (dx, dy) = (px - c.x, py - c.y);
            Point2::new(c.x + co * dx - s * dy, c.y + s * dx + co * dy)
        })
        .collect()
}

/// Inverse of [`rotated_rect`]. The rectangle is spanned by the first,
/// second and last ring vertices, so other shapes are approximated.
pub fn format_msra_td500(ann: &AnnotationPolygon, index: usize) -> String {
    let ring = ann.ring();
    let (tl, tr, bl) = (ring[0], ring[1], ring[ring.len() - 1]);
    let w = tl.dist(tr);
    let h = tl.dist(bl);
    let angle = (tr.y - tl.y).atan2(tr.x - tl.x);
    let center = tl + (tr - tl) * 0.5 + (bl - tl) * 0.5;
    let tidy = |v: f64| (v * 1e9).round() / 1e9 + 0.0;
    format!(
        "{index} {} {} {} {} {} {}",
        u8::from(ann.ignore),
        tidy(center.x - w / 2.0),
        tidy(center.y - h / 2.0),
        tidy(w),
        tidy(h),
        tidy(angle)
    )
}

/// Vertex count, coordinates, and an optional trailing ignore flag.
pub fn parse_totaltext(line: &str) -> Result<AnnotationPolygon, ParseError> {
    let tokens: Vec<&str> = line.trim().split(',').collect();
    let n: usize =
        tokens[0].trim().parse().map_err(|_| err(format!("vertex count: {:?} is not an integer", tokens[0].trim())))?;
    if n < 4 || !n.is_multiple_of(2) {
        return Err(err(format!("vertex count must be even and at least 4, got {n}")));
    }
    let coords = tokens.len() - 1;
    let ignore = if n.checked_mul(2) == Some(coords) {
        false
    } else if n.checked_mul(2).and_then(|c| c.checked_add(1)) == Some(coords) {
        match tokens[coords].trim() {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("ignore flag: expected 0 or 1, got {other:?}"))),
        }
    } else {
        return Err(err(format!("{n} vertices need {} coordinates, got {coords}", 2 * n)));
    };
    annotation(&points(&tokens[1..=2 * n])?, ignore)
}

pub fn format_totaltext(ann: &AnnotationPolygon) -> String {
    let n = ann.upper.len() + ann.lower.len();
    let mut line = format!("{n},{}", join_numbers(ring_numbers(ann)));
    if ann.ignore {
        line.push_str(",1");
    }
    line
}

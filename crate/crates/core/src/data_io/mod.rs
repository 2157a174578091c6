//! Annotation files, raster files and detection files.
//!
//! Annotation files hold one instance per line. Blank lines and lines
//! starting with `#` are skipped, except for an optional `# size W H`
//! header that gives the image size in pixels. Without it the size is taken
//! from the annotation extent.

mod annotations;
mod msrr;

pub use annotations::{
    format_ctw1500, format_icdar2015, format_msra_td500, format_totaltext, parse_ctw1500, parse_icdar2015,
    parse_msra_td500, parse_totaltext, rotated_rect, AnnotationFormat,
};
pub use msrr::{
    MsrrRaster, RasterData, RasterFormatError, HEADER_LEN, LABEL_CHANNELS, MAGIC, PREDICTION_CHANNELS, VERSION,
};

use crate::decode::Detection;
use crate::encode::AnnotationPolygon;
use crate::geom::{Point2, Polygon};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// A malformed line, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }

    fn at(mut self, line: usize) -> Self {
        self.line = line;
        self
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Raster { path: PathBuf, source: RasterFormatError },
    #[error("{0}")]
    Invalid(String),
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

/// One image worth of annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub image_id: String,
    /// `(width, height)` in pixels.
    pub image_size: (usize, usize),
    pub annotations: Vec<AnnotationPolygon>,
    /// Notes about clipping, dropped instances and inferred sizes.
    pub diagnostics: Vec<String>,
}

fn size_header(line: &str) -> Option<Result<(usize, usize), String>> {
    let rest = line.strip_prefix('#')?.trim_start().strip_prefix("size")?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    let parsed = match parts.as_slice() {
        [w, h] => w.parse::<usize>().ok().zip(h.parse::<usize>().ok()).filter(|&(w, h)| w > 0 && h > 0),
        _ => None,
    };
    Some(parsed.ok_or_else(|| format!("malformed size header {line:?}, expected \"# size W H\"")))
}

/// Parsed lines plus the optional size header.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedAnnotations {
    pub annotations: Vec<AnnotationPolygon>,
    pub image_size: Option<(usize, usize)>,
}

/// Parses a whole annotation file. A leading byte-order mark is dropped.
pub fn parse_annotations(format: AnnotationFormat, text: &str) -> Result<ParsedAnnotations, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut annotations = Vec::new();
    let mut image_size = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(size) = size_header(line) {
                image_size = Some(size.map_err(|m| ParseError::new(i + 1, m))?);
            }
            continue;
        }
        annotations.push(format.parse_line(line).map_err(|e| e.at(i + 1))?);
    }
    Ok(ParsedAnnotations { annotations, image_size })
}

/// Like [`parse_annotations`] but on raw bytes; invalid UTF-8 is reported
/// at the line where it occurs unless an earlier line is already bad.
pub fn parse_annotation_bytes(format: AnnotationFormat, bytes: &[u8]) -> Result<ParsedAnnotations, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_annotations(format, text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let line_start = valid.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            let before = std::str::from_utf8(&bytes[..line_start]).expect("prefix of the valid part");
            parse_annotations(format, before)?;
            let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
            Err(ParseError::new(line, format!("invalid UTF-8 at byte {}", e.valid_up_to())))
        }
    }
}

/// Serializes annotations, with a size header when one is given.
pub fn format_annotations(
    format: AnnotationFormat,
    annotations: &[AnnotationPolygon],
    image_size: Option<(usize, usize)>,
) -> String {
    let mut out = String::new();
    if let Some((w, h)) = image_size {
        out.push_str(&format!("# size {w} {h}\n"));
    }
    for (i, ann) in annotations.iter().enumerate() {
        out.push_str(&format.format_line(ann, i));
        out.push('\n');
    }
    out
}

/// Clamps every vertex into `[0, w] x [0, h]`. Returns the clipped
/// annotation and whether anything moved; `None` when clipping collapses
/// the shape.
pub fn clip_annotation(ann: &AnnotationPolygon, image_size: (usize, usize)) -> Option<(AnnotationPolygon, bool)> {
    let (w, h) = (image_size.0 as f64, image_size.1 as f64);
    let clamp = |p: &Point2| Point2::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h));
    let upper: Vec<Point2> = ann.upper.iter().map(clamp).collect();
    let lower: Vec<Point2> = ann.lower.iter().map(clamp).collect();
    if upper == ann.upper && lower == ann.lower {
        return Some((ann.clone(), false));
    }
    let mut clipped = AnnotationPolygon::new(upper, lower, ann.ignore).ok()?;
    clipped.text = ann.text.clone();
    clipped.source_vertex_count = ann.source_vertex_count;
    Some((clipped, true))
}

fn extent(annotations: &[AnnotationPolygon]) -> (usize, usize) {
    let (mut w, mut h) = (1.0f64, 1.0f64);
    for p in annotations.iter().flat_map(|a| a.upper.iter().chain(&a.lower)) {
        w = w.max(p.x);
        h = h.max(p.y);
    }
    (w.ceil() as usize, h.ceil() as usize)
}

/// Builds a record from parsed lines: infers the size if needed and clips.
pub fn make_record(image_id: impl Into<String>, parsed: ParsedAnnotations) -> DatasetRecord {
    let mut diagnostics = Vec::new();
    let image_size = parsed.image_size.unwrap_or_else(|| {
        let size = extent(&parsed.annotations);
        diagnostics.push(format!("image size inferred from annotation extent: {}x{}", size.0, size.1));
        size
    });
    let mut annotations = Vec::with_capacity(parsed.annotations.len());
    for (i, ann) in parsed.annotations.iter().enumerate() {
        match clip_annotation(ann, image_size) {
            Some((clipped, moved)) => {
                if moved {
                    diagnostics.push(format!("instance {i}: clipped to image bounds"));
                }
                annotations.push(clipped);
            }
            None => diagnostics.push(format!("instance {i}: dropped, degenerate after clipping")),
        }
    }
    DatasetRecord { image_id: image_id.into(), image_size, annotations, diagnostics }
}

/// Image id of an annotation or detection file: the stem without a
/// leading `gt_` or `res_`.
pub fn image_id_from_path(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_prefix("gt_").or_else(|| stem.strip_prefix("res_")).map(str::to_string).unwrap_or(stem)
}

pub fn load_record(path: &Path, format: AnnotationFormat) -> Result<DatasetRecord, DataError> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    let parsed = parse_annotation_bytes(format, &bytes)
        .map_err(|source| DataError::Parse { path: path.to_path_buf(), source })?;
    Ok(make_record(image_id_from_path(path), parsed))
}

/// `*.txt` files in `dir`, sorted by file name.
pub fn list_txt_files(dir: &Path) -> Result<Vec<PathBuf>, DataError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| DataError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_dataset_dir(dir: &Path, format: AnnotationFormat) -> Result<Vec<DatasetRecord>, DataError> {
    list_txt_files(dir)?.iter().map(|p| load_record(p, format)).collect()
}

pub fn write_record(path: &Path, format: AnnotationFormat, record: &DatasetRecord) -> Result<(), DataError> {
    let text = format_annotations(format, &record.annotations, Some(record.image_size));
    fs::write(path, text).map_err(|e| DataError::io(path, e))
}

/// `score,n,x1,y1,...,xn,yn` with three decimals.
pub fn format_detection(det: &Detection) -> String {
    let mut line = format!("{:.3},{}", det.score, det.polygon.len());
    for p in det.polygon.vertices() {
        line.push_str(&format!(",{:.3},{:.3}", p.x, p.y));
    }
    line
}

pub fn format_detections(dets: &[Detection]) -> String {
    dets.iter().map(|d| format_detection(d) + "\n").collect()
}

fn detection_number(tok: &str, what: &str) -> Result<f64, String> {
    let v: f64 = tok.trim().parse().map_err(|_| format!("{what}: {:?} is not a number", tok.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what}: {:?} is not finite", tok.trim()))
    }
}

fn parse_detection_line(line: &str) -> Result<Detection, String> {
    let tokens: Vec<&str> = line.trim().split(',').collect();
    if tokens.len() < 2 {
        return Err("expected \"score,n,x1,y1,...\"".into());
    }
    let score = detection_number(tokens[0], "score")?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score {score} outside [0, 1]"));
    }
    let n: usize =
        tokens[1].trim().parse().map_err(|_| format!("vertex count: {:?} is not an integer", tokens[1].trim()))?;
    if n < 3 {
        return Err(format!("need at least 3 vertices, got {n}"));
    }
    if n.checked_mul(2).and_then(|c| c.checked_add(2)) != Some(tokens.len()) {
        return Err(format!("{n} vertices need {} coordinates, got {}", 2 * n, tokens.len() - 2));
    }
    let mut vertices = Vec::with_capacity(n);
    for (i, xy) in tokens[2..].chunks(2).enumerate() {
        vertices.push(Point2::new(
            detection_number(xy[0], &format!("x{}", i + 1))?,
            detection_number(xy[1], &format!("y{}", i + 1))?,
        ));
    }
    let polygon = Polygon::new(vertices).map_err(|e| e.to_string())?;
    Ok(Detection::new(polygon, score))
}

pub fn parse_detections(text: &str) -> Result<Vec<Detection>, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| parse_detection_line(l).map_err(|m| ParseError::new(i + 1, m)))
        .collect()
}

pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<(), DataError> {
    fs::write(path, format_detections(dets)).map_err(|e| DataError::io(path, e))
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>, DataError> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        source: ParseError::new(bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1, "invalid UTF-8"),
    })?;
    parse_detections(text).map_err(|source| DataError::Parse { path: path.to_path_buf(), source })
}

pub fn write_raster(path: &Path, raster: &RasterData) -> Result<(), DataError> {
    let msrr = raster.to_msrr().map_err(|source| DataError::Raster { path: path.to_path_buf(), source })?;
    fs::write(path, msrr.to_bytes()).map_err(|e| DataError::io(path, e))
}

pub fn read_raster(path: &Path) -> Result<RasterData, DataError> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    MsrrRaster::from_bytes(&bytes)
        .and_then(|m| m.interpret())
        .map_err(|source| DataError::Raster { path: path.to_path_buf(), source })
}

impl fmt::Display for DatasetRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}x{}, {} instances)",
            self.image_id,
            self.image_size.0,
            self.image_size.1,
            self.annotations.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parse_locates_errors_and_strips_bom() {
        let text = "\u{feff}0,0,10,0,10,5,0,5,a\n\n# comment\n1,2,3,x,5,6,7,8,b\n";
        let err = parse_annotations(AnnotationFormat::Icdar2015, text).unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.message.contains("x4") || err.message.contains("y2"), "{err}");
        let ok = parse_annotations(AnnotationFormat::Icdar2015, "\u{feff}0,0,10,0,10,5,0,5,a\r\n").unwrap();
        assert_eq!(ok.annotations.len(), 1);
        assert_eq!(ok.annotations[0].text.as_deref(), Some("a"));
    }

    #[test]
    fn size_header_and_clipping() {
        let text = "# size 20 10\n4,-5,0,10,0,10,5,-5,5\n4,0,0,30,0,30,12,0,12\n";
        let parsed = parse_annotations(AnnotationFormat::TotalText, text).unwrap();
        assert_eq!(parsed.image_size, Some((20, 10)));
        let rec = make_record("img", parsed);
        assert_eq!(rec.annotations.len(), 2);
        assert_eq!(rec.diagnostics.len(), 2);
        assert_eq!(rec.annotations[0].upper[0], Point2::new(0.0, 0.0));
        assert_eq!(rec.annotations[1].lower[1], Point2::new(20.0, 10.0));
        assert!(parse_annotations(AnnotationFormat::TotalText, "# size 20\n").is_err());
    }

    #[test]
    fn clipping_can_drop_an_instance() {
        let parsed = parse_annotations(AnnotationFormat::Ctw1500, "# size 10 10\n20,0,30,0,30,5,20,5\n").unwrap();
        let rec = make_record("x", parsed);
        assert!(rec.annotations.is_empty());
        assert!(rec.diagnostics[0].contains("dropped"));
    }

    #[test]
    fn inferred_size_is_reported() {
        let parsed = parse_annotations(AnnotationFormat::Ctw1500, "0,0,10.5,0,10.5,5,0,5\n").unwrap();
        let rec = make_record("x", parsed);
        assert_eq!(rec.image_size, (11, 5));
        assert!(rec.diagnostics[0].contains("inferred"));
    }

    #[test]
    fn invalid_utf8_is_located() {
        let bytes = b"0,0,10,0,10,5,0,5\n0,0,\xff\n";
        let err = parse_annotation_bytes(AnnotationFormat::Ctw1500, bytes).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn detection_lines() {
        let tri = Polygon::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), Point2::new(0.0, 5.25)]).unwrap();
        let line = format_detection(&Detection::new(tri, 0.9));
        assert_eq!(line, "0.900,3,0.000,0.000,10.000,0.000,0.000,5.250");
        assert_eq!(format_detections(&[]), "");
        assert!(parse_detections("").unwrap().is_empty());
        let back = parse_detections(&(line + "\n")).unwrap();
        assert_eq!(back[0].polygon.len(), 3);
        for bad in ["1.5,3,0,0,1,0,0,1", "0.5,2,0,0,1,0", "0.5,3,0,0,1,0,0", "0.5,3,0,0,1,1,2,2", "x"] {
            assert_eq!(parse_detections(&format!("\n{bad}\n")).unwrap_err().line, 2, "{bad}");
        }
    }

    #[test]
    fn image_ids() {
        assert_eq!(image_id_from_path(Path::new("a/gt_img_1.txt")), "img_1");
        assert_eq!(image_id_from_path(Path::new("res_img_1.txt")), "img_1");
        assert_eq!(image_id_from_path(Path::new("0042.txt")), "0042");
    }
}

//! Detection scoring: greedy IoU matching with don't-care regions,
//! precision/recall/F-score, and corpus-level micro-averaging.

use crate::decode::Detection;
use crate::encode::AnnotationPolygon;
use crate::geom::{min_area_rect, polygon_iou, Polygon};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;
pub const DEFAULT_IOU_RESOLUTION: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Polygon,
    /// Both sides reduced to their minimum-area oriented rectangles.
    Quad,
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "polygon" | "poly" => Ok(Self::Polygon),
            "quad" => Ok(Self::Quad),
            other => Err(format!("unknown evaluation mode {other:?}, expected polygon or quad")),
        }
    }
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Polygon => "polygon",
            Self::Quad => "quad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub mode: EvalMode,
    /// Grid size for rasterized IoU.
    pub iou_resolution: usize,
    /// Skip images present on only one side instead of failing.
    pub allow_missing: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            mode: EvalMode::Polygon,
            iou_resolution: DEFAULT_IOU_RESOLUTION,
            allow_missing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ignored_dets: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            ignored_dets: self.ignored_dets + o.ignored_dets,
        }
    }
}

impl Counts {
    /// `(precision, recall, fscore)`; all 1 when there is nothing to count.
    pub fn scores(&self) -> (f64, f64, f64) {
        if self.tp + self.fp + self.fn_ == 0 {
            return (1.0, 1.0, 1.0);
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        (p, r, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub det_index: usize,
    pub gt_index: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    /// Indices refer to the inputs of the image they came from.
    pub matches: Vec<Match>,
    pub counts: Counts,
}

impl EvalReport {
    pub fn from_counts(counts: Counts, matches: Vec<Match>) -> Self {
        let (precision, recall, fscore) = counts.scores();
        Self { precision, recall, fscore, matches, counts }
    }
}

fn reduce(poly: &Polygon, mode: EvalMode) -> Polygon {
    match mode {
        EvalMode::Polygon => poly.clone(),
        EvalMode::Quad => min_area_rect(poly).unwrap_or_else(|_| poly.clone()),
    }
}

/// IoU of every detection against every ground truth, `[det][gt]`.
pub fn iou_matrix(dets: &[Detection], gts: &[AnnotationPolygon], mode: EvalMode, resolution: usize) -> Vec<Vec<f64>> {
    let gt_polys: Vec<Polygon> = gts.iter().map(|g| reduce(&g.polygon(), mode)).collect();
    dets.iter()
        .map(|d| {
            let dp = reduce(&d.polygon, mode);
            gt_polys.iter().map(|g| polygon_iou(&dp, g, resolution).unwrap_or(0.0)).collect()
        })
        .collect()
}

/// Greedy matching. Detections are visited by descending score (ties by
/// index). Each takes the candidate of highest IoU among unmatched care
/// ground truths and all ignore ground truths; at or above the threshold
/// a care candidate is a true positive and an ignore candidate makes the
/// detection ignored. Anything else is a false positive. Misses count care
/// ground truths only.
pub fn match_detections(dets: &[Detection], gts: &[AnnotationPolygon], cfg: &EvalConfig) -> EvalReport {
    let ious = iou_matrix(dets, gts, cfg.mode, cfg.iou_resolution);
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));

    let mut taken = vec![false; gts.len()];
    let mut counts = Counts::default();
    let mut matches = Vec::new();
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if !gt.ignore && taken[g] {
                continue;
            }
            let iou = ious[d][g];
            // Strictly better wins; on equal IoU a care ground truth beats an ignore one.
            let better = match best {
                None => true,
                Some((bg, biou)) => iou > biou || (iou == biou && gts[bg].ignore && !gt.ignore),
            };
            if better {
                best = Some((g, iou));
            }
        }
        match best {
            Some((g, iou)) if iou >= cfg.iou_threshold => {
                if gts[g].ignore {
                    counts.ignored_dets += 1;
                } else {
                    taken[g] = true;
                    counts.tp += 1;
                    matches.push(Match { det_index: d, gt_index: g, iou });
                }
            }
            _ => counts.fp += 1,
        }
    }
    counts.fn_ = gts.iter().filter(|g| !g.ignore).count() - counts.tp;
    EvalReport::from_counts(counts, matches)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("images without detections: {0:?}")]
    MissingDetections(Vec<String>),
    #[error("detections without ground truth: {0:?}")]
    MissingGroundTruth(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub image_id: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub overall: EvalReport,
    pub per_image: Vec<ImageReport>,
    pub missing_detections: Vec<String>,
    pub missing_ground_truth: Vec<String>,
}

/// Micro-average: counts are summed, then scored once.
pub fn aggregate(reports: &[EvalReport]) -> EvalReport {
    let counts = reports.iter().fold(Counts::default(), |acc, r| acc + r.counts);
    let matches = reports.iter().flat_map(|r| r.matches.iter().copied()).collect();
    EvalReport::from_counts(counts, matches)
}

/// Ground truth and detections paired by image id; repeated ids pair up
/// in order of appearance.
pub type Pairing<'a> = Vec<(String, &'a [Detection], &'a [AnnotationPolygon])>;

pub fn pair_by_id<'a>(
    dets: &'a [(String, Vec<Detection>)],
    gts: &'a [(String, Vec<AnnotationPolygon>)],
    allow_missing: bool,
) -> Result<(Pairing<'a>, Vec<String>, Vec<String>), EvalError> {
    let mut by_id: HashMap<&str, VecDeque<usize>> = HashMap::new();
    for (i, (id, _)) in dets.iter().enumerate() {
        by_id.entry(id.as_str()).or_default().push_back(i);
    }
    let mut pairs = Vec::new();
    let mut missing_dets = Vec::new();
    for (id, g) in gts {
        match by_id.get_mut(id.as_str()).and_then(VecDeque::pop_front) {
            Some(i) => pairs.push((id.clone(), dets[i].1.as_slice(), g.as_slice())),
            None => missing_dets.push(id.clone()),
        }
    }
    let mut missing_gts: Vec<usize> = by_id.into_values().flatten().collect();
    missing_gts.sort_unstable();
    let missing_gts: Vec<String> = missing_gts.into_iter().map(|i| dets[i].0.clone()).collect();
    if !allow_missing {
        if !missing_dets.is_empty() {
            return Err(EvalError::MissingDetections(missing_dets));
        }
        if !missing_gts.is_empty() {
            return Err(EvalError::MissingGroundTruth(missing_gts));
        }
    }
    Ok((pairs, missing_dets, missing_gts))
}

/// Matches every paired image and micro-averages. Unpaired images are an
/// error unless `cfg.allow_missing`, in which case they are skipped and
/// listed.
pub fn evaluate_dataset(
    dets: &[(String, Vec<Detection>)],
    gts: &[(String, Vec<AnnotationPolygon>)],
    cfg: &EvalConfig,
) -> Result<DatasetReport, EvalError> {
    let (pairs, missing_detections, missing_ground_truth) = pair_by_id(dets, gts, cfg.allow_missing)?;
    let per_image: Vec<ImageReport> = pairs
        .into_iter()
        .map(|(image_id, d, g)| ImageReport { image_id, report: match_detections(d, g, cfg) })
        .collect();
    Ok(finish(per_image, missing_detections, missing_ground_truth))
}

/// Assembles a dataset report from per-image results computed elsewhere.
pub fn finish(
    per_image: Vec<ImageReport>,
    missing_detections: Vec<String>,
    missing_ground_truth: Vec<String>,
) -> DatasetReport {
    let reports: Vec<EvalReport> = per_image.iter().map(|r| r.report.clone()).collect();
    DatasetReport { overall: aggregate(&reports), per_image, missing_detections, missing_ground_truth }
}

impl DatasetReport {
    /// `key=value` lines.
    pub fn to_key_values(&self, cfg: &EvalConfig) -> String {
        let o = &self.overall;
        let mut s = String::new();
        let _ = writeln!(s, "precision={:.6}", o.precision);
        let _ = writeln!(s, "recall={:.6}", o.recall);
        let _ = writeln!(s, "fscore={:.6}", o.fscore);
        let _ = writeln!(s, "tp={}", o.counts.tp);
        let _ = writeln!(s, "fp={}", o.counts.fp);
        let _ = writeln!(s, "fn={}", o.counts.fn_);
        let _ = writeln!(s, "ignored_dets={}", o.counts.ignored_dets);
        let _ = writeln!(s, "images={}", self.per_image.len());
        let _ = writeln!(s, "iou_threshold={}", cfg.iou_threshold);
        let _ = writeln!(s, "mode={}", cfg.mode.name());
        let _ = writeln!(s, "missing_detections={}", self.missing_detections.join(","));
        let _ = writeln!(s, "missing_ground_truth={}", self.missing_ground_truth.join(","));
        s
    }

    /// One line per image: `image_id tp fp fn ignored_dets precision recall fscore`.
    pub fn per_image_table(&self) -> String {
        let mut s = String::from("image_id tp fp fn ignored_dets precision recall fscore\n");
        for r in &self.per_image {
            let c = r.report.counts;
            let _ = writeln!(
                s,
                "{} {} {} {} {} {:.6} {:.6} {:.6}",
                r.image_id, c.tp, c.fp, c.fn_, c.ignored_dets, r.report.precision, r.report.recall, r.report.fscore
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;

    fn rect(x: f64, y: f64, w: f64, h: f64) -> AnnotationPolygon {
        AnnotationPolygon::new(
            vec![Point2::new(x, y), Point2::new(x + w, y)],
            vec![Point2::new(x, y + h), Point2::new(x + w, y + h)],
            false,
        )
        .unwrap()
    }

    fn det(a: &AnnotationPolygon, score: f64) -> Detection {
        Detection::new(a.polygon(), score)
    }

    #[test]
    fn perfect_and_half_recall() {
        let gts = vec![rect(0.0, 0.0, 10.0, 5.0), rect(20.0, 0.0, 10.0, 5.0)];
        let cfg = EvalConfig::default();
        let both = match_detections(&[det(&gts[0], 0.9), det(&gts[1], 0.8)], &gts, &cfg);
        assert_eq!((both.precision, both.recall, both.fscore), (1.0, 1.0, 1.0));
        let one = match_detections(&[det(&gts[1], 0.9)], &gts, &cfg);
        assert_eq!(one.counts, Counts { tp: 1, fp: 0, fn_: 1, ignored_dets: 0 });
        assert_eq!(one.matches[0].gt_index, 1);
        assert!((one.fscore - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ignore_region_absorbs_detection() {
        let mut g = rect(0.0, 0.0, 10.0, 5.0);
        g.ignore = true;
        let r = match_detections(&[det(&g, 0.7)], &[g.clone()], &EvalConfig::default());
        assert_eq!(r.counts, Counts { tp: 0, fp: 0, fn_: 0, ignored_dets: 1 });
    }

    #[test]
    fn empty_conventions() {
        let cfg = EvalConfig::default();
        let r = match_detections(&[], &[], &cfg);
        assert_eq!((r.precision, r.recall, r.fscore), (1.0, 1.0, 1.0));
        let g = rect(0.0, 0.0, 4.0, 4.0);
        let r = match_detections(&[], std::slice::from_ref(&g), &cfg);
        assert_eq!((r.precision, r.recall, r.fscore), (0.0, 0.0, 0.0));
        let r = match_detections(&[det(&g, 0.5)], &[], &cfg);
        assert_eq!((r.precision, r.recall, r.fscore, r.counts.fp), (0.0, 0.0, 0.0, 1));
    }

    #[test]
    fn higher_score_claims_first() {
        let g = rect(0.0, 0.0, 10.0, 10.0);
        let shifted = rect(1.0, 0.0, 10.0, 10.0);
        let r = match_detections(&[det(&shifted, 0.3), det(&g, 0.9)], std::slice::from_ref(&g), &EvalConfig::default());
        assert_eq!(r.matches, vec![Match { det_index: 1, gt_index: 0, iou: r.matches[0].iou }]);
        assert_eq!(r.counts.fp, 1);
    }

    #[test]
    fn quad_mode_reduces_polygons() {
        // An L-shaped detection covers its bounding square in quad mode.
        let l = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 2.0),
            Point2::new(2.0, 2.0),
            Point2::new(2.0, 10.0),
            Point2::new(0.0, 10.0),
        ])
        .unwrap();
        let g = rect(0.0, 0.0, 10.0, 10.0);
        let d = [Detection::new(l, 1.0)];
        let poly = match_detections(&d, std::slice::from_ref(&g), &EvalConfig::default());
        let quad = match_detections(&d, &[g], &EvalConfig { mode: EvalMode::Quad, ..Default::default() });
        assert_eq!(poly.counts.tp, 0);
        assert_eq!(quad.counts.tp, 1);
    }

    #[test]
    fn dataset_pairing_policy() {
        let g = rect(0.0, 0.0, 10.0, 5.0);
        let gts = vec![("a".to_string(), vec![g.clone()]), ("b".to_string(), vec![g.clone()])];
        let dets = vec![("a".to_string(), vec![det(&g, 1.0)]), ("c".to_string(), vec![])];
        let cfg = EvalConfig::default();
        assert!(matches!(evaluate_dataset(&dets, &gts, &cfg), Err(EvalError::MissingDetections(_))));
        let rep = evaluate_dataset(&dets, &gts, &EvalConfig { allow_missing: true, ..cfg }).unwrap();
        assert_eq!(rep.missing_detections, ["b"]);
        assert_eq!(rep.missing_ground_truth, ["c"]);
        assert_eq!(rep.overall.counts.tp, 1);
        let kv = rep.to_key_values(&cfg);
        assert!(kv.contains("fscore=1.000000\n") && kv.contains("mode=polygon\n"));
        assert_eq!(rep.per_image_table().lines().count(), 2);
    }
}

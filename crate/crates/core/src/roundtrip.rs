//! Encode -> decode -> compare: how much shape survives the label codec.

use crate::decode::{decode, DecodeConfig, PredictionRaster};
use crate::encode::{encode, AnnotationPolygon, CodecError, RasterGrid};
use crate::geom::polygon_iou;
use serde::{Deserialize, Serialize};

pub const IOU_RESOLUTION: usize = 512;

/// Distance-map noise applied between encode and decode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripImage {
    /// Best IoU of any detection against each non-ignored annotation.
    pub ious: Vec<f64>,
    pub annotations: usize,
    pub detections: usize,
    pub conflicts: usize,
}

/// Encodes `annotations` onto a grid covering `image_size`, feeds the
/// labels back as a perfect prediction (optionally with noise), decodes,
/// and scores each annotation by its best-matching detection.
pub fn roundtrip_image(
    annotations: &[AnnotationPolygon],
    image_size: (usize, usize),
    stride: usize,
    cfg: &DecodeConfig,
    noise: Option<Noise>,
) -> Result<RoundtripImage, CodecError> {
    let grid = RasterGrid::for_image(image_size.0, image_size.1, stride)?;
    let (labels, diag) = encode(annotations, grid)?;
    let mut pred = PredictionRaster::from_labels(&labels);
    if let Some(n) = noise {
        pred = pred.with_distance_noise(n.sigma, n.seed);
    }
    let out = decode(&pred, cfg);
    let cared: Vec<&AnnotationPolygon> = annotations.iter().filter(|a| !a.ignore).collect();
    let ious = cared
        .iter()
        .map(|ann| {
            let gt = ann.polygon();
            out.detections
                .iter()
                .map(|d| polygon_iou(&d.polygon, &gt, IOU_RESOLUTION).expect("resolution is valid"))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(RoundtripImage { ious, annotations: cared.len(), detections: out.detections.len(), conflicts: diag.conflicts })
}

/// Summary statistics over many instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IouSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
}

impl IouSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        let mean = if count == 0 { 0.0 } else { values.iter().sum::<f64>() / count as f64 };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        Self { count, mean, min: if count == 0 { 0.0 } else { min } }
    }
}

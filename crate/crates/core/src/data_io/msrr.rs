//! MSRR raster container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MSRR" (4D 53 52 52)
//! 4       4     version, u32 LE (= 1)
//! 8       4     width in cells, u32 LE
//! 12      4     height in cells, u32 LE
//! 16      4     stride, u32 LE
//! 20      4     channel count, u32 LE
//! 24      ...   channel planes, row-major f32 LE
//! ```
//!
//! Labels carry 4 channels (mask, dist_x, dist_y, ignore_mask), predictions
//! 3 (prob, dist_x, dist_y).

use crate::decode::PredictionRaster;
use crate::encode::{LabelRaster, RasterGrid};
use ndarray::Array2;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"MSRR";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;
pub const LABEL_CHANNELS: u32 = 4;
pub const PREDICTION_CHANNELS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterFormatError {
    #[error("bad magic {0:02X?}, expected \"MSRR\"")]
    BadMagic([u8; 4]),
    #[error("unknown MSRR version {0}")]
    UnknownVersion(u32),
    #[error("truncated raster: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("{0} trailing bytes after the last plane")]
    TrailingBytes(usize),
    #[error("invalid raster: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, RasterFormatError>;

/// Decoded container, independent of what the channels mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MsrrRaster {
    pub width: u32,
    pub height: u32,
    pub stride: u32,
    /// Each plane is `height x width`.
    pub planes: Vec<Array2<f32>>,
}

/// A raster file interpreted by its channel count.
#[derive(Debug, Clone, PartialEq)]
pub enum RasterData {
    Labels(LabelRaster),
    Prediction(PredictionRaster),
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| RasterFormatError::Invalid(format!("{what} {v} does not fit in u32")))
}

impl MsrrRaster {
    pub fn new(width: u32, height: u32, stride: u32, planes: Vec<Array2<f32>>) -> Result<Self> {
        if stride == 0 {
            return Err(RasterFormatError::Invalid("stride must be positive".into()));
        }
        if let Some(p) = planes.iter().find(|p| p.dim() != (height as usize, width as usize)) {
            return Err(RasterFormatError::Invalid(format!(
                "plane shape {:?} does not match {height}x{width}",
                p.dim()
            )));
        }
        Ok(Self { width, height, stride, planes })
    }

    pub fn byte_len(&self) -> usize {
        HEADER_LEN + self.planes.len() * self.width as usize * self.height as usize * 4
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(&MAGIC);
        for v in [VERSION, self.width, self.height, self.stride, self.planes.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for plane in &self.planes {
            for &v in plane.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(RasterFormatError::Truncated { needed: HEADER_LEN, got: bytes.len() });
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(RasterFormatError::BadMagic(magic));
        }
        let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
        let (version, width, height, stride, channels) = (field(0), field(1), field(2), field(3), field(4));
        if version != VERSION {
            return Err(RasterFormatError::UnknownVersion(version));
        }
        let cells = (width as usize).checked_mul(height as usize);
        let needed = cells
            .and_then(|c| c.checked_mul(channels as usize))
            .and_then(|c| c.checked_mul(4))
            .and_then(|c| c.checked_add(HEADER_LEN))
            .ok_or_else(|| RasterFormatError::Invalid("payload size overflows".into()))?;
        if bytes.len() < needed {
            return Err(RasterFormatError::Truncated { needed, got: bytes.len() });
        }
        if bytes.len() > needed {
            return Err(RasterFormatError::TrailingBytes(bytes.len() - needed));
        }
        let plane_len = width as usize * height as usize;
        let planes = (0..channels as usize)
            .map(|c| {
                let start = HEADER_LEN + c * plane_len * 4;
                let values: Vec<f32> = bytes[start..start + plane_len * 4]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                    .collect();
                Array2::from_shape_vec((height as usize, width as usize), values).expect("length matches shape")
            })
            .collect();
        Self::new(width, height, stride, planes)
    }

    fn grid(&self) -> Result<RasterGrid> {
        RasterGrid::new(self.width as usize, self.height as usize, self.stride as usize)
            .map_err(|e| RasterFormatError::Invalid(e.to_string()))
    }

    fn header_for(grid: &RasterGrid) -> Result<(u32, u32, u32)> {
        Ok((to_u32(grid.width, "width")?, to_u32(grid.height, "height")?, to_u32(grid.stride, "stride")?))
    }

    pub fn from_labels(labels: &LabelRaster) -> Result<Self> {
        let (w, h, s) = Self::header_for(&labels.grid)?;
        let planes = vec![
            labels.mask.mapv(f32::from),
            labels.dist_x.mapv(|v| v as f32),
            labels.dist_y.mapv(|v| v as f32),
            labels.ignore_mask.mapv(f32::from),
        ];
        Self::new(w, h, s, planes)
    }

    pub fn from_prediction(pred: &PredictionRaster) -> Result<Self> {
        let (w, h, s) = Self::header_for(&pred.grid)?;
        let planes = vec![pred.prob.mapv(|v| v as f32), pred.dist_x.mapv(|v| v as f32), pred.dist_y.mapv(|v| v as f32)];
        Self::new(w, h, s, planes)
    }

    pub fn to_labels(&self) -> Result<LabelRaster> {
        if self.planes.len() != LABEL_CHANNELS as usize {
            return Err(RasterFormatError::Invalid(format!("labels need 4 channels, found {}", self.planes.len())));
        }
        let binary = |plane: &Array2<f32>, name: &str| -> Result<Array2<u8>> {
            if let Some(v) = plane.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(RasterFormatError::Invalid(format!("{name} holds non-binary value {v}")));
            }
            Ok(plane.mapv(|v| v as u8))
        };
        Ok(LabelRaster {
            grid: self.grid()?,
            mask: binary(&self.planes[0], "mask")?,
            dist_x: self.planes[1].mapv(f64::from),
            dist_y: self.planes[2].mapv(f64::from),
            ignore_mask: binary(&self.planes[3], "ignore_mask")?,
        })
    }

    pub fn to_prediction(&self) -> Result<PredictionRaster> {
        if self.planes.len() != PREDICTION_CHANNELS as usize {
            return Err(RasterFormatError::Invalid(format!(
                "predictions need 3 channels, found {}",
                self.planes.len()
            )));
        }
        PredictionRaster::new(
            self.grid()?,
            self.planes[0].mapv(f64::from),
            self.planes[1].mapv(f64::from),
            self.planes[2].mapv(f64::from),
        )
        .map_err(|e| RasterFormatError::Invalid(e.to_string()))
    }

    pub fn interpret(&self) -> Result<RasterData> {
        match self.planes.len() as u32 {
            LABEL_CHANNELS => self.to_labels().map(RasterData::Labels),
            PREDICTION_CHANNELS => self.to_prediction().map(RasterData::Prediction),
            n => Err(RasterFormatError::Invalid(format!("{n} channels is neither labels (4) nor a prediction (3)"))),
        }
    }
}

impl RasterData {
    pub fn to_msrr(&self) -> Result<MsrrRaster> {
        match self {
            Self::Labels(l) => MsrrRaster::from_labels(l),
            Self::Prediction(p) => MsrrRaster::from_prediction(p),
        }
    }

    pub fn grid(&self) -> RasterGrid {
        match self {
            Self::Labels(l) => l.grid,
            Self::Prediction(p) => p.grid,
        }
    }
}

//! Spatial shape bookkeeping for the multi-channel, multi-stage fusion
//! network, plus the numeric x2 upsampling used by the fusion blocks.
//!
//! Channel `c` (1-based) sees the input downsampled by `2^(c-1)`. Each
//! channel runs a backbone whose Conv2..Conv5 stages have the given
//! strides. Maps from any channel that land on the same effective stride
//! are concatenated, starting from the deepest map and walking towards
//! stride 4.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const RESNET_STRIDES: [usize; 4] = [4, 8, 16, 32];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetplanError {
    #[error("input {height}x{width} is not divisible at: {}", offending.join(", "))]
    Indivisible { height: usize, width: usize, offending: Vec<String> },
    #[error("invalid plan parameter: {0}")]
    InvalidParameter(String),
    #[error("fusion step at stride {stride} has mismatched input shapes {shapes:?}")]
    Misaligned { stride: usize, shapes: Vec<(usize, usize)> },
}

pub type Result<T> = std::result::Result<T, NetplanError>;

/// One backbone stage of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageShape {
    pub channel: usize,
    /// Conv stage number, 2..=5.
    pub stage: usize,
    /// Stride relative to the original image.
    pub stride: usize,
    pub shape: (usize, usize),
}

impl StageShape {
    pub fn label(&self) -> String {
        format!("ch{}.Conv{}", self.channel, self.stage)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub channel: usize,
    pub input: (usize, usize),
    pub stages: Vec<StageShape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FusionSource {
    Stage {
        channel: usize,
        stage: usize,
    },
    /// Output of an earlier fusion step (index into `fusion_steps`).
    Fusion(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionInput {
    pub source: FusionSource,
    pub upsampled: bool,
    pub shape: (usize, usize),
}

impl FusionInput {
    pub fn label(&self) -> String {
        let base = match self.source {
            FusionSource::Stage { channel, stage } => format!("ch{channel}.Conv{stage}"),
            FusionSource::Fusion(i) => format!("fuse{i}"),
        };
        if self.upsampled {
            format!("up({base})")
        } else {
            base
        }
    }
}

/// Concatenate `inputs` at `stride`; upsample the result unless this is
/// the last step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionStep {
    pub stride: usize,
    pub inputs: Vec<FusionInput>,
    pub upsamples: bool,
    pub output: (usize, usize),
}

impl FusionStep {
    pub fn inputs_aligned(&self) -> bool {
        self.inputs.windows(2).all(|w| w[0].shape == w[1].shape)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapePlan {
    pub input: (usize, usize),
    pub channels: Vec<ChannelPlan>,
    pub fusion_steps: Vec<FusionStep>,
}

impl ShapePlan {
    pub fn stage(&self, channel: usize, stage: usize) -> Option<&StageShape> {
        self.channels.get(channel.checked_sub(1)?)?.stages.iter().find(|s| s.stage == stage)
    }

    pub fn final_shape(&self) -> (usize, usize) {
        self.fusion_steps.last().map(|s| s.output).unwrap_or(self.input)
    }

    /// Every fusion step concatenates equal shapes and the last one lands on
    /// channel 1's Conv2.
    pub fn check(&self) -> Result<()> {
        for step in &self.fusion_steps {
            if !step.inputs_aligned() {
                return Err(NetplanError::Misaligned {
                    stride: step.stride,
                    shapes: step.inputs.iter().map(|i| i.shape).collect(),
                });
            }
        }
        let first = self.channels[0].stages[0].shape;
        if self.final_shape() != first {
            return Err(NetplanError::Misaligned {
                stride: self.channels[0].stages[0].stride,
                shapes: vec![self.final_shape(), first],
            });
        }
        Ok(())
    }
}

impl fmt::Display for ShapePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input {}x{}", self.input.0, self.input.1)?;
        writeln!(f, "{:<10} {:>7} {:>11}", "stage", "stride", "shape")?;
        for ch in &self.channels {
            for s in &ch.stages {
                writeln!(f, "{:<10} {:>7} {:>11}", s.label(), s.stride, format!("{}x{}", s.shape.0, s.shape.1))?;
            }
        }
        writeln!(f, "{:<6} {:>7} {:>11}  inputs", "fusion", "stride", "output")?;
        for (i, step) in self.fusion_steps.iter().enumerate() {
            let inputs: Vec<String> =
                step.inputs.iter().map(|inp| format!("{} {}x{}", inp.label(), inp.shape.0, inp.shape.1)).collect();
            let out = format!("{}x{}{}", step.output.0, step.output.1, if step.upsamples { " (x2)" } else { "" });
            writeln!(f, "fuse{:<2} {:>7} {:>11}  {}", i, step.stride, out, inputs.join(" + "))?;
        }
        Ok(())
    }
}

/// Shapes of every stage of every channel and the fusion schedule.
pub fn shape_plan(height: usize, width: usize, n_channels: usize, stage_strides: &[usize]) -> Result<ShapePlan> {
    if n_channels == 0 {
        return Err(NetplanError::InvalidParameter("at least one channel is required".into()));
    }
    if stage_strides.len() != 4 || stage_strides.windows(2).any(|w| w[1] != 2 * w[0]) || stage_strides[0] == 0 {
        return Err(NetplanError::InvalidParameter(format!(
            "stage strides must be four doubling values, got {stage_strides:?}"
        )));
    }
    if height == 0 || width == 0 {
        return Err(NetplanError::InvalidParameter("input must be non-empty".into()));
    }

    let mut offending = Vec::new();
    let mut channels = Vec::with_capacity(n_channels);
    for c in 0..n_channels {
        let scale = 1usize << c;
        let mut stages = Vec::with_capacity(4);
        for (k, &s) in stage_strides.iter().enumerate() {
            let stride = s * scale;
            let stage = StageShape { channel: c + 1, stage: k + 2, stride, shape: (height / stride, width / stride) };
            if !height.is_multiple_of(stride) || !width.is_multiple_of(stride) {
                offending.push(format!("{} (stride {stride})", stage.label()));
            }
            stages.push(stage);
        }
        channels.push(ChannelPlan { channel: c + 1, input: (height / scale, width / scale), stages });
    }
    if !offending.is_empty() {
        return Err(NetplanError::Indivisible { height, width, offending });
    }

    let deepest = *channels[n_channels - 1].stages.last().expect("four stages");
    let base = stage_strides[0];
    let mut steps: Vec<FusionStep> = Vec::new();
    let mut carry = FusionInput {
        source: FusionSource::Stage { channel: deepest.channel, stage: deepest.stage },
        upsampled: true,
        shape: (deepest.shape.0 * 2, deepest.shape.1 * 2),
    };
    let mut stride = deepest.stride / 2;
    while stride >= base {
        let mut inputs: Vec<FusionInput> = channels
            .iter()
            .flat_map(|ch| ch.stages.iter())
            .filter(|s| s.stride == stride)
            .map(|s| FusionInput {
                source: FusionSource::Stage { channel: s.channel, stage: s.stage },
                upsampled: false,
                shape: s.shape,
            })
            .collect();
        inputs.push(carry);
        let shape = inputs[0].shape;
        let upsamples = stride > base;
        let output = if upsamples { (shape.0 * 2, shape.1 * 2) } else { shape };
        steps.push(FusionStep { stride, inputs, upsamples, output });
        carry = FusionInput { source: FusionSource::Fusion(steps.len() - 1), upsampled: true, shape: output };
        stride /= 2;
    }
    Ok(ShapePlan { input: (height, width), channels, fusion_steps: steps })
}

/// Bilinear x2 upsampling with half-pixel centres; samples outside the
/// input clamp to the border.
pub fn upsample2x(map: &Array2<f64>) -> Array2<f64> {
    let (h, w) = map.dim();
    assert!(h > 0 && w > 0, "upsample2x needs a non-empty map");
    let taps = |n: usize, out: usize| {
        (0..out)
            .map(|i| {
                let src = ((i as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, (n - 1) as f64);
                let i0 = src.floor() as usize;
                let i1 = (i0 + 1).min(n - 1);
                (i0, i1, src - i0 as f64)
            })
            .collect::<Vec<_>>()
    };
    let rows = taps(h, 2 * h);
    let cols = taps(w, 2 * w);
    Array2::from_shape_fn((2 * h, 2 * w), |(r, c)| {
        let (r0, r1, fr) = rows[r];
        let (c0, c1, fc) = cols[c];
        let top = map[[r0, c0]] * (1.0 - fc) + map[[r0, c1]] * fc;
        let bottom = map[[r1, c0]] * (1.0 - fc) + map[[r1, c1]] * fc;
        top * (1.0 - fr) + bottom * fr
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_channel_512_first_fusion() {
        let plan = shape_plan(512, 512, 2, &RESNET_STRIDES).unwrap();
        plan.check().unwrap();
        let first = &plan.fusion_steps[0];
        assert_eq!(first.inputs.len(), 3);
        assert!(first.inputs.iter().all(|i| i.shape == (16, 16)));
        let labels: Vec<String> = first.inputs.iter().map(FusionInput::label).collect();
        assert_eq!(labels, ["ch1.Conv5", "ch2.Conv4", "up(ch2.Conv5)"]);
        assert_eq!(plan.stage(2, 5).unwrap().shape, (8, 8));
        assert_eq!(plan.final_shape(), (128, 128));
    }

    #[test]
    fn single_channel_is_a_plain_u() {
        let plan = shape_plan(256, 384, 1, &RESNET_STRIDES).unwrap();
        plan.check().unwrap();
        assert_eq!(plan.fusion_steps.len(), 3);
        assert!(plan.fusion_steps.iter().all(|s| s.inputs.len() == 2));
        assert!(!plan.fusion_steps.last().unwrap().upsamples);
    }

    #[test]
    fn indivisible_input_names_stages() {
        let err = shape_plan(520, 512, 2, &RESNET_STRIDES).unwrap_err();
        match err {
            NetplanError::Indivisible { offending, .. } => {
                assert!(offending.iter().any(|s| s.starts_with("ch1.Conv5")));
                assert!(!offending.iter().any(|s| s.starts_with("ch1.Conv2")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(shape_plan(512, 512, 0, &RESNET_STRIDES).is_err());
        assert!(shape_plan(512, 512, 1, &[4, 8, 16]).is_err());
        assert!(shape_plan(512, 512, 1, &[4, 8, 12, 32]).is_err());
    }

    #[test]
    fn upsample_small_cases() {
        assert_eq!(upsample2x(&array![[7.0]]), Array2::from_elem((2, 2), 7.0));
        let up = upsample2x(&Array2::from_elem((4, 4), 5.0));
        assert_eq!(up.dim(), (8, 8));
        assert!(up.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn plan_displays_every_step() {
        let text = shape_plan(512, 512, 2, &RESNET_STRIDES).unwrap().to_string();
        assert!(text.contains("ch2.Conv5"));
        assert_eq!(text.lines().filter(|l| l.starts_with("fuse")).count(), 4);
    }
}

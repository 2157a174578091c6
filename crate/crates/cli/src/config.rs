use serde::{Deserialize, Serialize};
use shapereg::decode::DecodeConfig;
use shapereg::evalkit::{EvalConfig, EvalMode};
use shapereg::geom::{AlphaParam, FallbackPolicy};
use shapereg::losses::LossConfig;
use std::path::Path;

pub const CONFIG_FILE_NAME: &str = "run_config.json";

/// Every knob a command may use. Written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub stride: usize,
    pub alpha: f64,
    pub prob_threshold: f64,
    pub iou_threshold: f64,
    pub mode: EvalMode,
    pub min_points: usize,
    /// `None` uses 64 image pixels worth of cells.
    pub min_cells: Option<usize>,
    pub merge_radius: f64,
    pub smooth_radius: usize,
    pub max_doublings: u32,
    pub min_coverage: f64,
    pub lambda: f64,
    pub dice_epsilon: f64,
    pub smooth_l1_delta: f64,
    pub seed: u64,
    pub noise_sigma: f64,
    pub min_mean_iou: f64,
    pub min_instance_iou: f64,
    pub allow_missing: bool,
    pub derive_quads: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let decode = DecodeConfig::default();
        let loss = LossConfig::default();
        let eval = EvalConfig::default();
        Self {
            stride: 1,
            alpha: decode.alpha.value(),
            prob_threshold: decode.prob_threshold,
            iou_threshold: eval.iou_threshold,
            mode: eval.mode,
            min_points: decode.min_points,
            min_cells: decode.min_cells,
            merge_radius: decode.merge_radius,
            smooth_radius: decode.smooth_radius,
            max_doublings: decode.fallback.max_doublings,
            min_coverage: decode.fallback.min_coverage,
            lambda: loss.lambda,
            dice_epsilon: loss.dice_epsilon,
            smooth_l1_delta: loss.smooth_l1_delta,
            seed: 0,
            noise_sigma: 0.0,
            min_mean_iou: 0.85,
            min_instance_iou: 0.75,
            allow_missing: false,
            derive_quads: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} must be in [0, 1], got {v}"))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive and finite, got {v}"))
            }
        };
        if self.stride == 0 {
            return Err("stride must be at least 1".into());
        }
        AlphaParam::new(self.alpha).map_err(|e| e.to_string())?;
        unit("prob_threshold", self.prob_threshold)?;
        unit("iou_threshold", self.iou_threshold)?;
        unit("min_coverage", self.min_coverage)?;
        unit("min_mean_iou", self.min_mean_iou)?;
        unit("min_instance_iou", self.min_instance_iou)?;
        positive("lambda", self.lambda)?;
        positive("dice_epsilon", self.dice_epsilon)?;
        positive("smooth_l1_delta", self.smooth_l1_delta)?;
        if !(self.merge_radius >= 0.0 && self.merge_radius.is_finite()) {
            return Err(format!("merge_radius must be non-negative, got {}", self.merge_radius));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        Ok(())
    }

    pub fn decode_config(&self) -> DecodeConfig {
        DecodeConfig {
            prob_threshold: self.prob_threshold,
            alpha: AlphaParam::new(self.alpha).expect("validated"),
            fallback: FallbackPolicy { max_doublings: self.max_doublings, min_coverage: self.min_coverage },
            min_points: self.min_points,
            min_cells: self.min_cells,
            merge_radius: self.merge_radius,
            smooth_radius: self.smooth_radius,
            derive_quads: self.derive_quads,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            iou_threshold: self.iou_threshold,
            mode: self.mode,
            allow_missing: self.allow_missing,
            ..Default::default()
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig { lambda: self.lambda, dice_epsilon: self.dice_epsilon, smooth_l1_delta: self.smooth_l1_delta }
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(dir.join(CONFIG_FILE_NAME), json + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
        assert_eq!(cfg.loss_config(), LossConfig::default());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"stride": 4, "mode": "quad"}"#).unwrap();
        assert_eq!(cfg.stride, 4);
        assert_eq!(cfg.mode, EvalMode::Quad);
        assert_eq!(cfg.alpha, RunConfig::default().alpha);
        assert!(serde_json::from_str::<RunConfig>(r#"{"strid": 4}"#).is_err());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        for bad in [
            RunConfig { stride: 0, ..Default::default() },
            RunConfig { alpha: -1.0, ..Default::default() },
            RunConfig { iou_threshold: 1.5, ..Default::default() },
            RunConfig { lambda: 0.0, ..Default::default() },
            RunConfig { noise_sigma: f64::NAN, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}

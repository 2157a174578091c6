//! Training losses with analytic gradients: soft dice on the text-region
//! probability and smooth-L1 on the boundary offsets.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid loss parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, LossError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
    pub dice_epsilon: f64,
    pub smooth_l1_delta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda: 1.0, dice_epsilon: 1.0, smooth_l1_delta: 1.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("lambda", self.lambda), ("dice_epsilon", self.dice_epsilon), ("smooth_l1_delta", self.smooth_l1_delta)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LossError::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub cls: f64,
    pub reg: f64,
    pub grad_prob: Array2<f64>,
    pub grad_dist_x: Array2<f64>,
    pub grad_dist_y: Array2<f64>,
}

/// Regression loss value plus gradients with respect to both offset maps.
#[derive(Debug, Clone, PartialEq)]
pub struct RegLoss {
    pub loss: f64,
    pub grad_x: Array2<f64>,
    pub grad_y: Array2<f64>,
}

fn check_shape(what: &str, a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(LossError::ShapeMismatch(format!("{what}: {:?} vs {:?}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps)` over cells whose
/// ignore value is zero, and its gradient with respect to `pred_prob`.
pub fn dice_loss(
    pred_prob: &Array2<f64>,
    gt_mask: &Array2<f64>,
    ignore_mask: &Array2<f64>,
    eps: f64,
) -> Result<(f64, Array2<f64>)> {
    check_shape("gt_mask", pred_prob, gt_mask)?;
    check_shape("ignore_mask", pred_prob, ignore_mask)?;
    let (mut inter, mut total) = (0.0, 0.0);
    Zip::from(pred_prob).and(gt_mask).and(ignore_mask).for_each(|&p, &g, &ig| {
        if ig == 0.0 {
            inter += p * g;
            total += p + g;
        }
    });
    let num = 2.0 * inter + eps;
    let den = total + eps;
    let loss = 1.0 - num / den;
    let mut grad = Array2::zeros(pred_prob.dim());
    Zip::from(&mut grad).and(gt_mask).and(ignore_mask).for_each(|d, &g, &ig| {
        if ig == 0.0 {
            *d = -(2.0 * g * den - num) / (den * den);
        }
    });
    Ok((loss, grad))
}

/// Quadratic below `delta`, linear above, matched in value and slope.
pub fn smooth_l1(e: f64, delta: f64) -> f64 {
    if e.abs() < delta {
        0.5 * e * e / delta
    } else {
        e.abs() - 0.5 * delta
    }
}

pub fn smooth_l1_grad(e: f64, delta: f64) -> f64 {
    if e.abs() < delta {
        e / delta
    } else {
        e.signum()
    }
}

/// Mean over region cells of `0.5 sl1(ex) + 0.5 sl1(ey)`. An empty region
/// gives zero loss and zero gradients.
pub fn reg_loss(
    pred_x: &Array2<f64>,
    pred_y: &Array2<f64>,
    gt_x: &Array2<f64>,
    gt_y: &Array2<f64>,
    region_mask: &Array2<f64>,
    delta: f64,
) -> Result<RegLoss> {
    for (name, a) in [("pred_y", pred_y), ("gt_x", gt_x), ("gt_y", gt_y), ("region_mask", region_mask)] {
        check_shape(name, pred_x, a)?;
    }
    let n = region_mask.iter().filter(|&&m| m != 0.0).count();
    let mut grad_x = Array2::zeros(pred_x.dim());
    let mut grad_y = Array2::zeros(pred_x.dim());
    if n == 0 {
        return Ok(RegLoss { loss: 0.0, grad_x, grad_y });
    }
    let scale = 0.5 / n as f64;
    let mut sum = 0.0;
    for ((r, c), &m) in region_mask.indexed_iter() {
        if m != 0.0 {
            let ex = pred_x[[r, c]] - gt_x[[r, c]];
            let ey = pred_y[[r, c]] - gt_y[[r, c]];
            sum += smooth_l1(ex, delta) + smooth_l1(ey, delta);
            grad_x[[r, c]] = scale * smooth_l1_grad(ex, delta);
            grad_y[[r, c]] = scale * smooth_l1_grad(ey, delta);
        }
    }
    Ok(RegLoss { loss: scale * sum, grad_x, grad_y })
}

pub fn total_loss(cls: f64, reg: f64, lambda: f64) -> f64 {
    cls + lambda * reg
}

/// Both losses for one prediction against encoder labels. The regression
/// term runs over the text mask minus ignored cells.
pub fn compute_losses(
    pred: &crate::decode::PredictionRaster,
    labels: &crate::encode::LabelRaster,
    cfg: &LossConfig,
) -> Result<LossReport> {
    cfg.validate()?;
    let gt = labels.mask.mapv(f64::from);
    let ignore = labels.ignore_mask.mapv(f64::from);
    let (cls, grad_prob) = dice_loss(&pred.prob, &gt, &ignore, cfg.dice_epsilon)?;
    let region = Zip::from(&gt).and(&ignore).map_collect(|&g, &ig| if g != 0.0 && ig == 0.0 { 1.0 } else { 0.0 });
    let reg = reg_loss(&pred.dist_x, &pred.dist_y, &labels.dist_x, &labels.dist_y, &region, cfg.smooth_l1_delta)?;
    let mut grad_dist_x = reg.grad_x;
    let mut grad_dist_y = reg.grad_y;
    grad_dist_x *= cfg.lambda;
    grad_dist_y *= cfg.lambda;
    Ok(LossReport {
        total: total_loss(cls, reg.loss, cfg.lambda),
        cls,
        reg: reg.loss,
        grad_prob,
        grad_dist_x,
        grad_dist_y,
    })
}

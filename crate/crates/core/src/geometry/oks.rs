use crate::error::{Error, Result};
use crate::label::{Keypoints, NUM_JOINTS};

/// Per-joint falloff constants.
pub type OksSigmas = [f64; NUM_JOINTS];

/// No per-joint constants are published for the 18-joint skeleton, so every
/// joint defaults to the same value.
pub const DEFAULT_OKS_SIGMA: OksSigmas = [0.072; NUM_JOINTS];

/// Object keypoint similarity: the mean over visible ground-truth joints of
/// `exp(-d² / (2 · area · (2σ)²))`.
pub fn oks(pred: &Keypoints, gt: &Keypoints, gt_area: f64, sigmas: &OksSigmas) -> Result<f64> {
    if !gt_area.is_finite() || gt_area <= 0.0 {
        return Err(Error::Domain(format!(
            "ground-truth area must be positive, got {gt_area}"
        )));
    }
    let mut total = 0.0;
    let mut visible = 0usize;
    for ((p, g), sigma) in pred.joints().iter().zip(gt.joints()).zip(sigmas) {
        if !g.is_visible() {
            continue;
        }
        let k = 2.0 * sigma;
        let d2 = (p.x - g.x).powi(2) + (p.y - g.y).powi(2);
        total += (-d2 / (2.0 * gt_area * k * k)).exp();
        visible += 1;
    }
    if visible == 0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok(total / visible as f64)
}

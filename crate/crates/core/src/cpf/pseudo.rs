//! Confidence filters applied to single-task predictions before they are
//! used as training labels.

use crate::error::{Error, Result};
use crate::label::{FrameSet, SemanticMap};

pub const POSE_THRESHOLD: f64 = 0.2;
pub const SEMANTIC_THRESHOLD: f64 = 0.3;

/// Joints scoring strictly below `threshold` become invisible (score 0);
/// pose labels left with no visible joint are dropped. Labels without a
/// keypoint graph pass through untouched.
pub fn filter_pose_pseudolabels(frames: &FrameSet, threshold: f64) -> FrameSet {
    let mut out = frames.clone().into_frames();
    for frame in &mut out {
        frame.labels.retain_mut(|label| {
            let Some(graph) = label.graph.as_mut() else {
                return true;
            };
            for j in graph.joints_mut() {
                if j.score < threshold {
                    j.score = 0.0;
                }
            }
            graph.visible_count() > 0
        });
    }
    FrameSet::new(out)
}

/// Pixels with confidence strictly below `threshold` are set to the ignore
/// index.
pub fn filter_seg_pseudolabels(map: &SemanticMap, threshold: f64) -> Result<SemanticMap> {
    let Some(conf) = map.confidence() else {
        return Err(Error::validation(
            "semantic map",
            "confidence",
            "pseudo-label filtering needs per-pixel confidence",
        ));
    };
    let conf = conf.to_vec();
    let mut out = map.clone();
    for (c, &p) in out.classes_mut().iter_mut().zip(&conf) {
        if (p as f64) < threshold {
            *c = SemanticMap::IGNORE;
        }
    }
    Ok(out)
}

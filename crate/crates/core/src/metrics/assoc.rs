//! HOTA association accuracy for box (MOT) and mask (MOTS) tracking.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box_iou, mask_iou, solve_assignment, CostMatrix};
use crate::label::{Box2D, FrameSet, RleMask};
use crate::score::{Slot, TaskScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackMode {
    Box,
    Mask,
}

impl TrackMode {
    pub fn assa_slot(&self) -> Slot {
        match self {
            TrackMode::Box => Slot::AssaT,
            TrackMode::Mask => Slot::AssaR,
        }
    }

    pub fn ap_slot(&self) -> Slot {
        match self {
            TrackMode::Box => Slot::ApT,
            TrackMode::Mask => Slot::ApR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrackGeometry {
    Box(Box2D),
    Mask(RleMask),
}

impl TrackGeometry {
    pub fn similarity(&self, other: &TrackGeometry) -> Result<f64> {
        match (self, other) {
            (TrackGeometry::Box(a), TrackGeometry::Box(b)) => Ok(box_iou(a, b)),
            (TrackGeometry::Mask(a), TrackGeometry::Mask(b)) => mask_iou(a, b),
            _ => Err(Error::Invalid("cannot compare a box with a mask".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub track: String,
    pub category: String,
    pub geometry: TrackGeometry,
}

/// Tracks of one video, indexed by frame index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VideoTracks {
    pub frames: BTreeMap<u32, Vec<Detection>>,
}

/// Per-video tracks: each `(track, frame)` appears at most once and a track
/// keeps one category.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    pub videos: BTreeMap<String, VideoTracks>,
}

impl TrackSet {
    pub fn from_frames(frames: &FrameSet, mode: TrackMode) -> Result<Self> {
        let mut videos: BTreeMap<String, VideoTracks> = BTreeMap::new();
        let mut categories: BTreeMap<(String, String), String> = BTreeMap::new();
        for f in frames.frames() {
            let (Some(video), Some(index)) = (&f.video_name, f.frame_index) else {
                return Err(Error::validation(
                    &f.name,
                    "videoName",
                    "tracking frames need videoName and frameIndex",
                ));
            };
            let slot = videos
                .entry(video.clone())
                .or_default()
                .frames
                .entry(index)
                .or_default();
            for (i, l) in f.labels.iter().enumerate() {
                let geometry = match mode {
                    TrackMode::Box => l.box2d.map(TrackGeometry::Box),
                    TrackMode::Mask => l.rle.clone().map(TrackGeometry::Mask),
                };
                let Some(geometry) = geometry else {
                    let field = if mode == TrackMode::Box { "box2d" } else { "rle" };
                    return Err(Error::validation(
                        &f.name,
                        format!("labels[{i}].{field}"),
                        "required for tracking",
                    ));
                };
                if slot.iter().any(|d| d.track == l.id) {
                    return Err(Error::validation(
                        &f.name,
                        format!("labels[{i}].id"),
                        format!("track `{}` appears twice in one frame", l.id),
                    ));
                }
                let key = (video.clone(), l.id.clone());
                match categories.get(&key) {
                    Some(c) if *c != l.category => {
                        return Err(Error::validation(
                            &f.name,
                            format!("labels[{i}].category"),
                            format!("track `{}` changes category from `{c}` to `{}`", l.id, l.category),
                        ));
                    }
                    Some(_) => {}
                    None => {
                        categories.insert(key, l.category.clone());
                    }
                }
                slot.push(Detection {
                    track: l.id.clone(),
                    category: l.category.clone(),
                    geometry,
                });
            }
        }
        Ok(TrackSet { videos })
    }

    fn categories(&self) -> BTreeSet<&str> {
        self.videos
            .values()
            .flat_map(|v| v.frames.values().flatten().map(|d| d.category.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssaConfig {
    pub alphas: Vec<f64>,
}

impl Default for AssaConfig {
    fn default() -> Self {
        AssaConfig {
            alphas: (1..20).map(|k| k as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssaResult {
    /// In `[0, 100]`.
    pub value: f64,
    pub per_class: BTreeMap<String, f64>,
}

impl AssaResult {
    pub fn to_task_score(&self, slot: Slot) -> Result<TaskScore> {
        Ok(TaskScore::new(slot, self.value)?.with_breakdown(self.per_class.clone()))
    }
}

/// Matches made in one frame: `(gt track, pred track)` pairs.
fn match_frame<'a>(gts: &[&'a Detection], preds: &[&'a Detection], alpha: f64) -> Result<Vec<(&'a str, &'a str)>> {
    if gts.is_empty() || preds.is_empty() {
        return Ok(Vec::new());
    }
    let mut sim = vec![0.0; gts.len() * preds.len()];
    for (g, gd) in gts.iter().enumerate() {
        for (p, pd) in preds.iter().enumerate() {
            sim[g * preds.len() + p] = gd.geometry.similarity(&pd.geometry)?;
        }
    }
    // ineligible pairs cost more than any full set of eligible ones, so the
    // solver maximizes the number of eligible matches first
    let forbidden = (gts.len().min(preds.len()) + 1) as f64;
    let costs = CostMatrix::from_fn(gts.len(), preds.len(), |g, p| {
        let s = sim[g * preds.len() + p];
        if s >= alpha {
            1.0 - s
        } else {
            forbidden
        }
    });
    Ok(solve_assignment(&costs)
        .pairs
        .into_iter()
        .filter(|&(g, p)| sim[g * preds.len() + p] >= alpha)
        .map(|(g, p)| (gts[g].track.as_str(), preds[p].track.as_str()))
        .collect())
}

fn of_class<'a>(v: &'a VideoTracks, idx: u32, category: &str) -> Vec<&'a Detection> {
    v.frames
        .get(&idx)
        .map(|ds| ds.iter().filter(|d| d.category == category).collect())
        .unwrap_or_default()
}

/// `(sum of A over true positives, number of true positives)` for one video,
/// category and threshold.
fn video_alpha(gt: &VideoTracks, pred: Option<&VideoTracks>, category: &str, alpha: f64) -> Result<(f64, usize)> {
    let empty = VideoTracks::default();
    let pred = pred.unwrap_or(&empty);
    let indices: BTreeSet<u32> = gt.frames.keys().chain(pred.frames.keys()).copied().collect();
    let mut gt_len: BTreeMap<&str, usize> = BTreeMap::new();
    let mut pred_len: BTreeMap<&str, usize> = BTreeMap::new();
    let mut tpa: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for idx in indices {
        let gts = of_class(gt, idx, category);
        let preds = of_class(pred, idx, category);
        for d in &gts {
            *gt_len.entry(&d.track).or_default() += 1;
        }
        for d in &preds {
            *pred_len.entry(&d.track).or_default() += 1;
        }
        for pair in match_frame(&gts, &preds, alpha)? {
            *tpa.entry(pair).or_default() += 1;
        }
    }
    let mut sum = 0.0;
    let mut tps = 0usize;
    for (&(g, p), &n) in &tpa {
        let fna = gt_len[g] - n;
        let fpa = pred_len[p] - n;
        // every one of the n true positives of this pair scores the same
        sum += n as f64 * (n as f64 / (n + fna + fpa) as f64);
        tps += n;
    }
    Ok((sum, tps))
}

/// Association accuracy: per category, the mean over thresholds of the mean
/// association score of all true positives; then the mean over categories
/// with at least one ground-truth track.
pub fn assa(preds: &TrackSet, gts: &TrackSet, cfg: &AssaConfig) -> Result<AssaResult> {
    if let Some(v) = preds.videos.keys().find(|v| !gts.videos.contains_key(*v)) {
        return Err(Error::validation(
            v.as_str(),
            "videoName",
            "video has predictions but no ground truth",
        ));
    }
    if cfg.alphas.is_empty() {
        return Err(Error::Invalid("no localization thresholds".into()));
    }
    let categories: Vec<&str> = gts.categories().into_iter().collect();
    if categories.is_empty() {
        return Err(Error::EmptySplit("no ground-truth tracks".into()));
    }
    let per_class: Vec<(String, f64)> = categories
        .par_iter()
        .map(|&c| {
            let mut total = 0.0;
            for &alpha in &cfg.alphas {
                let mut sum = 0.0;
                let mut tps = 0usize;
                for (name, gt) in &gts.videos {
                    let (s, n) = video_alpha(gt, preds.videos.get(name), c, alpha)?;
                    sum += s;
                    tps += n;
                }
                total += if tps == 0 { 0.0 } else { sum / tps as f64 };
            }
            Ok((c.to_string(), 100.0 * total / cfg.alphas.len() as f64))
        })
        .collect::<Result<_>>()?;
    let value = per_class.iter().map(|(_, v)| v).sum::<f64>() / per_class.len() as f64;
    Ok(AssaResult {
        value,
        per_class: per_class.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{Frame, Label};

    fn frame(i: u32, labels: Vec<(&str, f64)>) -> Frame {
        let labels = labels
            .into_iter()
            .map(|(id, x)| Label::new(id, "car").with_box(Box2D::new(x, 0.0, x + 10.0, 10.0).unwrap()))
            .collect();
        Frame::new(format!("v-{i}")).in_video("v", i).with_labels(labels)
    }

    fn tracks(frames: Vec<Frame>) -> TrackSet {
        TrackSet::from_frames(&FrameSet::new(frames), TrackMode::Box).unwrap()
    }

    #[test]
    fn identical_tracks() {
        let gt = tracks((0..4).map(|i| frame(i, vec![("g", 0.0)])).collect());
        let r = assa(&gt, &gt, &AssaConfig::default()).unwrap();
        assert_eq!(r.value, 100.0);
    }

    #[test]
    fn split_track_scores_half() {
        let gt = tracks((0..4).map(|i| frame(i, vec![("g", 0.0)])).collect());
        let pred = tracks(
            (0..4)
                .map(|i| frame(i, vec![(if i < 2 { "a" } else { "b" }, 0.0)]))
                .collect(),
        );
        let r = assa(&pred, &gt, &AssaConfig::default()).unwrap();
        assert_eq!(r.value, 50.0);
    }

    #[test]
    fn unknown_prediction_video_is_rejected() {
        let gt = tracks(vec![frame(0, vec![("g", 0.0)])]);
        let other =
            TrackSet::from_frames(&FrameSet::new(vec![Frame::new("w").in_video("w", 0)]), TrackMode::Box).unwrap();
        assert!(matches!(
            assa(&other, &gt, &AssaConfig::default()),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn category_change_along_track_is_rejected() {
        let mut f1 = frame(1, vec![("g", 0.0)]);
        f1.labels[0].category = "bus".into();
        let fs = FrameSet::new(vec![frame(0, vec![("g", 0.0)]), f1]);
        assert!(TrackSet::from_frames(&fs, TrackMode::Box).is_err());
    }

    #[test]
    fn no_overlap_gives_zero() {
        let gt = tracks((0..3).map(|i| frame(i, vec![("g", 0.0)])).collect());
        let pred = tracks((0..3).map(|i| frame(i, vec![("p", 500.0)])).collect());
        assert_eq!(assa(&pred, &gt, &AssaConfig::default()).unwrap().value, 0.0);
    }
}

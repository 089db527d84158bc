//! COCO-style average precision in box, mask, and keypoint similarity modes.
//!
//! Per class and threshold, detections are taken in descending score order
//! (ties broken by frame name, then label id) and greedily matched within
//! their frame to the still-unmatched ground truth of highest similarity at
//! or above the threshold. AP is the mean interpolated precision over evenly
//! spaced recall points, where the interpolated precision at recall `r` is
//! the best precision reached at any recall `>= r`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box_iou, mask_iou, oks, OksSigmas, DEFAULT_OKS_SIGMA};
use crate::label::{Box2D, Frame, FrameSet, Keypoints, Label, RleMask};
use crate::score::{Slot, TaskScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApMode {
    Box,
    Mask,
    Keypoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApConfig {
    pub iou_thresholds: Vec<f64>,
    /// Detections kept per frame and class, highest scores first.
    pub max_dets: usize,
    /// Number of evenly spaced recall points in `[0, 1]`.
    pub recall_points: usize,
    pub sigmas: OksSigmas,
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig {
            iou_thresholds: (10..20).map(|k| k as f64 / 20.0).collect(),
            max_dets: 100,
            recall_points: 101,
            sigmas: DEFAULT_OKS_SIGMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAp {
    pub num_gt: usize,
    /// AP in `[0, 100]` at each threshold.
    pub ap_per_threshold: Vec<f64>,
    pub ap: f64,
    /// Recall reached by all kept detections, per threshold.
    pub recall_per_threshold: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApReport {
    pub thresholds: Vec<f64>,
    /// `None` marks classes without ground truth; they are left out of `map`.
    pub classes: BTreeMap<String, Option<ClassAp>>,
    pub map: f64,
}

impl ApReport {
    /// Mean over present classes of AP at threshold index `t`.
    pub fn map_at(&self, t: usize) -> f64 {
        let present: Vec<f64> = self.classes.values().flatten().map(|c| c.ap_per_threshold[t]).collect();
        present.iter().sum::<f64>() / present.len().max(1) as f64
    }

    pub fn to_task_score(&self, slot: Slot) -> Result<TaskScore> {
        let breakdown = self
            .classes
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|c| (k.clone(), c.ap)))
            .collect();
        Ok(TaskScore::new(slot, self.map)?.with_breakdown(breakdown))
    }
}

enum GtGeom<'a> {
    Box(&'a Box2D),
    Mask(&'a RleMask),
    Pose(&'a Keypoints, f64),
}

enum DetGeom<'a> {
    Box(&'a Box2D),
    Mask(&'a RleMask),
    Pose(&'a Keypoints),
}

struct Det<'a> {
    score: f64,
    frame: &'a str,
    id: &'a str,
    geom: DetGeom<'a>,
}

fn missing(frame: &Frame, index: usize, field: &str) -> Error {
    Error::validation(
        &frame.name,
        format!("labels[{index}].{field}"),
        "required for this evaluation mode",
    )
}

fn gt_geom<'a>(frame: &Frame, index: usize, label: &'a Label, mode: ApMode) -> Result<Option<GtGeom<'a>>> {
    Ok(Some(match mode {
        ApMode::Box => GtGeom::Box(label.box2d.as_ref().ok_or_else(|| missing(frame, index, "box2d"))?),
        ApMode::Mask => GtGeom::Mask(label.rle.as_ref().ok_or_else(|| missing(frame, index, "rle"))?),
        ApMode::Keypoint => {
            let kp = label.graph.as_ref().ok_or_else(|| missing(frame, index, "graph"))?;
            let area = label
                .box2d
                .as_ref()
                .ok_or_else(|| missing(frame, index, "box2d"))?
                .area();
            if kp.visible_count() == 0 {
                // no visible joint: nothing to localize
                return Ok(None);
            }
            GtGeom::Pose(kp, area)
        }
    }))
}

fn det_geom<'a>(frame: &Frame, index: usize, label: &'a Label, mode: ApMode) -> Result<DetGeom<'a>> {
    Ok(match mode {
        ApMode::Box => DetGeom::Box(label.box2d.as_ref().ok_or_else(|| missing(frame, index, "box2d"))?),
        ApMode::Mask => DetGeom::Mask(label.rle.as_ref().ok_or_else(|| missing(frame, index, "rle"))?),
        ApMode::Keypoint => DetGeom::Pose(label.graph.as_ref().ok_or_else(|| missing(frame, index, "graph"))?),
    })
}

fn similarity(det: &DetGeom, gt: &GtGeom, sigmas: &OksSigmas) -> Result<f64> {
    match (det, gt) {
        (DetGeom::Box(d), GtGeom::Box(g)) => Ok(box_iou(d, g)),
        (DetGeom::Mask(d), GtGeom::Mask(g)) => mask_iou(d, g),
        (DetGeom::Pose(d), GtGeom::Pose(g, area)) => oks(d, g, *area, sigmas),
        _ => unreachable!("detections and ground truth share one mode"),
    }
}

fn by_score_then_id(a: &Det, b: &Det) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.frame.cmp(b.frame))
        .then_with(|| a.id.cmp(b.id))
}

/// Interpolated AP (fraction, not percent) and final recall for one ranked
/// list of true/false positive flags.
fn interpolated_ap(hits: &[bool], num_gt: usize, recall_points: usize) -> (f64, f64) {
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp_counts = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (k, &hit) in hits.iter().enumerate() {
        tp += hit as usize;
        tp_counts.push(tp);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for k in (1..precision.len()).rev() {
        if precision[k] > precision[k - 1] {
            precision[k - 1] = precision[k];
        }
    }
    let steps = recall_points.saturating_sub(1).max(1);
    let mut sum = 0.0;
    let mut k = 0usize;
    for i in 0..recall_points {
        // first rank whose recall tp/num_gt reaches i/steps, compared exactly
        while k < tp_counts.len() && tp_counts[k] * steps < i * num_gt {
            k += 1;
        }
        if k < precision.len() {
            sum += precision[k];
        }
    }
    (sum / recall_points as f64, tp as f64 / num_gt as f64)
}

fn evaluate_class(
    class: &str,
    frames: &[(&Frame, Option<&Frame>)],
    mode: ApMode,
    cfg: &ApConfig,
) -> Result<Option<ClassAp>> {
    let nt = cfg.iou_thresholds.len();
    let mut num_gt = 0usize;
    // (detection, hit flag per threshold)
    let mut ranked: Vec<(Det, Vec<bool>)> = Vec::new();
    for &(gt_frame, pred_frame) in frames {
        let mut gts = Vec::new();
        for (i, l) in gt_frame.labels.iter().enumerate() {
            if l.category == class {
                if let Some(g) = gt_geom(gt_frame, i, l, mode)? {
                    gts.push(g);
                }
            }
        }
        num_gt += gts.len();
        let mut dets = Vec::new();
        if let Some(pf) = pred_frame {
            for (i, l) in pf.labels.iter().enumerate() {
                if l.category == class {
                    dets.push(Det {
                        score: l.score.expect("scores validated up front"),
                        frame: &pf.name,
                        id: &l.id,
                        geom: det_geom(pf, i, l, mode)?,
                    });
                }
            }
        }
        dets.sort_by(by_score_then_id);
        dets.truncate(cfg.max_dets);

        let sims: Vec<Vec<f64>> = dets
            .iter()
            .map(|d| gts.iter().map(|g| similarity(&d.geom, g, &cfg.sigmas)).collect())
            .collect::<Result<_>>()?;
        let mut flags = vec![vec![false; nt]; dets.len()];
        for (t, &thr) in cfg.iou_thresholds.iter().enumerate() {
            let mut taken = vec![false; gts.len()];
            for (d, row) in sims.iter().enumerate() {
                let mut best: Option<(usize, f64)> = None;
                for (g, &s) in row.iter().enumerate() {
                    if taken[g] || s < thr {
                        continue;
                    }
                    if best.is_none_or(|(_, b)| s > b) {
                        best = Some((g, s));
                    }
                }
                if let Some((g, _)) = best {
                    taken[g] = true;
                    flags[d][t] = true;
                }
            }
        }
        ranked.extend(dets.into_iter().zip(flags));
    }
    if num_gt == 0 {
        return Ok(None);
    }
    ranked.sort_by(|a, b| by_score_then_id(&a.0, &b.0));

    let mut ap_per_threshold = Vec::with_capacity(nt);
    let mut recall_per_threshold = Vec::with_capacity(nt);
    for t in 0..nt {
        let hits: Vec<bool> = ranked.iter().map(|(_, f)| f[t]).collect();
        let (ap, recall) = interpolated_ap(&hits, num_gt, cfg.recall_points);
        ap_per_threshold.push(100.0 * ap);
        recall_per_threshold.push(recall);
    }
    let ap = ap_per_threshold.iter().sum::<f64>() / nt as f64;
    Ok(Some(ClassAp {
        num_gt,
        ap_per_threshold,
        ap,
        recall_per_threshold,
    }))
}

pub fn evaluate_ap(preds: &FrameSet, gts: &FrameSet, mode: ApMode, cfg: &ApConfig) -> Result<ApReport> {
    if gts.is_empty() {
        return Err(Error::EmptySplit("no ground-truth frames".into()));
    }
    if cfg.iou_thresholds.is_empty() || cfg.recall_points < 2 {
        return Err(Error::Invalid(
            "need at least one threshold and two recall points".into(),
        ));
    }
    for f in preds.frames() {
        if let Some(i) = f.labels.iter().position(|l| l.score.is_none()) {
            return Err(Error::validation(
                &f.name,
                format!("labels[{i}].score"),
                "prediction has no score",
            ));
        }
    }
    let pred_by_name = preds.by_name();
    let frames: Vec<(&Frame, Option<&Frame>)> = gts
        .frames()
        .iter()
        .map(|g| (g, pred_by_name.get(g.name.as_str()).copied()))
        .collect();
    let classes: BTreeSet<&str> = gts
        .frames()
        .iter()
        .chain(preds.frames())
        .flat_map(|f| f.labels.iter().map(|l| l.category.as_str()))
        .collect();

    let results: Vec<(String, Option<ClassAp>)> = classes
        .into_par_iter()
        .map(|c| Ok((c.to_string(), evaluate_class(c, &frames, mode, cfg)?)))
        .collect::<Result<_>>()?;
    let classes: BTreeMap<String, Option<ClassAp>> = results.into_iter().collect();
    let present: Vec<f64> = classes.values().flatten().map(|c| c.ap).collect();
    if present.is_empty() {
        return Err(Error::EmptySplit("ground truth has no instances".into()));
    }
    let map = present.iter().sum::<f64>() / present.len() as f64;
    Ok(ApReport {
        thresholds: cfg.iou_thresholds.clone(),
        classes,
        map,
    })
}

/// AP over every frame of a tracking split; track ids play no role.
pub fn tracking_ap(preds: &FrameSet, gts: &FrameSet, mode: ApMode, cfg: &ApConfig) -> Result<ApReport> {
    if mode == ApMode::Keypoint {
        return Err(Error::Invalid("tracking AP uses box or mask similarity".into()));
    }
    evaluate_ap(preds, gts, mode, cfg)
}

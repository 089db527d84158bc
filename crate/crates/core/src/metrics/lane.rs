//! Lane detection scored as contour IoU along three label axes (category,
//! direction, style) against dilated ground truth.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::dilate;
use crate::label::raster::draw_poly2d;
use crate::label::vocab::{LANE_CATEGORIES, LANE_DIRECTIONS, LANE_DIRECTION_KEY, LANE_STYLES, LANE_STYLE_KEY};
use crate::label::{BinaryMask, Frame, FrameSet, Label, RasterOptions};
use crate::score::{Slot, TaskScore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaneConfig {
    pub dilation_radius: usize,
    pub thickness: f64,
    pub subsample: usize,
    pub height: usize,
    pub width: usize,
    pub bezier: bool,
}

impl Default for LaneConfig {
    fn default() -> Self {
        LaneConfig {
            dilation_radius: 5,
            thickness: 2.0,
            subsample: 1000,
            height: 720,
            width: 1280,
            bezier: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Category,
    Direction,
    Style,
}

impl Axis {
    const ALL: [Axis; 3] = [Axis::Category, Axis::Direction, Axis::Style];

    fn name(&self) -> &'static str {
        match self {
            Axis::Category => "category",
            Axis::Direction => "direction",
            Axis::Style => "style",
        }
    }

    fn classes(&self) -> &'static [&'static str] {
        match self {
            Axis::Category => &LANE_CATEGORIES,
            Axis::Direction => &LANE_DIRECTIONS,
            Axis::Style => &LANE_STYLES,
        }
    }

    fn value<'a>(&self, label: &'a Label) -> Option<&'a str> {
        match self {
            Axis::Category => Some(label.category.as_str()),
            Axis::Direction => label.attributes.get(LANE_DIRECTION_KEY).map(String::as_str),
            Axis::Style => label.attributes.get(LANE_STYLE_KEY).map(String::as_str),
        }
    }
}

/// Intersection/union pixel counts per `(axis, class)` over a set of frames.
type Counts = Vec<Vec<(u64, u64)>>;

fn empty_counts() -> Counts {
    Axis::ALL.iter().map(|a| vec![(0, 0); a.classes().len()]).collect()
}

fn class_raster(labels: &[Label], axis: Axis, class: &str, cfg: &LaneConfig) -> Result<Option<BinaryMask>> {
    let mut raster: Option<BinaryMask> = None;
    let opts = RasterOptions {
        thickness: cfg.thickness,
        bezier: cfg.bezier,
    };
    for label in labels.iter().filter(|l| axis.value(l) == Some(class)) {
        let r = raster.get_or_insert_with(|| BinaryMask::new(cfg.height, cfg.width));
        for poly in &label.poly2d {
            draw_poly2d(r, poly, opts)?;
        }
    }
    Ok(raster)
}

fn frame_counts(pred: Option<&Frame>, gt: &Frame, cfg: &LaneConfig) -> Result<Counts> {
    let mut counts = empty_counts();
    let no_labels: &[Label] = &[];
    let pred_labels = pred.map_or(no_labels, |f| f.labels.as_slice());
    for (a, axis) in Axis::ALL.iter().enumerate() {
        for (c, class) in axis.classes().iter().enumerate() {
            let p = class_raster(pred_labels, *axis, class, cfg)?;
            let g = class_raster(&gt.labels, *axis, class, cfg)?.map(|g| dilate(&g, cfg.dilation_radius));
            counts[a][c] = match (p, g) {
                (None, None) => (0, 0),
                (Some(p), None) => (0, p.count()),
                (None, Some(g)) => (0, g.count()),
                (Some(p), Some(g)) => p.overlap(&g),
            };
        }
    }
    Ok(counts)
}

/// The evaluated frames: the first `subsample` ground-truth frames in name
/// order.
fn subsample(gts: &FrameSet, n: usize) -> Vec<&Frame> {
    let mut frames: Vec<&Frame> = gts.frames().iter().collect();
    frames.sort_by(|a, b| a.name.cmp(&b.name));
    frames.truncate(n);
    frames
}

pub fn lane_boundary_iou(preds: &FrameSet, gts: &FrameSet, cfg: &LaneConfig) -> Result<TaskScore> {
    if gts.is_empty() {
        return Err(Error::EmptySplit("no ground-truth lane frames".into()));
    }
    let pred_by_name = preds.by_name();
    let per_frame: Vec<Counts> = subsample(gts, cfg.subsample)
        .par_iter()
        .map(|gt| frame_counts(pred_by_name.get(gt.name.as_str()).copied(), gt, cfg))
        .collect::<Result<_>>()?;

    let mut total = empty_counts();
    for counts in &per_frame {
        for (ta, fa) in total.iter_mut().zip(counts) {
            for (t, f) in ta.iter_mut().zip(fa) {
                t.0 += f.0;
                t.1 += f.1;
            }
        }
    }

    let mut breakdown = BTreeMap::new();
    let mut axis_scores = Vec::new();
    for (axis, classes) in Axis::ALL.iter().zip(&total) {
        let ious: Vec<f64> = classes
            .iter()
            .zip(axis.classes())
            .filter(|((_, union), _)| *union > 0)
            .map(|(&(inter, union), name)| {
                let iou = inter as f64 / union as f64;
                breakdown.insert(format!("{}/{}", axis.name(), name), 100.0 * iou);
                iou
            })
            .collect();
        if !ious.is_empty() {
            let score = ious.iter().sum::<f64>() / ious.len() as f64;
            breakdown.insert(axis.name().to_string(), 100.0 * score);
            axis_scores.push(score);
        }
    }
    if axis_scores.is_empty() {
        return Err(Error::EmptyMetric(
            "no lane pixels in predictions or ground truth".into(),
        ));
    }
    let value = 100.0 * axis_scores.iter().sum::<f64>() / axis_scores.len() as f64;
    Ok(TaskScore::new(Slot::IouL, value)?.with_breakdown(breakdown))
}

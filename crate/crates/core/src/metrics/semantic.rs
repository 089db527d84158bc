//! Confusion-matrix mIoU for semantic segmentation and drivable area.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::label::vocab::{DRIVABLE_BACKGROUND, DRIVABLE_CLASSES, SEMANTIC_CLASSES};
use crate::label::{Frame, FrameSet, SemanticMap};
use crate::score::{Slot, TaskScore};

/// Pixel counts indexed `[gt][pred]`, plus per-class counts of ground-truth
/// pixels the prediction left unlabelled (ignore index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
    unpredicted: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n: n_classes,
            counts: vec![0; n_classes * n_classes],
            unpredicted: vec![0; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.n + pred]
    }

    pub fn unpredicted(&self, gt: usize) -> u64 {
        self.unpredicted[gt]
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().chain(&self.unpredicted).all(|&c| c == 0)
    }

    /// `(tp, fp, fn)` for one class.
    pub fn class_counts(&self, c: usize) -> (u64, u64, u64) {
        let tp = self.get(c, c);
        let col: u64 = (0..self.n).map(|g| self.get(g, c)).sum();
        let row: u64 = (0..self.n).map(|p| self.get(c, p)).sum::<u64>() + self.unpredicted[c];
        (tp, col - tp, row - tp)
    }
}

impl AddAssign<&ConfusionMatrix> for ConfusionMatrix {
    fn add_assign(&mut self, rhs: &ConfusionMatrix) {
        assert_eq!(self.n, rhs.n, "confusion matrices of different class counts");
        for (a, b) in self.counts.iter_mut().zip(&rhs.counts) {
            *a += b;
        }
        for (a, b) in self.unpredicted.iter_mut().zip(&rhs.unpredicted) {
            *a += b;
        }
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(mut self, rhs: ConfusionMatrix) -> ConfusionMatrix {
        self += &rhs;
        self
    }
}

pub fn accumulate_confusion(pred: &SemanticMap, gt: &SemanticMap, n_classes: usize) -> Result<ConfusionMatrix> {
    if pred.shape() != gt.shape() {
        return Err(Error::Shape {
            left: pred.shape(),
            right: gt.shape(),
        });
    }
    let ignore = SemanticMap::IGNORE;
    let mut cm = ConfusionMatrix::new(n_classes);
    for (&p, &g) in pred.classes().iter().zip(gt.classes()) {
        for (v, side) in [(p, "prediction"), (g, "ground truth")] {
            if v != ignore && v as usize >= n_classes {
                return Err(Error::Invalid(format!("{side} class index {v} outside 0..{n_classes}")));
            }
        }
        if g == ignore {
            continue;
        }
        if p == ignore {
            cm.unpredicted[g as usize] += 1;
        } else {
            cm.counts[g as usize * n_classes + p as usize] += 1;
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanIou {
    /// In `[0, 100]`.
    pub value: f64,
    pub per_class: BTreeMap<usize, f64>,
}

/// Mean IoU over `scored` classes that occur in the ground truth or the
/// prediction; classes absent from both are left out of the mean.
pub fn miou(cm: &ConfusionMatrix, scored: &[usize]) -> Result<MeanIou> {
    let mut per_class = BTreeMap::new();
    for &c in scored {
        if c >= cm.n {
            return Err(Error::Invalid(format!("class {c} outside 0..{}", cm.n)));
        }
        let (tp, fp, fn_) = cm.class_counts(c);
        let denom = tp + fp + fn_;
        if denom > 0 {
            per_class.insert(c, 100.0 * tp as f64 / denom as f64);
        }
    }
    if per_class.is_empty() {
        return Err(Error::EmptyMetric("no scored class present".into()));
    }
    let value = per_class.values().sum::<f64>() / per_class.len() as f64;
    Ok(MeanIou { value, per_class })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseTask {
    Semantic,
    Drivable,
}

impl DenseTask {
    pub fn slot(&self) -> Slot {
        match self {
            DenseTask::Semantic => Slot::IouS,
            DenseTask::Drivable => Slot::IouA,
        }
    }

    pub fn classes(&self) -> &'static [&'static str] {
        match self {
            DenseTask::Semantic => &SEMANTIC_CLASSES,
            DenseTask::Drivable => &DRIVABLE_CLASSES,
        }
    }

    /// Value given to pixels no label covers.
    fn fill(&self) -> u8 {
        match self {
            DenseTask::Semantic => SemanticMap::IGNORE,
            DenseTask::Drivable => DRIVABLE_BACKGROUND,
        }
    }

    pub fn scored_classes(&self) -> Vec<usize> {
        match self {
            DenseTask::Semantic => (0..SEMANTIC_CLASSES.len()).collect(),
            DenseTask::Drivable => (0..DRIVABLE_CLASSES.len())
                .filter(|&c| c != DRIVABLE_BACKGROUND as usize)
                .collect(),
        }
    }
}

fn frame_shape(frame: &Frame) -> Option<(usize, usize)> {
    frame.labels.iter().find_map(|l| l.rle.as_ref().map(|r| r.shape()))
}

/// Build the per-frame maps from RLE segment labels and accumulate one
/// confusion matrix over the split.
pub fn dense_confusion(preds: &FrameSet, gts: &FrameSet, task: DenseTask) -> Result<ConfusionMatrix> {
    if gts.is_empty() {
        return Err(Error::EmptySplit("no ground-truth frames".into()));
    }
    let pred_by_name = preds.by_name();
    let vocab = task.classes();
    let per_frame: Vec<Option<ConfusionMatrix>> = gts
        .frames()
        .par_iter()
        .map(|gt_frame| {
            let pred_frame = pred_by_name.get(gt_frame.name.as_str()).copied();
            let Some(shape) = frame_shape(gt_frame).or_else(|| pred_frame.and_then(frame_shape)) else {
                return Ok(None);
            };
            let gt_map = SemanticMap::from_labels(&gt_frame.labels, vocab, shape, task.fill())?;
            let pred_map = match pred_frame {
                Some(f) => SemanticMap::from_labels(&f.labels, vocab, shape, task.fill())?,
                None => SemanticMap::filled(shape.0, shape.1, task.fill()),
            };
            accumulate_confusion(&pred_map, &gt_map, vocab.len()).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut total = ConfusionMatrix::new(vocab.len());
    for cm in per_frame.iter().flatten() {
        total += cm;
    }
    Ok(total)
}

pub fn dense_miou(preds: &FrameSet, gts: &FrameSet, task: DenseTask) -> Result<TaskScore> {
    let cm = dense_confusion(preds, gts, task)?;
    let m = miou(&cm, &task.scored_classes())?;
    let names = task.classes();
    let breakdown = m.per_class.iter().map(|(&c, &v)| (names[c].to_string(), v)).collect();
    Ok(TaskScore::new(task.slot(), m.value)?.with_breakdown(breakdown))
}

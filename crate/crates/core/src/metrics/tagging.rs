use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::label::{Frame, FrameSet, Scene, Weather};
use crate::score::{Slot, TaskScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagAttribute {
    Weather,
    Scene,
}

impl TagAttribute {
    pub fn slot(&self) -> Slot {
        match self {
            TagAttribute::Weather => Slot::AccGw,
            TagAttribute::Scene => Slot::AccGs,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            TagAttribute::Weather => "weather",
            TagAttribute::Scene => "scene",
        }
    }

    fn read(&self, frame: &Frame) -> Option<&'static str> {
        match self {
            TagAttribute::Weather => frame.attributes.weather.map(|w: Weather| w.as_str()),
            TagAttribute::Scene => frame.attributes.scene.map(|s: Scene| s.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TaggingOptions {
    /// Drop ground-truth frames tagged `undefined` instead of scoring them
    /// as a seventh class.
    pub exclude_undefined: bool,
}

/// Top-1 accuracy over ground-truth frames; a frame with no prediction (or
/// no predicted tag) counts as wrong.
pub fn tagging_accuracy(
    preds: &FrameSet,
    gts: &FrameSet,
    attribute: TagAttribute,
    opts: TaggingOptions,
) -> Result<TaskScore> {
    let pred_by_name = preds.by_name();
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut per_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for frame in gts.frames() {
        let Some(truth) = attribute.read(frame) else {
            return Err(Error::validation(
                &frame.name,
                format!("attributes.{}", attribute.name()),
                "ground-truth frame lacks the tag",
            ));
        };
        if opts.exclude_undefined && truth == "undefined" {
            continue;
        }
        let guess = pred_by_name.get(frame.name.as_str()).and_then(|f| attribute.read(f));
        let hit = guess == Some(truth);
        total += 1;
        correct += hit as usize;
        let entry = per_class.entry(truth.to_string()).or_default();
        entry.0 += hit as usize;
        entry.1 += 1;
    }
    if total == 0 {
        return Err(Error::EmptySplit(format!(
            "no ground-truth frames with a {} tag",
            attribute.name()
        )));
    }
    let breakdown = per_class
        .into_iter()
        .map(|(k, (hit, n))| (k, 100.0 * hit as f64 / n as f64))
        .collect();
    Ok(TaskScore::new(attribute.slot(), 100.0 * correct as f64 / total as f64)?.with_breakdown(breakdown))
}

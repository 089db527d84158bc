//! Annotation model shared by every evaluator: frames, labels, and the
//! geometry they carry (boxes, RLE masks, polylines, keypoint graphs), plus
//! the codecs that move them on and off disk.

mod flow;
mod parse;
pub(crate) mod raster;
mod rle;
pub mod vocab;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use flow::{read_flow, write_flow, FlowField, FLOW_MAGIC};
pub use parse::{parse_label_file, validate_label_file, write_label_file, Diagnostic};
pub use raster::{rasterize_poly2d, BinaryMask, RasterOptions};
pub use rle::{rle_decode, rle_encode, RleMask};
pub use vocab::{LabelSchema, Scene, Weather};

/// Number of joints in the pose skeleton.
pub const NUM_JOINTS: usize = 18;

/// Axis-aligned box in continuous pixel coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2D {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Box2D {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let b = Box2D { x1, y1, x2, y2 };
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) || x1 > x2 || y1 > y2 {
            return Err(Error::Invalid(format!("malformed box {b:?}")));
        }
        Ok(b)
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

impl Joint {
    pub fn is_visible(&self) -> bool {
        self.score > 0.0
    }
}

/// Fixed-size pose skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct Keypoints {
    joints: [Joint; NUM_JOINTS],
}

impl Keypoints {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        let n = joints.len();
        let joints: [Joint; NUM_JOINTS] = joints
            .try_into()
            .map_err(|_| Error::Invalid(format!("expected {NUM_JOINTS} joints, found {n}")))?;
        if let Some(j) = joints
            .iter()
            .find(|j| !(0.0..=1.0).contains(&j.score) || !j.x.is_finite() || !j.y.is_finite())
        {
            return Err(Error::Invalid(format!("joint out of range: {j:?}")));
        }
        Ok(Keypoints { joints })
    }

    pub fn joints(&self) -> &[Joint; NUM_JOINTS] {
        &self.joints
    }

    pub(crate) fn joints_mut(&mut self) -> &mut [Joint; NUM_JOINTS] {
        &mut self.joints
    }

    pub fn visible_count(&self) -> usize {
        self.joints.iter().filter(|j| j.is_visible()).count()
    }
}

/// Polyline or polygon with per-vertex type codes (`L` line vertex, `C`
/// cubic control point).
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2D {
    pub vertices: Vec<(f64, f64)>,
    pub types: String,
    pub closed: bool,
}

impl Poly2D {
    pub fn polyline(vertices: Vec<(f64, f64)>, closed: bool) -> Self {
        let types = "L".repeat(vertices.len());
        Poly2D {
            vertices,
            types,
            closed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub id: String,
    pub category: String,
    pub score: Option<f64>,
    pub box2d: Option<Box2D>,
    pub rle: Option<RleMask>,
    pub poly2d: Vec<Poly2D>,
    pub graph: Option<Keypoints>,
    /// String-valued label attributes (lane direction and style live here).
    pub attributes: BTreeMap<String, String>,
}

impl Label {
    pub fn new(id: impl Into<String>, category: impl Into<String>) -> Self {
        Label {
            id: id.into(),
            category: category.into(),
            score: None,
            box2d: None,
            rle: None,
            poly2d: Vec::new(),
            graph: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_box(mut self, b: Box2D) -> Self {
        self.box2d = Some(b);
        self
    }

    pub fn with_rle(mut self, m: RleMask) -> Self {
        self.rle = Some(m);
        self
    }

    pub fn with_score(mut self, s: f64) -> Self {
        self.score = Some(s);
        self
    }

    pub fn with_graph(mut self, k: Keypoints) -> Self {
        self.graph = Some(k);
        self
    }

    pub fn with_poly(mut self, p: Poly2D) -> Self {
        self.poly2d.push(p);
        self
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    pub fn has_geometry(&self) -> bool {
        self.box2d.is_some() || self.rle.is_some() || !self.poly2d.is_empty() || self.graph.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameAttributes {
    pub weather: Option<Weather>,
    pub scene: Option<Scene>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub video_name: Option<String>,
    pub frame_index: Option<u32>,
    pub attributes: FrameAttributes,
    pub labels: Vec<Label>,
}

impl Frame {
    pub fn new(name: impl Into<String>) -> Self {
        Frame {
            name: name.into(),
            video_name: None,
            frame_index: None,
            attributes: FrameAttributes::default(),
            labels: Vec::new(),
        }
    }

    pub fn in_video(mut self, video: impl Into<String>, index: u32) -> Self {
        self.video_name = Some(video.into());
        self.frame_index = Some(index);
        self
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Self {
        self.labels = labels;
        self
    }

    fn sort_key(&self) -> (Option<&str>, Option<u32>, &str) {
        (self.video_name.as_deref(), self.frame_index, &self.name)
    }
}

/// Parsed labels for one split, sorted by `(videoName, frameIndex, name)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameSet {
    frames: Vec<Frame>,
}

impl FrameSet {
    pub fn new(mut frames: Vec<Frame>) -> Self {
        frames.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        FrameSet { frames }
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frames keyed by name. Later duplicates shadow earlier ones.
    pub fn by_name(&self) -> BTreeMap<&str, &Frame> {
        self.frames.iter().map(|f| (f.name.as_str(), f)).collect()
    }
}

/// Per-pixel class indices with an optional confidence channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMap {
    height: usize,
    width: usize,
    classes: Vec<u8>,
    confidence: Option<Vec<f32>>,
}

impl SemanticMap {
    pub const IGNORE: u8 = 255;

    pub fn new(height: usize, width: usize, classes: Vec<u8>) -> Result<Self> {
        if classes.len() != height * width {
            return Err(Error::Invalid(format!(
                "semantic map has {} pixels, expected {}x{}",
                classes.len(),
                height,
                width
            )));
        }
        Ok(SemanticMap {
            height,
            width,
            classes,
            confidence: None,
        })
    }

    pub fn filled(height: usize, width: usize, class: u8) -> Self {
        SemanticMap {
            height,
            width,
            classes: vec![class; height * width],
            confidence: None,
        }
    }

    pub fn with_confidence(mut self, confidence: Vec<f32>) -> Result<Self> {
        if confidence.len() != self.classes.len() {
            return Err(Error::Invalid(format!(
                "confidence channel has {} pixels, expected {}",
                confidence.len(),
                self.classes.len()
            )));
        }
        if confidence.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Invalid("confidence outside [0, 1]".into()));
        }
        self.confidence = Some(confidence);
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Row-major class indices.
    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn confidence(&self) -> Option<&[f32]> {
        self.confidence.as_deref()
    }

    pub(crate) fn classes_mut(&mut self) -> &mut [u8] {
        &mut self.classes
    }

    /// Paint every set pixel of `mask` with `class`.
    pub fn paint(&mut self, mask: &RleMask, class: u8) -> Result<()> {
        if mask.shape() != self.shape() {
            return Err(Error::Shape {
                left: self.shape(),
                right: mask.shape(),
            });
        }
        let h = self.height;
        for (start, len) in mask.foreground_runs() {
            for p in start..start + len {
                // runs are column-major
                let (col, row) = (p / h, p % h);
                self.classes[row * self.width + col] = class;
            }
        }
        Ok(())
    }

    /// Build a map from labelled RLE segments: pixels covered by no label get
    /// `fill`; later labels overwrite earlier ones.
    pub fn from_labels(labels: &[Label], vocabulary: &[&str], shape: (usize, usize), fill: u8) -> Result<Self> {
        let mut map = SemanticMap::filled(shape.0, shape.1, fill);
        for label in labels {
            let class = vocabulary
                .iter()
                .position(|c| *c == label.category)
                .ok_or_else(|| Error::Invalid(format!("unknown class `{}`", label.category)))?;
            if let Some(rle) = &label.rle {
                map.paint(rle, class as u8)?;
            }
        }
        Ok(map)
    }
}

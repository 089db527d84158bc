//! Scalabel-style JSON label files.
//!
//! A file is either a list of frames or an object with a `frames` list.
//! Unknown fields are ignored. Frame fields: `name`, `videoName`,
//! `frameIndex`, `attributes{weather,scene}`, `labels`. Label fields: `id`,
//! `category`, `score`, `box2d{x1,y1,x2,y2}`, `rle{counts,size}`,
//! `poly2d[{vertices,types,closed}]`, `graph{nodes[{location,score}]}`,
//! `attributes`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};

use super::vocab::{LabelSchema, LANE_DIRECTIONS, LANE_DIRECTION_KEY, LANE_STYLES, LANE_STYLE_KEY};
use super::{Box2D, Frame, FrameAttributes, FrameSet, Joint, Keypoints, Label, Poly2D, RleMask};
use crate::error::{byte_offset, Error, Result};

/// One schema violation, located by frame and field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub frame: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "frame `{}`, field `{}`: {}", self.frame, self.field, self.message)
    }
}

impl From<Diagnostic> for Error {
    fn from(d: Diagnostic) -> Self {
        Error::Validation {
            frame: d.frame,
            field: d.field,
            message: d.message,
        }
    }
}

/// Parse and validate a label file against `schema`.
pub fn parse_label_file(bytes: &[u8], schema: LabelSchema) -> Result<FrameSet> {
    let (frames, diagnostics) = parse_inner(bytes, schema)?;
    match diagnostics.into_iter().next() {
        Some(d) => Err(d.into()),
        None => Ok(FrameSet::new(frames)),
    }
}

/// Collect every schema violation instead of stopping at the first. Syntax
/// errors still fail with [`Error::Parse`].
pub fn validate_label_file(bytes: &[u8], schema: LabelSchema) -> Result<Vec<Diagnostic>> {
    parse_inner(bytes, schema).map(|(_, d)| d)
}

fn parse_inner(bytes: &[u8], schema: LabelSchema) -> Result<(Vec<Frame>, Vec<Diagnostic>)> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut ctx = Ctx {
        diagnostics: Vec::new(),
        frame: String::from("<document>"),
    };
    let items = match &doc {
        Value::Array(items) => items.as_slice(),
        Value::Object(obj) => match obj.get("frames") {
            Some(Value::Array(items)) => items.as_slice(),
            _ => {
                ctx.report("frames", "expected a list of frames");
                return Ok((Vec::new(), ctx.diagnostics));
            }
        },
        _ => {
            ctx.report("<root>", "expected a list of frames");
            return Ok((Vec::new(), ctx.diagnostics));
        }
    };

    let mut frames = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        ctx.frame = format!("#{i}");
        if let Some(frame) = ctx.frame_from(item, schema) {
            frames.push(frame);
        }
    }

    let mut seen: BTreeMap<(&str, u32), &str> = BTreeMap::new();
    for f in &frames {
        if let (Some(video), Some(index)) = (f.video_name.as_deref(), f.frame_index) {
            if let Some(prev) = seen.insert((video, index), &f.name) {
                ctx.diagnostics.push(Diagnostic {
                    frame: f.name.clone(),
                    field: "frameIndex".into(),
                    message: format!("frame index {index} of video `{video}` already used by `{prev}`"),
                });
            }
        }
    }
    Ok((frames, ctx.diagnostics))
}

struct Ctx {
    diagnostics: Vec<Diagnostic>,
    frame: String,
}

impl Ctx {
    fn report(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            frame: self.frame.clone(),
            field: field.into(),
            message: message.into(),
        });
    }

    fn frame_from(&mut self, v: &Value, schema: LabelSchema) -> Option<Frame> {
        let Some(obj) = v.as_object() else {
            self.report("<frame>", "expected an object");
            return None;
        };
        let name = match obj.get("name") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                self.report("name", "expected a string");
                return None;
            }
            None => {
                self.report("name", "missing required field");
                return None;
            }
        };
        self.frame = name.clone();
        let before = self.diagnostics.len();

        let video_name = match obj.get("videoName") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.report("videoName", "expected a string");
                None
            }
        };
        let frame_index = match obj.get("frameIndex") {
            None | Some(Value::Null) => None,
            Some(v) => match v.as_u64().and_then(|i| u32::try_from(i).ok()) {
                Some(i) => Some(i),
                None => {
                    self.report("frameIndex", "expected a non-negative integer");
                    None
                }
            },
        };
        if schema.requires_video() {
            if video_name.is_none() {
                self.report("videoName", "missing required field");
            }
            if frame_index.is_none() {
                self.report("frameIndex", "missing required field");
            }
        }

        let mut attributes = FrameAttributes::default();
        if let Some(attrs) = obj.get("attributes").filter(|a| !a.is_null()) {
            match attrs.as_object() {
                Some(attrs) => {
                    attributes.weather = self.tag(attrs, "weather");
                    attributes.scene = self.tag(attrs, "scene");
                }
                None => self.report("attributes", "expected an object"),
            }
        }

        let mut labels = Vec::new();
        match obj.get("labels") {
            None | Some(Value::Null) => {}
            Some(Value::Array(items)) => {
                for (i, item) in items.iter().enumerate() {
                    if let Some(label) = self.label_from(item, i, schema) {
                        labels.push(label);
                    }
                }
            }
            Some(_) => self.report("labels", "expected a list"),
        }

        if schema.requires_id() {
            let mut ids = BTreeSet::new();
            for l in &labels {
                if !ids.insert(l.id.as_str()) {
                    self.report("labels.id", format!("duplicate track id `{}` in one frame", l.id));
                }
            }
        }

        (self.diagnostics.len() == before).then_some(Frame {
            name,
            video_name,
            frame_index,
            attributes,
            labels,
        })
    }

    fn tag<T: std::str::FromStr<Err = String>>(&mut self, attrs: &Map<String, Value>, key: &str) -> Option<T> {
        match attrs.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => match s.parse() {
                Ok(t) => Some(t),
                Err(e) => {
                    self.report(format!("attributes.{key}"), e);
                    None
                }
            },
            Some(_) => {
                self.report(format!("attributes.{key}"), "expected a string");
                None
            }
        }
    }

    fn label_from(&mut self, v: &Value, index: usize, schema: LabelSchema) -> Option<Label> {
        let at = |field: &str| format!("labels[{index}].{field}");
        let Some(obj) = v.as_object() else {
            self.report(format!("labels[{index}]"), "expected an object");
            return None;
        };
        let before = self.diagnostics.len();

        let id = match obj.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            None | Some(Value::Null) => {
                if schema.requires_id() {
                    self.report(at("id"), "missing required field");
                }
                index.to_string()
            }
            Some(_) => {
                self.report(at("id"), "expected a string or number");
                String::new()
            }
        };
        let category = match obj.get("category") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                self.report(at("category"), "expected a string");
                String::new()
            }
            None => {
                self.report(at("category"), "missing required field");
                String::new()
            }
        };
        if let Some(vocab) = schema.categories() {
            if !category.is_empty() && !vocab.contains(&category.as_str()) {
                self.report(at("category"), format!("unknown category `{category}`"));
            }
        }
        let score = match obj.get("score") {
            None | Some(Value::Null) => None,
            Some(v) => match v.as_f64().filter(|s| (0.0..=1.0).contains(s)) {
                Some(s) => Some(s),
                None => {
                    self.report(at("score"), "expected a number in [0, 1]");
                    None
                }
            },
        };

        let mut label = Label::new(id, category);
        label.score = score;

        if let Some(b) = obj.get("box2d").filter(|b| !b.is_null()) {
            label.box2d = self.box_from(b, &at("box2d"));
        }
        if let Some(r) = obj.get("rle").filter(|r| !r.is_null()) {
            label.rle = self.rle_from(r, &at("rle"));
        }
        if let Some(p) = obj.get("poly2d").filter(|p| !p.is_null()) {
            label.poly2d = self.polys_from(p, &at("poly2d"));
        }
        if let Some(g) = obj.get("graph").filter(|g| !g.is_null()) {
            label.graph = self.graph_from(g, &at("graph"));
        }
        if let Some(Value::Object(attrs)) = obj.get("attributes") {
            for (k, v) in attrs {
                if let Value::String(s) = v {
                    label.attributes.insert(k.clone(), s.clone());
                }
            }
        }

        if self.diagnostics.len() == before {
            if !label.has_geometry() {
                self.report(format!("labels[{index}]"), "label carries no geometry");
            } else {
                let required = match schema {
                    LabelSchema::Detection | LabelSchema::Tracking => Some(("box2d", label.box2d.is_some())),
                    LabelSchema::InstanceSegmentation
                    | LabelSchema::SegTracking
                    | LabelSchema::Semantic
                    | LabelSchema::Drivable => Some(("rle", label.rle.is_some())),
                    LabelSchema::Pose => Some(("graph", label.graph.is_some())),
                    LabelSchema::Lane => Some(("poly2d", !label.poly2d.is_empty())),
                    LabelSchema::Generic | LabelSchema::Tagging => None,
                };
                if let Some((field, false)) = required {
                    self.report(at(field), "missing required field");
                }
            }
            if schema == LabelSchema::Lane {
                for (key, vocab) in [
                    (LANE_DIRECTION_KEY, &LANE_DIRECTIONS[..]),
                    (LANE_STYLE_KEY, &LANE_STYLES[..]),
                ] {
                    match label.attributes.get(key) {
                        Some(v) if vocab.contains(&v.as_str()) => {}
                        Some(v) => self.report(at(&format!("attributes.{key}")), format!("unknown value `{v}`")),
                        None => self.report(at(&format!("attributes.{key}")), "missing required field"),
                    }
                }
            }
        }
        (self.diagnostics.len() == before).then_some(label)
    }

    fn number(&mut self, obj: &Map<String, Value>, key: &str, field: &str) -> Option<f64> {
        match obj.get(key).and_then(Value::as_f64) {
            Some(x) => Some(x),
            None => {
                self.report(format!("{field}.{key}"), "expected a number");
                None
            }
        }
    }

    fn box_from(&mut self, v: &Value, field: &str) -> Option<Box2D> {
        let Some(obj) = v.as_object() else {
            self.report(field, "expected an object");
            return None;
        };
        let x1 = self.number(obj, "x1", field)?;
        let y1 = self.number(obj, "y1", field)?;
        let x2 = self.number(obj, "x2", field)?;
        let y2 = self.number(obj, "y2", field)?;
        match Box2D::new(x1, y1, x2, y2) {
            Ok(b) => Some(b),
            Err(e) => {
                self.report(field, e.to_string());
                None
            }
        }
    }

    fn rle_from(&mut self, v: &Value, field: &str) -> Option<RleMask> {
        let size = v
            .get("size")
            .and_then(Value::as_array)
            .filter(|s| s.len() == 2)
            .and_then(|s| Some((s[0].as_u64()? as usize, s[1].as_u64()? as usize)));
        let Some((h, w)) = size else {
            self.report(format!("{field}.size"), "expected [height, width]");
            return None;
        };
        let mask = match v.get("counts") {
            Some(Value::String(s)) => RleMask::from_coco_string(s, h, w),
            Some(Value::Array(items)) => match items.iter().map(Value::as_u64).collect::<Option<Vec<_>>>() {
                Some(runs) => RleMask::new(h, w, runs),
                None => Err(Error::Invalid("run lengths must be non-negative integers".into())),
            },
            _ => Err(Error::Invalid("expected a string or list of run lengths".into())),
        };
        match mask {
            Ok(m) => Some(m),
            Err(e) => {
                self.report(format!("{field}.counts"), e.to_string());
                None
            }
        }
    }

    fn point(v: &Value) -> Option<(f64, f64)> {
        let p = v.as_array().filter(|p| p.len() >= 2)?;
        Some((p[0].as_f64()?, p[1].as_f64()?))
    }

    fn polys_from(&mut self, v: &Value, field: &str) -> Vec<Poly2D> {
        let Some(items) = v.as_array() else {
            self.report(field, "expected a list");
            return Vec::new();
        };
        let mut out = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let vertices = item
                .get("vertices")
                .and_then(Value::as_array)
                .and_then(|vs| vs.iter().map(Ctx::point).collect::<Option<Vec<_>>>());
            let Some(vertices) = vertices else {
                self.report(format!("{field}[{i}].vertices"), "expected a list of [x, y] pairs");
                continue;
            };
            if vertices.is_empty() {
                self.report(format!("{field}[{i}].vertices"), "empty vertex list");
                continue;
            }
            let types = match item.get("types").and_then(Value::as_str) {
                Some(t) if t.len() == vertices.len() => t.to_string(),
                Some(_) => {
                    self.report(format!("{field}[{i}].types"), "length differs from vertex count");
                    continue;
                }
                None => "L".repeat(vertices.len()),
            };
            let closed = item.get("closed").and_then(Value::as_bool).unwrap_or(false);
            out.push(Poly2D {
                vertices,
                types,
                closed,
            });
        }
        out
    }

    fn graph_from(&mut self, v: &Value, field: &str) -> Option<Keypoints> {
        let Some(nodes) = v.get("nodes").and_then(Value::as_array) else {
            self.report(format!("{field}.nodes"), "expected a list");
            return None;
        };
        let mut joints = Vec::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            let Some((x, y)) = node.get("location").and_then(Ctx::point) else {
                self.report(format!("{field}.nodes[{i}].location"), "expected [x, y]");
                return None;
            };
            let score = match (
                node.get("score").and_then(Value::as_f64),
                node.get("visibility").and_then(Value::as_str),
            ) {
                (Some(s), _) => s,
                (None, Some("N")) => 0.0,
                _ => 1.0,
            };
            joints.push(Joint { x, y, score });
        }
        match Keypoints::new(joints) {
            Ok(k) => Some(k),
            Err(e) => {
                self.report(format!("{field}.nodes"), e.to_string());
                None
            }
        }
    }
}

fn label_to_value(l: &Label) -> Value {
    let mut obj = Map::new();
    obj.insert("id".into(), json!(l.id));
    obj.insert("category".into(), json!(l.category));
    if let Some(s) = l.score {
        obj.insert("score".into(), json!(s));
    }
    if let Some(b) = &l.box2d {
        obj.insert("box2d".into(), json!({"x1": b.x1, "y1": b.y1, "x2": b.x2, "y2": b.y2}));
    }
    if let Some(r) = &l.rle {
        obj.insert(
            "rle".into(),
            json!({"counts": r.to_coco_string(), "size": [r.height(), r.width()]}),
        );
    }
    if !l.poly2d.is_empty() {
        let polys: Vec<Value> = l
            .poly2d
            .iter()
            .map(|p| {
                let vs: Vec<Value> = p.vertices.iter().map(|&(x, y)| json!([x, y])).collect();
                json!({"vertices": vs, "types": p.types, "closed": p.closed})
            })
            .collect();
        obj.insert("poly2d".into(), Value::Array(polys));
    }
    if let Some(g) = &l.graph {
        let nodes: Vec<Value> = g
            .joints()
            .iter()
            .map(|j| json!({"location": [j.x, j.y], "score": j.score}))
            .collect();
        obj.insert("graph".into(), json!({ "nodes": nodes }));
    }
    if !l.attributes.is_empty() {
        obj.insert("attributes".into(), json!(l.attributes));
    }
    Value::Object(obj)
}

/// Serialize frames back to the label-file format.
pub fn write_label_file(frames: &FrameSet) -> String {
    let items: Vec<Value> = frames
        .frames()
        .iter()
        .map(|f| {
            let mut obj = Map::new();
            obj.insert("name".into(), json!(f.name));
            if let Some(v) = &f.video_name {
                obj.insert("videoName".into(), json!(v));
            }
            if let Some(i) = f.frame_index {
                obj.insert("frameIndex".into(), json!(i));
            }
            let mut attrs = Map::new();
            if let Some(w) = f.attributes.weather {
                attrs.insert("weather".into(), json!(w.as_str()));
            }
            if let Some(s) = f.attributes.scene {
                attrs.insert("scene".into(), json!(s.as_str()));
            }
            if !attrs.is_empty() {
                obj.insert("attributes".into(), Value::Object(attrs));
            }
            obj.insert("labels".into(), f.labels.iter().map(label_to_value).collect());
            Value::Object(obj)
        })
        .collect();
    serde_json::to_string_pretty(&Value::Array(items)).expect("label values always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Weather;

    const ONE_CAR: &str = r#"[{"name": "a.jpg", "labels": [
        {"id": "1", "category": "car", "score": 0.9,
         "box2d": {"x1": 0, "y1": 0, "x2": 10, "y2": 10}}]}]"#;

    #[test]
    fn minimal_detection_document() {
        let fs = parse_label_file(ONE_CAR.as_bytes(), LabelSchema::Detection).unwrap();
        assert_eq!(fs.len(), 1);
        let l = &fs.frames()[0].labels[0];
        assert_eq!(l.category, "car");
        assert_eq!(l.box2d.unwrap().area(), 100.0);
    }

    #[test]
    fn dataset_object_form_is_accepted() {
        let doc = format!(r#"{{"config": {{}}, "frames": {ONE_CAR}}}"#);
        assert_eq!(
            parse_label_file(doc.as_bytes(), LabelSchema::Detection).unwrap().len(),
            1
        );
    }

    #[test]
    fn unknown_category_names_frame_and_field() {
        let doc = r#"[{"name": "f0", "videoName": "v", "frameIndex": 0, "labels": [
            {"id": "1", "category": "airplane", "box2d": {"x1": 0, "y1": 0, "x2": 1, "y2": 1}}]}]"#;
        match parse_label_file(doc.as_bytes(), LabelSchema::Tracking) {
            Err(Error::Validation { frame, field, message }) => {
                assert_eq!(frame, "f0");
                assert_eq!(field, "labels[0].category");
                assert!(message.contains("airplane"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_byte_offset() {
        let doc = b"[{\"name\": \"a\",\n  \"labels\": [}]";
        match parse_label_file(doc, LabelSchema::Generic) {
            Err(Error::Parse { offset, .. }) => assert_eq!(doc[offset], b'}'),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn frames_sorted_by_video_then_index() {
        let doc = r#"[
            {"name": "c", "videoName": "v", "frameIndex": 2},
            {"name": "a", "videoName": "v", "frameIndex": 0},
            {"name": "b", "videoName": "v", "frameIndex": 1}]"#;
        let fs = parse_label_file(doc.as_bytes(), LabelSchema::Generic).unwrap();
        let idx: Vec<_> = fs.frames().iter().map(|f| f.frame_index.unwrap()).collect();
        assert_eq!(idx, [0, 1, 2]);
    }

    #[test]
    fn duplicate_frame_index_in_video_is_rejected() {
        let doc = r#"[{"name": "a", "videoName": "v", "frameIndex": 0},
                      {"name": "b", "videoName": "v", "frameIndex": 0}]"#;
        let d = validate_label_file(doc.as_bytes(), LabelSchema::Generic).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "frameIndex");
    }

    #[test]
    fn tracking_duplicate_ids_in_frame() {
        let doc = r#"[{"name": "a", "videoName": "v", "frameIndex": 0, "labels": [
            {"id": 3, "category": "car", "box2d": {"x1": 0, "y1": 0, "x2": 1, "y2": 1}},
            {"id": 3, "category": "car", "box2d": {"x1": 2, "y1": 2, "x2": 3, "y2": 3}}]}]"#;
        let d = validate_label_file(doc.as_bytes(), LabelSchema::Tracking).unwrap();
        assert!(d.iter().any(|d| d.message.contains("duplicate track id `3`")));
    }

    #[test]
    fn pose_requires_eighteen_joints() {
        let nodes: Vec<Value> = (0..17).map(|i| json!({"location": [i, i], "score": 1.0})).collect();
        let doc = json!([{"name": "p", "labels": [{"id": "1", "category": "pedestrian", "graph": {"nodes": nodes}}]}]);
        let d = validate_label_file(doc.to_string().as_bytes(), LabelSchema::Pose).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("expected 18 joints, found 17"));
    }

    #[test]
    fn weather_vocabulary_includes_undefined() {
        let doc = r#"[{"name": "a", "attributes": {"weather": "undefined", "scene": "highway", "timeofday": "night"}},
                      {"name": "b", "attributes": {"weather": "sunny"}}]"#;
        let d = validate_label_file(doc.as_bytes(), LabelSchema::Tagging).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].frame, "b");
        let ok = r#"[{"name": "a", "attributes": {"weather": "undefined"}}]"#;
        let fs = parse_label_file(ok.as_bytes(), LabelSchema::Tagging).unwrap();
        assert_eq!(fs.frames()[0].attributes.weather, Some(Weather::Undefined));
    }

    #[test]
    fn lane_labels_need_direction_and_style() {
        let doc = r#"[{"name": "a", "labels": [{"id": "0", "category": "single white",
            "attributes": {"laneDirection": "parallel"},
            "poly2d": [{"vertices": [[0, 0], [5, 5]], "types": "LL", "closed": false}]}]}]"#;
        let d = validate_label_file(doc.as_bytes(), LabelSchema::Lane).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].field.ends_with("laneStyle"));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let doc = r#"[{"name": "a", "videoName": "v", "frameIndex": 4,
            "attributes": {"weather": "clear", "scene": "tunnel"},
            "labels": [{"id": "7", "category": "car", "score": 0.5,
                        "box2d": {"x1": 1, "y1": 2, "x2": 3, "y2": 4},
                        "rle": {"counts": [2, 3, 1], "size": [2, 3]}}]}]"#;
        let fs = parse_label_file(doc.as_bytes(), LabelSchema::Generic).unwrap();
        let again = parse_label_file(write_label_file(&fs).as_bytes(), LabelSchema::Generic).unwrap();
        assert_eq!(fs, again);
    }
}

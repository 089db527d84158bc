//! Document-in, document-out entry points behind the non-evaluation
//! subcommands: aggregation, plan generation, pseudo-label filtering and
//! file validation.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cpf::{
    build_schedule, curriculum_plan, filter_pose_pseudolabels, filter_seg_pseudolabels, CurriculumConfig, ImageSetSpec,
    ScheduleConfig, Strategy, POSE_THRESHOLD, SEMANTIC_THRESHOLD,
};
use crate::error::{from_json, Error, Result};
use crate::evaluate::{read_file, EvalTask, TOOL_VERSION};
use crate::label::{
    parse_label_file, read_flow, validate_label_file, write_label_file, Diagnostic, LabelSchema, SemanticMap,
};
use crate::score::Slot;
use crate::vtda::{vtda, GroupScores, ScaleWarning, ScalingTable};

/// Read a scores document: an object of slot keys, either bare or under a
/// `scores` key (as in an evaluation report).
pub fn parse_scores(bytes: &[u8]) -> Result<BTreeMap<Slot, f64>> {
    let doc: Value = from_json(bytes)?;
    let obj = match doc.get("scores") {
        Some(inner) => inner,
        None => &doc,
    };
    let Value::Object(map) = obj else {
        return Err(Error::Invalid("scores document must be an object of slot keys".into()));
    };
    map.iter()
        .map(|(k, v)| {
            let slot: Slot = k.parse()?;
            let x = v
                .as_f64()
                .ok_or_else(|| Error::Invalid(format!("score for {slot} is not a number")))?;
            Ok((slot, x))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VtdaReport {
    pub version: String,
    pub groups: GroupScores,
    pub scores: BTreeMap<Slot, f64>,
    pub scales: ScalingTable,
    pub warnings: Vec<ScaleWarning>,
    pub partial: bool,
    pub missing: Vec<Slot>,
    pub duration_ms: u64,
}

pub fn vtda_report(scores: &BTreeMap<Slot, f64>, scales: &ScalingTable, partial: bool) -> Result<VtdaReport> {
    let start = Instant::now();
    let groups = vtda(scores, scales, partial)?;
    Ok(VtdaReport {
        version: TOOL_VERSION.to_string(),
        groups,
        scores: scores.clone(),
        scales: scales.clone(),
        warnings: scales.warnings(),
        partial,
        missing: Slot::ALL.into_iter().filter(|s| !scores.contains_key(s)).collect(),
        duration_ms: start.elapsed().as_millis() as u64,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    #[default]
    Schedule,
    Curriculum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetPreset {
    /// Detection, segmentation and the full tracking set.
    Full,
    /// Detection, segmentation and the MOTS subset.
    Joint,
}

/// A `schedule` config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    #[serde(default)]
    pub kind: PlanKind,
    #[serde(default)]
    pub preset: Option<SetPreset>,
    #[serde(default)]
    pub sets: Option<Vec<ImageSetSpec>>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
}

fn default_batch_size() -> usize {
    16
}

fn default_strategy() -> Strategy {
    Strategy::RoundRobin
}

fn default_epochs() -> usize {
    1
}

/// Build the plan a config asks for. `seed` overrides the file's seed.
pub fn plan_document(request: &PlanRequest, seed: Option<u64>) -> Result<Value> {
    let value = match request.kind {
        PlanKind::Curriculum => serde_json::to_value(curriculum_plan(&request.curriculum)?),
        PlanKind::Schedule => {
            let sets = match (&request.sets, request.preset) {
                (Some(_), Some(_)) => return Err(Error::Invalid("give either `sets` or `preset`, not both".into())),
                (Some(sets), None) => sets.clone(),
                (None, Some(SetPreset::Full)) => ImageSetSpec::full_preset(),
                (None, Some(SetPreset::Joint)) | (None, None) => ImageSetSpec::joint_preset(),
            };
            let cfg = ScheduleConfig {
                sets,
                batch_size: request.batch_size,
                strategy: request.strategy,
                seed: seed.unwrap_or(request.seed),
                epochs: request.epochs,
            };
            serde_json::to_value(build_schedule(&cfg)?)
        }
    };
    Ok(value.expect("plans serialize"))
}

pub fn plan_from_json(bytes: &[u8], seed: Option<u64>) -> Result<Value> {
    plan_document(&from_json(bytes)?, seed)
}

/// Dense semantic prediction exchanged by `filter --task sem`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticDoc {
    pub height: usize,
    pub width: usize,
    /// Row-major class indices.
    pub classes: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Vec<f32>>,
}

impl SemanticDoc {
    pub fn to_map(&self) -> Result<SemanticMap> {
        let map = SemanticMap::new(self.height, self.width, self.classes.clone())?;
        match &self.confidence {
            Some(c) => map.with_confidence(c.clone()),
            None => Ok(map),
        }
    }

    pub fn from_map(map: &SemanticMap) -> Self {
        SemanticDoc {
            height: map.height(),
            width: map.width(),
            classes: map.classes().to_vec(),
            confidence: map.confidence().map(<[f32]>::to_vec),
        }
    }
}

/// Apply a pseudo-label filter to a document and return the filtered
/// document. `pose` takes a pose label file, `sem` a [`SemanticDoc`].
pub fn filter_document(task: EvalTask, bytes: &[u8], threshold: Option<f64>) -> Result<String> {
    match task {
        EvalTask::Pose => {
            let frames = parse_label_file(bytes, LabelSchema::Pose)?;
            Ok(write_label_file(&filter_pose_pseudolabels(
                &frames,
                threshold.unwrap_or(POSE_THRESHOLD),
            )))
        }
        EvalTask::Sem => {
            let doc: SemanticDoc = from_json(bytes)?;
            let out = filter_seg_pseudolabels(&doc.to_map()?, threshold.unwrap_or(SEMANTIC_THRESHOLD))?;
            Ok(serde_json::to_string(&SemanticDoc::from_map(&out)).expect("semantic doc serializes"))
        }
        other => Err(Error::Invalid(format!("no pseudo-label filter for task {other}"))),
    }
}

/// Schema diagnostics for a task file. Flow predictions are `.flo` files and
/// fail as a whole.
pub fn validate_file(task: EvalTask, path: &Path) -> Result<Vec<Diagnostic>> {
    let bytes = read_file(path)?;
    if task == EvalTask::Flow && path.extension().is_some_and(|e| e == "flo") {
        read_flow(&bytes)?;
        return Ok(Vec::new());
    }
    validate_label_file(&bytes, task.schema())
}

//! File-level evaluation: load a prediction/ground-truth pair, run the task's
//! metrics on a sized worker pool and produce a report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::OksSigmas;
use crate::label::{parse_label_file, read_flow, FrameSet, LabelSchema, NUM_JOINTS};
use crate::metrics::{
    assa, dense_miou, evaluate_ap, flow_proxy_iou, lane_boundary_iou, tagging_accuracy, ApConfig, ApMode, AssaConfig,
    DenseTask, FlowPair, InstanceMasks, LaneConfig, TagAttribute, TaggingOptions, TrackMode, TrackSet,
};
use crate::score::{Slot, TaskScore};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What `evaluate` can run: the ten tasks, plus the tracking tasks split
/// into their AP and AssA halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTask {
    Tag,
    Sem,
    Drivable,
    Lane,
    Det,
    Ins,
    Pose,
    Mot,
    Mots,
    Flow,
    MotAp,
    MotAssa,
    MotsAp,
    MotsAssa,
}

impl EvalTask {
    pub const ALL: [EvalTask; 14] = [
        EvalTask::Tag,
        EvalTask::Sem,
        EvalTask::Drivable,
        EvalTask::Lane,
        EvalTask::Det,
        EvalTask::Ins,
        EvalTask::Pose,
        EvalTask::Mot,
        EvalTask::Mots,
        EvalTask::Flow,
        EvalTask::MotAp,
        EvalTask::MotAssa,
        EvalTask::MotsAp,
        EvalTask::MotsAssa,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            EvalTask::Tag => "tag",
            EvalTask::Sem => "sem",
            EvalTask::Drivable => "drivable",
            EvalTask::Lane => "lane",
            EvalTask::Det => "det",
            EvalTask::Ins => "ins",
            EvalTask::Pose => "pose",
            EvalTask::Mot => "mot",
            EvalTask::Mots => "mots",
            EvalTask::Flow => "flow",
            EvalTask::MotAp => "mot_ap",
            EvalTask::MotAssa => "mot_assa",
            EvalTask::MotsAp => "mots_ap",
            EvalTask::MotsAssa => "mots_assa",
        }
    }

    /// Schema of the label files. Flow ground truth is MOTS-style masks.
    pub fn schema(&self) -> LabelSchema {
        match self {
            EvalTask::Tag => LabelSchema::Tagging,
            EvalTask::Sem => LabelSchema::Semantic,
            EvalTask::Drivable => LabelSchema::Drivable,
            EvalTask::Lane => LabelSchema::Lane,
            EvalTask::Det => LabelSchema::Detection,
            EvalTask::Ins => LabelSchema::InstanceSegmentation,
            EvalTask::Pose => LabelSchema::Pose,
            EvalTask::Mot | EvalTask::MotAp | EvalTask::MotAssa => LabelSchema::Tracking,
            EvalTask::Mots | EvalTask::MotsAp | EvalTask::MotsAssa | EvalTask::Flow => LabelSchema::SegTracking,
        }
    }

    pub fn slots(&self) -> &'static [Slot] {
        match self {
            EvalTask::Tag => &[Slot::AccGw, Slot::AccGs],
            EvalTask::Sem => &[Slot::IouS],
            EvalTask::Drivable => &[Slot::IouA],
            EvalTask::Lane => &[Slot::IouL],
            EvalTask::Det => &[Slot::ApD],
            EvalTask::Ins => &[Slot::ApI],
            EvalTask::Pose => &[Slot::ApP],
            EvalTask::Mot => &[Slot::ApT, Slot::AssaT],
            EvalTask::Mots => &[Slot::ApR, Slot::AssaR],
            EvalTask::Flow => &[Slot::IouF],
            EvalTask::MotAp => &[Slot::ApT],
            EvalTask::MotAssa => &[Slot::AssaT],
            EvalTask::MotsAp => &[Slot::ApR],
            EvalTask::MotsAssa => &[Slot::AssaR],
        }
    }

    fn takes_threshold(&self) -> bool {
        !matches!(
            self,
            EvalTask::Tag | EvalTask::Sem | EvalTask::Drivable | EvalTask::Lane | EvalTask::Flow
        )
    }
}

impl fmt::Display for EvalTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for EvalTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EvalTask::ALL
            .into_iter()
            .find(|t| t.key() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub task: EvalTask,
    /// Prediction label file; for `flow`, a directory of `.flo` files named
    /// after the earlier frame of each pair.
    pub pred: PathBuf,
    pub gt: PathBuf,
    /// Output location; not part of the report.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    /// Worker threads, default all cores; not part of the report.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// Single matching threshold (IoU, OKS or localization alpha) instead
    /// of the default sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Lane frames evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
    /// Per-joint OKS constants: one value for all joints or one per joint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
}

impl EvalConfig {
    pub fn new(task: EvalTask, pred: impl Into<PathBuf>, gt: impl Into<PathBuf>) -> Self {
        EvalConfig {
            task,
            pred: pred.into(),
            gt: gt.into(),
            out: None,
            workers: None,
            threshold: None,
            subsample: None,
            sigmas: None,
        }
    }

    fn check(&self) -> Result<()> {
        if let Some(t) = self.threshold {
            if !self.task.takes_threshold() {
                return Err(Error::Invalid(format!(
                    "--threshold does not apply to task {}",
                    self.task
                )));
            }
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Invalid(format!("threshold must lie in (0, 1], got {t}")));
            }
        }
        if self.subsample.is_some() && self.task != EvalTask::Lane {
            return Err(Error::Invalid(format!(
                "--subsample does not apply to task {}",
                self.task
            )));
        }
        if self.sigmas.is_some() && self.task != EvalTask::Pose {
            return Err(Error::Invalid(format!("--sigmas does not apply to task {}", self.task)));
        }
        if self.workers == Some(0) {
            return Err(Error::Invalid("--workers must be at least 1".into()));
        }
        Ok(())
    }

    fn oks_sigmas(&self) -> Result<Option<OksSigmas>> {
        let Some(s) = &self.sigmas else { return Ok(None) };
        let v: Vec<f64> = match s.len() {
            1 => vec![s[0]; NUM_JOINTS],
            NUM_JOINTS => s.clone(),
            n => return Err(Error::Invalid(format!("expected 1 or {NUM_JOINTS} sigmas, found {n}"))),
        };
        if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Invalid("sigmas must be positive".into()));
        }
        Ok(Some(v.try_into().expect("length checked")))
    }

    fn ap_config(&self) -> Result<ApConfig> {
        let mut cfg = ApConfig::default();
        if let Some(t) = self.threshold {
            cfg.iou_thresholds = vec![t];
        }
        if let Some(s) = self.oks_sigmas()? {
            cfg.sigmas = s;
        }
        Ok(cfg)
    }

    fn assa_config(&self) -> AssaConfig {
        match self.threshold {
            Some(t) => AssaConfig { alphas: vec![t] },
            None => AssaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub task: EvalTask,
    pub scores: BTreeMap<Slot, f64>,
    pub breakdowns: BTreeMap<Slot, BTreeMap<String, f64>>,
    pub config: EvalConfig,
    pub duration_ms: u64,
}

impl Report {
    /// JSON with every object's keys sorted.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// The report with `duration_ms` zeroed, for reproducibility checks.
    pub fn without_duration(&self) -> Report {
        Report {
            duration_ms: 0,
            ..self.clone()
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_labels(path: &Path, schema: LabelSchema) -> Result<FrameSet> {
    parse_label_file(&read_file(path)?, schema)
}

fn instance_masks(frame: &crate::label::Frame) -> InstanceMasks {
    frame
        .labels
        .iter()
        .filter_map(|l| l.rle.clone().map(|m| (l.id.clone(), m)))
        .collect()
}

/// Consecutive ground-truth frames of every video, each with the flow file
/// named after the earlier frame's stem.
pub fn load_flow_pairs(flow_dir: &Path, gts: &FrameSet) -> Result<Vec<FlowPair>> {
    let mut jobs = Vec::new();
    for w in gts.frames().windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let consecutive = prev.video_name.is_some()
            && prev.video_name == cur.video_name
            && matches!((prev.frame_index, cur.frame_index), (Some(a), Some(b)) if b == a + 1);
        if !consecutive {
            continue;
        }
        let stem = Path::new(&prev.name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| prev.name.clone());
        jobs.push((flow_dir.join(format!("{stem}.flo")), cur, prev));
    }
    jobs.par_iter()
        .map(|(path, cur, prev)| {
            let flow = read_flow(&read_file(path)?)?;
            Ok(FlowPair {
                flow,
                masks_t: instance_masks(cur),
                masks_prev: instance_masks(prev),
            })
        })
        .collect()
}

fn run(cfg: &EvalConfig) -> Result<Vec<TaskScore>> {
    let task = cfg.task;
    let schema = task.schema();
    let gts = load_labels(&cfg.gt, schema)?;
    if task == EvalTask::Flow {
        let pairs = load_flow_pairs(&cfg.pred, &gts)?;
        return Ok(vec![flow_proxy_iou(&pairs)?]);
    }
    let preds = load_labels(&cfg.pred, schema)?;
    let ap = |mode: ApMode, slot: Slot| -> Result<TaskScore> {
        evaluate_ap(&preds, &gts, mode, &cfg.ap_config()?)?.to_task_score(slot)
    };
    let assoc = |mode: TrackMode| -> Result<TaskScore> {
        let p = TrackSet::from_frames(&preds, mode)?;
        let g = TrackSet::from_frames(&gts, mode)?;
        assa(&p, &g, &cfg.assa_config())?.to_task_score(mode.assa_slot())
    };
    Ok(match task {
        EvalTask::Tag => [TagAttribute::Weather, TagAttribute::Scene]
            .into_iter()
            .map(|a| tagging_accuracy(&preds, &gts, a, TaggingOptions::default()))
            .collect::<Result<_>>()?,
        EvalTask::Sem => vec![dense_miou(&preds, &gts, DenseTask::Semantic)?],
        EvalTask::Drivable => vec![dense_miou(&preds, &gts, DenseTask::Drivable)?],
        EvalTask::Lane => {
            let mut lc = LaneConfig::default();
            if let Some(n) = cfg.subsample {
                lc.subsample = n;
            }
            vec![lane_boundary_iou(&preds, &gts, &lc)?]
        }
        EvalTask::Det => vec![ap(ApMode::Box, Slot::ApD)?],
        EvalTask::Ins => vec![ap(ApMode::Mask, Slot::ApI)?],
        EvalTask::Pose => vec![ap(ApMode::Keypoint, Slot::ApP)?],
        EvalTask::Mot => vec![ap(ApMode::Box, Slot::ApT)?, assoc(TrackMode::Box)?],
        EvalTask::Mots => vec![ap(ApMode::Mask, Slot::ApR)?, assoc(TrackMode::Mask)?],
        EvalTask::MotAp => vec![ap(ApMode::Box, Slot::ApT)?],
        EvalTask::MotsAp => vec![ap(ApMode::Mask, Slot::ApR)?],
        EvalTask::MotAssa => vec![assoc(TrackMode::Box)?],
        EvalTask::MotsAssa => vec![assoc(TrackMode::Mask)?],
        EvalTask::Flow => unreachable!("handled above"),
    })
}

/// Evaluate one task. Parallel work runs on a pool of `cfg.workers` threads;
/// every reduction happens in a fixed order, so the report does not depend
/// on the worker count.
pub fn evaluate(cfg: &EvalConfig) -> Result<Report> {
    cfg.check()?;
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let scores = pool.install(|| run(cfg))?;
    Ok(Report {
        version: TOOL_VERSION.to_string(),
        task: cfg.task,
        scores: scores.iter().map(|s| (s.slot, s.value)).collect(),
        breakdowns: scores
            .into_iter()
            .filter(|s| !s.per_class.is_empty())
            .map(|s| (s.slot, s.per_class))
            .collect(),
        config: cfg.clone(),
        duration_ms: start.elapsed().as_millis() as u64,
    })
}

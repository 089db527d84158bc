//! Stage plans: pretraining, joint training and per-decoder fine-tuning.

use serde::{Deserialize, Serialize};

use super::pseudo::{POSE_THRESHOLD, SEMANTIC_THRESHOLD};
use super::schedule::{ImageSetSpec, Strategy};
use crate::error::{Error, Result};
use crate::task::Task;

pub const STAGE_PLAN_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    pub pretrain_epochs: i64,
    pub joint_epochs: i64,
    pub decay_epochs: Vec<i64>,
    pub finetune_epochs: i64,
    pub finetune_lr_mult: f64,
    pub use_pseudolabels: bool,
    pub use_mots_subset: bool,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            pretrain_epochs: 12,
            joint_epochs: 12,
            decay_epochs: vec![8, 11],
            finetune_epochs: 6,
            finetune_lr_mult: 0.1,
            use_pseudolabels: true,
            use_mots_subset: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Pretrain,
    Joint,
    Finetune,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrDirective {
    /// Relative to the base learning rate.
    pub multiplier: f64,
    pub decay_epochs: Vec<u32>,
    pub decay_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSource {
    pub task: Task,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub kind: StageKind,
    pub tasks: Vec<Task>,
    pub sets: Vec<String>,
    pub epochs: u32,
    pub lr: LrDirective,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Strategy>,
    /// Modules trained in this stage; everything else is frozen.
    pub trainable: Vec<String>,
    pub pseudo_labels: Vec<PseudoLabelSource>,
    pub notes: Vec<String>,
}

/// Optimizer and augmentation settings carried as opaque metadata for the
/// trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerMetadata {
    pub optimizer: String,
    pub betas: [f64; 2],
    pub weight_decay: f64,
    pub base_lr: f64,
    pub batch_size: usize,
    pub crop: [usize; 2],
    pub multi_scale_heights: Vec<usize>,
}

impl Default for TrainerMetadata {
    fn default() -> Self {
        TrainerMetadata {
            optimizer: "AdamW".into(),
            betas: [0.9, 0.999],
            weight_decay: 0.05,
            base_lr: 1e-4,
            batch_size: 16,
            crop: [720, 1280],
            multi_scale_heights: (600..=720).step_by(24).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub version: u32,
    pub config: CurriculumConfig,
    pub metadata: TrainerMetadata,
    pub sets: Vec<ImageSetSpec>,
    pub stages: Vec<Stage>,
}

impl StagePlan {
    pub fn of_kind(&self, kind: StageKind) -> impl Iterator<Item = &Stage> {
        self.stages.iter().filter(move |s| s.kind == kind)
    }
}

fn epochs(field: &str, v: i64) -> Result<u32> {
    u32::try_from(v).map_err(|_| {
        Error::validation(
            "curriculum",
            field,
            format!("epoch count must be a non-negative integer, got {v}"),
        )
    })
}

fn decoder(t: Task) -> String {
    format!("decoder.{t}")
}

/// The data a task decoder is fine-tuned on.
fn finetune_set(t: Task, mots_subset: bool) -> &'static str {
    match t {
        Task::Tag | Task::Det | Task::Pose | Task::Drivable | Task::Lane => "detection",
        Task::Sem | Task::Ins => "segmentation",
        Task::Mot | Task::Flow => "tracking",
        Task::Mots if mots_subset => "mots_subset",
        Task::Mots => "tracking",
    }
}

fn ids(sets: &[ImageSetSpec]) -> Vec<String> {
    sets.iter().map(|s| s.id.clone()).collect()
}

pub fn curriculum_plan(cfg: &CurriculumConfig) -> Result<StagePlan> {
    let pretrain = epochs("pretrain_epochs", cfg.pretrain_epochs)?;
    let joint = epochs("joint_epochs", cfg.joint_epochs)?;
    let finetune = epochs("finetune_epochs", cfg.finetune_epochs)?;
    let decay = cfg
        .decay_epochs
        .iter()
        .map(|&e| epochs("decay_epochs", e))
        .collect::<Result<Vec<_>>>()?;
    if !(cfg.finetune_lr_mult > 0.0 && cfg.finetune_lr_mult.is_finite()) {
        return Err(Error::validation("curriculum", "finetune_lr_mult", "must be positive"));
    }

    let step = |decay_epochs: Vec<u32>| LrDirective {
        multiplier: 1.0,
        decay_epochs,
        decay_factor: 0.1,
    };
    let joint_sets = if cfg.use_mots_subset {
        ImageSetSpec::joint_preset()
    } else {
        ImageSetSpec::full_preset()
    };

    let mut stages = vec![
        Stage {
            name: "pretrain.detection_tracking".into(),
            kind: StageKind::Pretrain,
            tasks: vec![Task::Det, Task::Mot],
            sets: vec!["detection".into(), "tracking".into()],
            epochs: pretrain,
            lr: step(vec![8, 11].into_iter().filter(|&e| e < pretrain).collect()),
            sampler: None,
            trainable: vec!["backbone".into(), decoder(Task::Det), decoder(Task::Mot)],
            pseudo_labels: Vec::new(),
            notes: Vec::new(),
        },
        Stage {
            name: "pretrain.segmentation_pose".into(),
            kind: StageKind::Pretrain,
            tasks: vec![Task::Ins, Task::Mots, Task::Pose],
            sets: vec!["segmentation".into(), "mots_subset".into(), "detection".into()],
            epochs: pretrain,
            lr: step(vec![8, 11].into_iter().filter(|&e| e < pretrain).collect()),
            sampler: None,
            trainable: vec![decoder(Task::Ins), decoder(Task::Pose)],
            pseudo_labels: Vec::new(),
            notes: vec!["mots decoder has no trainable parameters".into()],
        },
        Stage {
            name: "joint".into(),
            kind: StageKind::Joint,
            tasks: Task::ALL.to_vec(),
            sets: ids(&joint_sets),
            epochs: joint,
            lr: step(decay),
            sampler: Some(Strategy::RoundRobin),
            trainable: vec!["all".into()],
            pseudo_labels: if cfg.use_pseudolabels {
                vec![
                    PseudoLabelSource {
                        task: Task::Pose,
                        threshold: POSE_THRESHOLD,
                    },
                    PseudoLabelSource {
                        task: Task::Sem,
                        threshold: SEMANTIC_THRESHOLD,
                    },
                ]
            } else {
                Vec::new()
            },
            notes: if cfg.use_mots_subset {
                vec!["tracking set replaced by its MOTS subset".into()]
            } else {
                Vec::new()
            },
        },
    ];
    if finetune > 0 {
        stages.extend(Task::ALL.iter().map(|&t| Stage {
            name: format!("finetune.{t}"),
            kind: StageKind::Finetune,
            tasks: vec![t],
            sets: vec![finetune_set(t, cfg.use_mots_subset).into()],
            epochs: finetune,
            lr: LrDirective {
                multiplier: cfg.finetune_lr_mult,
                decay_epochs: Vec::new(),
                decay_factor: 1.0,
            },
            sampler: None,
            trainable: vec![decoder(t)],
            pseudo_labels: Vec::new(),
            notes: Vec::new(),
        }));
    }

    let mut sets = ImageSetSpec::full_preset();
    sets.push(ImageSetSpec::mots_subset());
    Ok(StagePlan {
        version: STAGE_PLAN_VERSION,
        config: cfg.clone(),
        metadata: TrainerMetadata::default(),
        sets,
        stages,
    })
}

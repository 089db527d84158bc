//! Batch schedules over partially annotated image sets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::Task;

pub const SCHEDULE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSetSpec {
    pub id: String,
    pub size: usize,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

impl ImageSetSpec {
    pub fn new(id: impl Into<String>, size: usize) -> Self {
        ImageSetSpec {
            id: id.into(),
            size,
            tasks: Vec::new(),
        }
    }

    pub fn with_tasks(mut self, tasks: &[Task]) -> Self {
        self.tasks = tasks.to_vec();
        self
    }

    pub fn detection() -> Self {
        ImageSetSpec::new("detection", 70_000).with_tasks(&[
            Task::Tag,
            Task::Det,
            Task::Pose,
            Task::Drivable,
            Task::Lane,
        ])
    }

    pub fn segmentation() -> Self {
        ImageSetSpec::new("segmentation", 6_500).with_tasks(&[Task::Ins, Task::Sem])
    }

    pub fn tracking() -> Self {
        ImageSetSpec::new("tracking", 280_000).with_tasks(&[Task::Mot, Task::Mots, Task::Flow])
    }

    /// The MOTS-annotated part of the tracking set.
    pub fn mots_subset() -> Self {
        ImageSetSpec::new("mots_subset", 31_000).with_tasks(&[Task::Mot, Task::Mots, Task::Flow])
    }

    /// Training sets in their published sizes.
    pub fn full_preset() -> Vec<Self> {
        vec![Self::detection(), Self::segmentation(), Self::tracking()]
    }

    /// Sets used in joint training: tracking replaced by its MOTS subset.
    pub fn joint_preset() -> Vec<Self> {
        vec![Self::detection(), Self::segmentation(), Self::mots_subset()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// One batch from each set in turn.
    RoundRobin,
    /// A single shuffled pass over the union of all sets.
    None,
    /// Each batch's set drawn uniformly.
    Uniform,
    /// Each batch's set drawn proportionally to its size.
    Weighted,
}

impl Strategy {
    pub fn key(&self) -> &'static str {
        match self {
            Strategy::RoundRobin => "round_robin",
            Strategy::None => "none",
            Strategy::Uniform => "uniform",
            Strategy::Weighted => "weighted",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Strategy::RoundRobin,
            Strategy::None,
            Strategy::Uniform,
            Strategy::Weighted,
        ]
        .into_iter()
        .find(|st| st.key() == s)
        .ok_or_else(|| Error::Invalid(format!("unknown sampling strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub sets: Vec<ImageSetSpec>,
    pub batch_size: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub epochs: usize,
}

/// Contiguous run of samples from one set inside a batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub set: String,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub epoch: usize,
    pub segments: Vec<Segment>,
}

impl BatchRecord {
    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.indices.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The set of a single-set batch.
    pub fn set(&self) -> Option<&str> {
        match self.segments.as_slice() {
            [s] => Some(&s.set),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub version: u32,
    pub strategy: Strategy,
    pub seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub sets: Vec<ImageSetSpec>,
    /// Index of the first batch of each epoch.
    pub epoch_boundaries: Vec<usize>,
    pub batches: Vec<BatchRecord>,
}

impl SchedulePlan {
    pub fn epoch(&self, e: usize) -> &[BatchRecord] {
        let start = self.epoch_boundaries[e];
        let end = self.epoch_boundaries.get(e + 1).copied().unwrap_or(self.batches.len());
        &self.batches[start..end]
    }
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

fn single(epoch: usize, set: &str, indices: &[usize]) -> BatchRecord {
    BatchRecord {
        epoch,
        segments: vec![Segment {
            set: set.to_string(),
            indices: indices.to_vec(),
        }],
    }
}

fn round_robin_epoch(cfg: &ScheduleConfig, epoch: usize, rng: &mut ChaCha8Rng, out: &mut Vec<BatchRecord>) {
    let orders: Vec<Vec<usize>> = cfg.sets.iter().map(|s| shuffled(s.size, rng)).collect();
    let mut chunks: Vec<_> = orders.iter().map(|o| o.chunks(cfg.batch_size)).collect();
    let mut live = cfg.sets.len();
    while live > 0 {
        live = 0;
        for (set, it) in cfg.sets.iter().zip(chunks.iter_mut()) {
            if let Some(chunk) = it.next() {
                out.push(single(epoch, &set.id, chunk));
                live += 1;
            }
        }
    }
}

fn union_epoch(cfg: &ScheduleConfig, epoch: usize, rng: &mut ChaCha8Rng, out: &mut Vec<BatchRecord>) {
    let mut all: Vec<(usize, usize)> = cfg
        .sets
        .iter()
        .enumerate()
        .flat_map(|(s, spec)| (0..spec.size).map(move |i| (s, i)))
        .collect();
    all.shuffle(rng);
    for chunk in all.chunks(cfg.batch_size) {
        let mut segments: Vec<Segment> = Vec::new();
        for &(s, i) in chunk {
            match segments.last_mut() {
                Some(seg) if seg.set == cfg.sets[s].id => seg.indices.push(i),
                _ => segments.push(Segment {
                    set: cfg.sets[s].id.clone(),
                    indices: vec![i],
                }),
            }
        }
        out.push(BatchRecord { epoch, segments });
    }
}

/// Per-set sample streams for the sampled strategies: each set yields a
/// shuffled permutation, reshuffled once used up.
struct Streams {
    orders: Vec<Vec<usize>>,
    cursor: Vec<usize>,
}

impl Streams {
    fn take(&mut self, set: usize, n: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        if self.cursor[set] >= self.orders[set].len() {
            self.orders[set] = shuffled(size, rng);
            self.cursor[set] = 0;
        }
        let start = self.cursor[set];
        let end = (start + n).min(self.orders[set].len());
        self.cursor[set] = end;
        self.orders[set][start..end].to_vec()
    }
}

pub fn build_schedule(cfg: &ScheduleConfig) -> Result<SchedulePlan> {
    if cfg.sets.is_empty() {
        return Err(Error::validation("schedule", "sets", "no image sets"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::validation("schedule", "batch_size", "must be at least 1"));
    }
    if cfg.epochs == 0 {
        return Err(Error::validation("schedule", "epochs", "must be at least 1"));
    }
    let mut ids = BTreeSet::new();
    for s in &cfg.sets {
        if s.size == 0 {
            return Err(Error::validation("schedule", format!("sets.{}", s.id), "set is empty"));
        }
        if !ids.insert(s.id.as_str()) {
            return Err(Error::validation(
                "schedule",
                format!("sets.{}", s.id),
                "duplicate set id",
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batches = Vec::new();
    let mut epoch_boundaries = Vec::with_capacity(cfg.epochs);
    let batches_per_epoch: usize = cfg.sets.iter().map(|s| s.size.div_ceil(cfg.batch_size)).sum();
    let weights: Vec<usize> = match cfg.strategy {
        Strategy::Weighted => cfg.sets.iter().map(|s| s.size).collect(),
        _ => vec![1; cfg.sets.len()],
    };
    let picker = WeightedIndex::new(&weights).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut streams = Streams {
        orders: vec![Vec::new(); cfg.sets.len()],
        cursor: vec![0; cfg.sets.len()],
    };

    for epoch in 0..cfg.epochs {
        epoch_boundaries.push(batches.len());
        match cfg.strategy {
            Strategy::RoundRobin => round_robin_epoch(cfg, epoch, &mut rng, &mut batches),
            Strategy::None => union_epoch(cfg, epoch, &mut rng, &mut batches),
            Strategy::Uniform | Strategy::Weighted => {
                for _ in 0..batches_per_epoch {
                    let s = picker.sample(&mut rng);
                    let indices = streams.take(s, cfg.batch_size, cfg.sets[s].size, &mut rng);
                    batches.push(single(epoch, &cfg.sets[s].id, &indices));
                }
            }
        }
    }

    Ok(SchedulePlan {
        version: SCHEDULE_VERSION,
        strategy: cfg.strategy,
        seed: cfg.seed,
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        sets: cfg.sets.clone(),
        epoch_boundaries,
        batches,
    })
}

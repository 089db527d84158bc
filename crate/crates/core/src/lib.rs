//! Evaluation and scheduling toolkit for a ten-task driving video benchmark:
//! label codecs, geometry kernels, per-task metrics, the aggregate score and
//! curriculum training plans.

pub mod commands;
pub mod cpf;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod label;
pub mod metrics;
pub mod score;
pub mod task;
pub mod vtda;

pub use error::{from_json, Error, Result};
pub use evaluate::{evaluate, EvalConfig, EvalTask, Report};
pub use score::{Slot, TaskScore};
pub use task::Task;
pub use vtda::{estimate_sigmas, scale_factor, vtda, GroupScores, ScalingTable};

//! Training-protocol plans: batch schedules, pseudo-label filters and the
//! curriculum. Plans are documents; nothing here trains anything.

pub mod curriculum;
pub mod pseudo;
pub mod schedule;

pub use curriculum::{curriculum_plan, CurriculumConfig, Stage, StageKind, StagePlan};
pub use pseudo::{filter_pose_pseudolabels, filter_seg_pseudolabels, POSE_THRESHOLD, SEMANTIC_THRESHOLD};
pub use schedule::{build_schedule, BatchRecord, ImageSetSpec, ScheduleConfig, SchedulePlan, Segment, Strategy};

//! Per-task evaluators. Each returns a [`TaskScore`](crate::score::TaskScore)
//! in `[0, 100]` plus whatever breakdown the task has.

pub mod ap;
pub mod assoc;
pub mod flow_proxy;
pub mod lane;
pub mod semantic;
pub mod tagging;

pub use ap::{evaluate_ap, tracking_ap, ApConfig, ApMode, ApReport, ClassAp};
pub use assoc::{assa, AssaConfig, AssaResult, TrackMode, TrackSet};
pub use flow_proxy::{flow_proxy_iou, frame_pair_ious, warp_mask, FlowPair, InstanceMasks};
pub use lane::{lane_boundary_iou, LaneConfig};
pub use semantic::{accumulate_confusion, dense_miou, miou, ConfusionMatrix, DenseTask, MeanIou};
pub use tagging::{tagging_accuracy, TagAttribute, TaggingOptions};

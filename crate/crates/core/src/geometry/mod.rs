//! Similarity kernels and matching shared by the instance-level metrics.

mod assignment;
mod iou;
mod morphology;
mod oks;

pub use assignment::{solve_assignment, CostMatrix, Matching};
pub use iou::{box_iou, mask_iou, mask_overlap};
pub use morphology::dilate;
pub use oks::{oks, OksSigmas, DEFAULT_OKS_SIGMA};

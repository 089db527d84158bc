//! Optical flow scored by warping instance masks of frame `t` back to frame
//! `t-1` and measuring overlap with the ground truth there.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::label::{BinaryMask, FlowField, RleMask};
use crate::score::{Slot, TaskScore};

/// Instance masks of one frame keyed by track id.
pub type InstanceMasks = BTreeMap<String, RleMask>;

/// Source pixel (column-major offset) each target pixel samples, or `None`
/// when the displaced position falls outside the frame. Rounding is half
/// away from zero.
fn sample_sources(flow: &FlowField) -> Vec<Option<usize>> {
    let (h, w) = flow.shape();
    let mut src = vec![None; h * w];
    for row in 0..h {
        for col in 0..w {
            let [u, v] = flow.at(row, col);
            let x = (col as f64 + u as f64).round();
            let y = (row as f64 + v as f64).round();
            if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                src[col * h + row] = Some(x as usize * h + y as usize);
            }
        }
    }
    src
}

/// Dense warp `M̂(p) = M(p + V(p))` with nearest sampling.
pub fn warp_mask(mask: &BinaryMask, flow: &FlowField) -> Result<BinaryMask> {
    if mask.shape() != flow.shape() {
        return Err(Error::Shape {
            left: mask.shape(),
            right: flow.shape(),
        });
    }
    let h = mask.height();
    let src = sample_sources(flow);
    Ok(BinaryMask::from_fn(mask.height(), mask.width(), |row, col| {
        src[col * h + row].is_some_and(|s| mask.get(s % h, s / h))
    }))
}

fn contains(starts: &[(usize, usize)], p: usize) -> bool {
    match starts.binary_search_by(|&(s, _)| s.cmp(&p)) {
        Ok(_) => true,
        Err(0) => false,
        Err(i) => {
            let (s, len) = starts[i - 1];
            p < s + len
        }
    }
}

/// IoU of every instance present in both frames, in track-id order.
pub fn frame_pair_ious(
    flow: &FlowField,
    masks_t: &InstanceMasks,
    masks_prev: &InstanceMasks,
) -> Result<Vec<(String, f64)>> {
    let shape = flow.shape();
    for m in masks_t.values().chain(masks_prev.values()) {
        if m.shape() != shape {
            return Err(Error::Shape {
                left: shape,
                right: m.shape(),
            });
        }
        m.check()?;
    }
    let src = sample_sources(flow);
    // how many target pixels sample each source pixel
    let mut fan_in = vec![0u32; src.len()];
    for s in src.iter().flatten() {
        fan_in[*s] += 1;
    }
    let mut out = Vec::new();
    for (id, prev) in masks_prev {
        let Some(cur) = masks_t.get(id) else { continue };
        let runs: Vec<(usize, usize)> = cur.foreground_runs().collect();
        let warped: u64 = runs
            .iter()
            .flat_map(|&(s, len)| s..s + len)
            .map(|q| fan_in[q] as u64)
            .sum();
        let inter: u64 = prev
            .foreground_runs()
            .flat_map(|(s, len)| s..s + len)
            .filter(|&p| src[p].is_some_and(|q| contains(&runs, q)))
            .count() as u64;
        let union = warped + prev.area() - inter;
        let iou = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
        out.push((id.clone(), iou));
    }
    Ok(out)
}

/// One consecutive frame pair of a video.
#[derive(Debug, Clone)]
pub struct FlowPair {
    pub flow: FlowField,
    pub masks_t: InstanceMasks,
    pub masks_prev: InstanceMasks,
}

/// Mean IoU over every paired instance in the split.
pub fn flow_proxy_iou(pairs: &[FlowPair]) -> Result<TaskScore> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for pair in pairs {
        for (_, iou) in frame_pair_ious(&pair.flow, &pair.masks_t, &pair.masks_prev)? {
            sum += iou;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMetric(
            "no instance appears in two consecutive frames".into(),
        ));
    }
    TaskScore::new(Slot::IouF, 100.0 * sum / n as f64)
}

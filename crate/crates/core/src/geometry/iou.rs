use crate::error::{Error, Result};
use crate::label::{Box2D, RleMask};

pub fn box_iou(a: &Box2D, b: &Box2D) -> f64 {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Intersection and union pixel counts, computed by walking both run
/// sequences in lockstep.
pub fn mask_overlap(a: &RleMask, b: &RleMask) -> Result<(u64, u64)> {
    if a.shape() != b.shape() {
        return Err(Error::Shape {
            left: a.shape(),
            right: b.shape(),
        });
    }
    a.check()?;
    b.check()?;
    let (ra, rb) = (a.runs(), b.runs());
    let (mut ia, mut ib) = (0usize, 0usize);
    // remaining length of the current run on each side
    let (mut la, mut lb) = (0u64, 0u64);
    let (mut inter, mut union) = (0u64, 0u64);
    loop {
        while la == 0 && ia < ra.len() {
            la = ra[ia];
            ia += 1;
        }
        while lb == 0 && ib < rb.len() {
            lb = rb[ib];
            ib += 1;
        }
        if la == 0 || lb == 0 {
            break;
        }
        // run index parity gives the value: odd index = foreground
        let va = ia % 2 == 0;
        let vb = ib % 2 == 0;
        let step = la.min(lb);
        if va && vb {
            inter += step;
        }
        if va || vb {
            union += step;
        }
        la -= step;
        lb -= step;
    }
    Ok((inter, union))
}

pub fn mask_iou(a: &RleMask, b: &RleMask) -> Result<f64> {
    let (inter, union) = mask_overlap(a, b)?;
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

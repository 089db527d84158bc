use crate::label::BinaryMask;

/// Dilation with a square `(2·radius + 1)²` structuring element, applied as
/// a horizontal then a vertical running-window pass.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (h, w) = mask.shape();
    let mut horizontal = BinaryMask::new(h, w);
    let mut prefix = vec![0u32; w.max(h) + 1];
    for row in 0..h {
        for col in 0..w {
            prefix[col + 1] = prefix[col] + mask.get(row, col) as u32;
        }
        for col in 0..w {
            let lo = col.saturating_sub(radius);
            let hi = (col + radius + 1).min(w);
            horizontal.set(row, col, prefix[hi] > prefix[lo]);
        }
    }
    let mut out = BinaryMask::new(h, w);
    for col in 0..w {
        for row in 0..h {
            prefix[row + 1] = prefix[row] + horizontal.get(row, col) as u32;
        }
        for row in 0..h {
            let lo = row.saturating_sub(radius);
            let hi = (row + radius + 1).min(h);
            out.set(row, col, prefix[hi] > prefix[lo]);
        }
    }
    out
}

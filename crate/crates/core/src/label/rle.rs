//! Column-major run-length masks and the COCO compressed-string form.

use super::BinaryMask;
use crate::error::{Error, Result};

/// Binary mask as alternating background/foreground run lengths over pixels
/// in column-major order. The first run always counts background pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleMask {
    height: usize,
    width: usize,
    runs: Vec<u64>,
}

impl RleMask {
    /// Checked constructor: the runs must cover exactly `height * width` pixels.
    pub fn new(height: usize, width: usize, runs: Vec<u64>) -> Result<Self> {
        let mask = RleMask::from_raw(height, width, runs);
        mask.check()?;
        Ok(mask)
    }

    /// Unchecked constructor; [`rle_decode`] and the IoU kernels re-check.
    pub fn from_raw(height: usize, width: usize, runs: Vec<u64>) -> Self {
        RleMask { height, width, runs }
    }

    pub fn empty(height: usize, width: usize) -> Self {
        let n = (height * width) as u64;
        RleMask::from_raw(height, width, if n == 0 { vec![] } else { vec![n] })
    }

    pub fn check(&self) -> Result<()> {
        let sum: u64 = self.runs.iter().sum();
        let expected = self.pixel_count();
        if sum != expected {
            return Err(Error::CorruptMask { sum, expected });
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn runs(&self) -> &[u64] {
        &self.runs
    }

    pub fn pixel_count(&self) -> u64 {
        (self.height * self.width) as u64
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).sum()
    }

    /// `(start, len)` of each foreground run, as column-major pixel offsets.
    pub fn foreground_runs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut pos = 0usize;
        self.runs.iter().enumerate().filter_map(move |(i, &r)| {
            let start = pos;
            pos += r as usize;
            (i % 2 == 1 && r > 0).then_some((start, r as usize))
        })
    }

    /// Merge zero-length interior runs so that only a leading zero remains.
    pub fn normalized(&self) -> RleMask {
        let mut out: Vec<u64> = Vec::with_capacity(self.runs.len());
        for (i, &r) in self.runs.iter().enumerate() {
            let value = i % 2 == 1;
            if r == 0 {
                continue;
            }
            match out.len() {
                0 if value => out.extend([0, r]),
                0 => out.push(r),
                n if ((n - 1) % 2 == 1) == value => out[n - 1] += r,
                _ => out.push(r),
            }
        }
        RleMask::from_raw(self.height, self.width, out)
    }

    /// Encode into the COCO compressed string: runs after the second are
    /// delta-coded against the run two positions back, then emitted as
    /// 5-bit groups in printable characters offset by 48 with 0x20 as the
    /// continuation bit.
    pub fn to_coco_string(&self) -> String {
        let mut s = String::new();
        for (i, &r) in self.runs.iter().enumerate() {
            let mut x = r as i64;
            if i > 2 {
                x -= self.runs[i - 2] as i64;
            }
            loop {
                let mut c = (x & 0x1f) as u8;
                x >>= 5;
                let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
                if more {
                    c |= 0x20;
                }
                s.push((c + 48) as char);
                if !more {
                    break;
                }
            }
        }
        s
    }

    pub fn from_coco_string(s: &str, height: usize, width: usize) -> Result<Self> {
        let bytes = s.as_bytes();
        let mut runs: Vec<u64> = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let mut x: i64 = 0;
            let mut shift = 0;
            loop {
                let Some(&b) = bytes.get(i) else {
                    return Err(Error::Invalid("truncated RLE string".into()));
                };
                if !(48..48 + 64).contains(&b) || shift > 58 {
                    return Err(Error::Invalid(format!("bad RLE character {:?}", b as char)));
                }
                let c = (b - 48) as i64;
                i += 1;
                x |= (c & 0x1f) << shift;
                shift += 5;
                if c & 0x20 == 0 {
                    if c & 0x10 != 0 {
                        x |= -1i64 << shift;
                    }
                    break;
                }
            }
            if runs.len() > 2 {
                x += runs[runs.len() - 2] as i64;
            }
            if x < 0 {
                return Err(Error::Invalid("negative run in RLE string".into()));
            }
            runs.push(x as u64);
        }
        RleMask::new(height, width, runs)
    }
}

pub fn rle_encode(mask: &BinaryMask) -> RleMask {
    let (h, w) = mask.shape();
    let mut runs = Vec::new();
    let mut current = false;
    let mut count = 0u64;
    for col in 0..w {
        for row in 0..h {
            let v = mask.get(row, col);
            if v != current {
                runs.push(count);
                count = 0;
                current = v;
            }
            count += 1;
        }
    }
    if h * w > 0 {
        runs.push(count);
    }
    RleMask::from_raw(h, w, runs)
}

pub fn rle_decode(mask: &RleMask) -> Result<BinaryMask> {
    mask.check()?;
    let (h, w) = mask.shape();
    let mut out = BinaryMask::new(h, w);
    for (start, len) in mask.foreground_runs() {
        for p in start..start + len {
            out.set(p % h, p / h, true);
        }
    }
    Ok(out)
}

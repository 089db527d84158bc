//! `.flo` optical flow files: little-endian `f32` magic, `i32` width,
//! `i32` height, then row-major interleaved `(u, v)` pairs.

use crate::error::{Error, Result};

pub const FLOW_MAGIC: f32 = 202021.25;
const HEADER_LEN: usize = 12;

/// Per-pixel displacement field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    uv: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, uv: Vec<[f32; 2]>) -> Result<Self> {
        if uv.len() != height * width {
            return Err(Error::Invalid(format!(
                "flow has {} vectors, expected {}x{}",
                uv.len(),
                height,
                width
            )));
        }
        if uv.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("flow contains non-finite values".into()));
        }
        Ok(FlowField { height, width, uv })
    }

    pub fn uniform(height: usize, width: usize, u: f32, v: f32) -> Self {
        FlowField {
            height,
            width,
            uv: vec![[u, v]; height * width],
        }
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

    /// Displacement `(u, v)` at `(row, col)`; `u` is horizontal.
    pub fn at(&self, row: usize, col: usize) -> [f32; 2] {
        self.uv[row * self.width + col]
    }
}

fn le_f32(b: &[u8]) -> f32 {
    f32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

fn le_i32(b: &[u8]) -> i32 {
    i32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

pub fn read_flow(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Length {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic = le_f32(&bytes[0..4]);
    if magic != FLOW_MAGIC {
        return Err(Error::Format(format!("bad magic {magic}, expected {FLOW_MAGIC}")));
    }
    let width = le_i32(&bytes[4..8]);
    let height = le_i32(&bytes[8..12]);
    if width < 0 || height < 0 {
        return Err(Error::Format(format!("negative dimensions {width}x{height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("dimensions {width}x{height} overflow")))?;
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            found: bytes.len(),
        });
    }
    let uv: Vec<[f32; 2]> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| [le_f32(&c[0..4]), le_f32(&c[4..8])])
        .collect();
    if uv.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite flow value".into()));
    }
    Ok(FlowField { height, width, uv })
}

pub fn write_flow(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + flow.uv.len() * 8);
    out.extend_from_slice(&FLOW_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height as i32).to_le_bytes());
    for [u, v] in &flow.uv {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

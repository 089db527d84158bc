use super::Poly2D;
use crate::error::{Error, Result};

/// Dense binary raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.height, self.width)?;
        for row in self.bits.chunks(self.width.max(1)) {
            let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn new(height: usize, width: usize) -> Self {
        BinaryMask {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        BinaryMask {
            height,
            width,
            bits: vec![true; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BinaryMask::new(height, width);
        for row in 0..height {
            for col in 0..width {
                m.bits[row * width + col] = f(row, col);
            }
        }
        m
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

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// `(|self ∩ other|, |self ∪ other|)`.
    pub fn overlap(&self, other: &BinaryMask) -> (u64, u64) {
        self.bits
            .iter()
            .zip(&other.bits)
            .fold((0, 0), |(i, u), (&a, &b)| (i + (a && b) as u64, u + (a || b) as u64))
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterOptions {
    /// Stroke width in pixels; pixels whose centre lies within half of it
    /// from the polyline are set.
    pub thickness: f64,
    /// Interpret `C` vertex types as cubic Bézier control points. When off,
    /// every vertex is joined by a straight segment.
    pub bezier: bool,
}

impl Default for RasterOptions {
    fn default() -> Self {
        RasterOptions {
            thickness: 2.0,
            bezier: false,
        }
    }
}

const BEZIER_STEPS: usize = 16;

fn polyline_points(poly: &Poly2D, bezier: bool) -> Vec<(f64, f64)> {
    let v = &poly.vertices;
    let types = poly.types.as_bytes();
    if !bezier || types.len() != v.len() {
        return v.clone();
    }
    let mut out = vec![v[0]];
    let mut i = 0;
    while i + 1 < v.len() {
        if i + 3 < v.len() && types[i + 1] == b'C' && types[i + 2] == b'C' {
            let (p0, p1, p2, p3) = (v[i], v[i + 1], v[i + 2], v[i + 3]);
            for k in 1..=BEZIER_STEPS {
                let t = k as f64 / BEZIER_STEPS as f64;
                let s = 1.0 - t;
                let b = |a: f64, b: f64, c: f64, d: f64| {
                    s * s * s * a + 3.0 * s * s * t * b + 3.0 * s * t * t * c + t * t * t * d
                };
                out.push((b(p0.0, p1.0, p2.0, p3.0), b(p0.1, p1.1, p2.1, p3.1)));
            }
            i += 3;
        } else {
            out.push(v[i + 1]);
            i += 1;
        }
    }
    out
}

fn point_segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    cx * cx + cy * cy
}

/// Rasterize a polyline. Pixel `(row, col)` has its centre at `x = col`,
/// `y = row`.
pub fn rasterize_poly2d(poly: &Poly2D, height: usize, width: usize, opts: RasterOptions) -> Result<BinaryMask> {
    let mut out = BinaryMask::new(height, width);
    draw_poly2d(&mut out, poly, opts)?;
    Ok(out)
}

pub(crate) fn draw_poly2d(out: &mut BinaryMask, poly: &Poly2D, opts: RasterOptions) -> Result<()> {
    if poly.vertices.is_empty() {
        return Err(Error::EmptyGeometry("polyline has no vertices"));
    }
    if opts.thickness.is_nan() || opts.thickness < 1.0 {
        return Err(Error::Invalid(format!(
            "thickness must be at least 1, got {}",
            opts.thickness
        )));
    }
    let half = opts.thickness / 2.0;
    let r2 = half * half;
    let mut pts = polyline_points(poly, opts.bezier);
    if poly.closed && pts.len() > 2 {
        pts.push(pts[0]);
    }
    let segments: Vec<_> = if pts.len() == 1 {
        vec![(pts[0], pts[0])]
    } else {
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let (h, w) = out.shape();
    for (a, b) in segments {
        let lo_x = (a.0.min(b.0) - half).ceil().max(0.0);
        let hi_x = (a.0.max(b.0) + half).floor().min(w as f64 - 1.0);
        let lo_y = (a.1.min(b.1) - half).ceil().max(0.0);
        let hi_y = (a.1.max(b.1) + half).floor().min(h as f64 - 1.0);
        if lo_x > hi_x || lo_y > hi_y {
            continue;
        }
        for row in lo_y as usize..=hi_y as usize {
            for col in lo_x as usize..=hi_x as usize {
                if point_segment_dist2((col as f64, row as f64), a, b) <= r2 {
                    out.set(row, col, true);
                }
            }
        }
    }
    Ok(())
}

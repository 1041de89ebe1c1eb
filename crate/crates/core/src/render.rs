//! Binary PPM (P6) heatmap rendering for matrices and violation maps.
//!
//! The colormaps are fixed and fully specified here so rendered images are
//! byte-stable regression artifacts:
//!
//! - **Heat ramp** (correlation matrices, propagation profiles): values are
//!   scaled by the matrix maximum to `x` in `[0, 1]`, then
//!   `r = clamp(3x)`, `g = clamp(3x - 1)`, `b = clamp(3x - 2)` — black
//!   through red and yellow to white. Channels quantize as
//!   `floor(255 c + 0.5)`.
//! - **Violation ramp**: non-violating entries (`V >= 0`) render white, as
//!   in the published maps; violating entries use the strength `n_sigma`
//!   (when available, else `-V`) scaled by its maximum to `x`, with
//!   `r = clamp(2x)`, `g = clamp(2x - 1)`, `b = 0` — black through red to
//!   yellow, never reaching white.
//! - Absent or undefined entries render gray `(128, 128, 128)` in both.
//!
//! Each matrix cell becomes a `cell_px` by `cell_px` pixel block, row 0 at
//! the top of the image.

use nalgebra::DMatrix;

use crate::correlations::{EntryStatus, ViolationMap};
use crate::error::{Error, Result};

const GRAY: [u8; 3] = [128, 128, 128];
const WHITE: [u8; 3] = [255, 255, 255];

fn channel(x: f64) -> u8 {
    (255.0 * x.clamp(0.0, 1.0) + 0.5).floor() as u8
}

fn heat_rgb(x: f64) -> [u8; 3] {
    [
        channel(3.0 * x),
        channel(3.0 * x - 1.0),
        channel(3.0 * x - 2.0),
    ]
}

fn violation_rgb(x: f64) -> [u8; 3] {
    [channel(2.0 * x), channel(2.0 * x - 1.0), 0]
}

/// Assemble a P6 image from a per-cell color function, scaling each cell to
/// a `cell_px` square block.
fn ppm<F>(rows: usize, cols: usize, cell_px: usize, color: F) -> Vec<u8>
where
    F: Fn(usize, usize) -> [u8; 3],
{
    let (w, h) = (cols * cell_px, rows * cell_px);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    for y in 0..h {
        for x in 0..w {
            out.extend_from_slice(&color(y / cell_px, x / cell_px));
        }
    }
    out
}

fn validate_render(rows: usize, cols: usize, cell_px: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::validation("cannot render an empty matrix"));
    }
    if cell_px == 0 {
        return Err(Error::validation("cell size must be >= 1 pixel"));
    }
    Ok(())
}

/// Heat-ramp render of a nonnegative matrix. Entries where `mask` is false
/// (or non-finite values) render gray.
pub fn heatmap_ppm(
    values: &DMatrix<f64>,
    mask: Option<&DMatrix<bool>>,
    cell_px: usize,
) -> Result<Vec<u8>> {
    let (rows, cols) = values.shape();
    validate_render(rows, cols, cell_px)?;
    if let Some(m) = mask {
        if m.shape() != (rows, cols) {
            return Err(Error::validation("render mask shape mismatch"));
        }
    }
    let shown = |q: usize, r: usize| {
        mask.is_none_or(|m| m[(q, r)]) && values[(q, r)].is_finite()
    };
    let mut vmax = 0.0f64;
    for q in 0..rows {
        for r in 0..cols {
            if shown(q, r) {
                vmax = vmax.max(values[(q, r)]);
            }
        }
    }
    Ok(ppm(rows, cols, cell_px, |q, r| {
        if !shown(q, r) {
            GRAY
        } else if vmax <= 0.0 {
            heat_rgb(0.0)
        } else {
            heat_rgb(values[(q, r)] / vmax)
        }
    }))
}

/// Violation-ramp render: white where no violation, black-to-yellow by
/// violation strength, gray where undefined.
pub fn violation_ppm(map: &ViolationMap, cell_px: usize) -> Result<Vec<u8>> {
    let n = map.n_sites();
    validate_render(n, n, cell_px)?;
    let strength = |q: usize, r: usize| -> Option<f64> {
        if map.status(q, r) == EntryStatus::Undefined {
            return None;
        }
        Some(match map.n_sigma() {
            Some(ns) => {
                let s = ns[(q, r)];
                if s.is_finite() {
                    s
                } else {
                    0.0
                }
            }
            None => (-map.v()[(q, r)]).max(0.0),
        })
    };
    let mut smax = 0.0f64;
    for q in 0..n {
        for r in 0..n {
            if let Some(s) = strength(q, r) {
                smax = smax.max(s);
            }
        }
    }
    Ok(ppm(n, n, cell_px, |q, r| match strength(q, r) {
        None => GRAY,
        Some(s) if s <= 0.0 => WHITE,
        Some(s) => violation_rgb(s / smax),
    }))
}

//! Histogram of oriented gradients.

use serde::{Deserialize, Serialize};

use super::Image;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HogParams {
    /// Side of the square canonical frame the input is letterboxed into.
    pub canonical_size: usize,
    /// Cell side in pixels.
    pub cell: usize,
    /// Block side in cells; blocks step by one cell.
    pub block: usize,
    /// Unsigned orientation bins over [0°, 180°).
    pub bins: usize,
    /// L2-Hys clipping level.
    pub clip: f64,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            canonical_size: 128,
            cell: 8,
            block: 2,
            bins: 9,
            clip: 0.2,
        }
    }
}

impl HogParams {
    pub fn cells_per_side(&self) -> usize {
        self.canonical_size / self.cell
    }

    pub fn blocks_per_side(&self) -> usize {
        self.cells_per_side() + 1 - self.block
    }

    pub fn descriptor_len(&self) -> usize {
        self.blocks_per_side().pow(2) * self.block * self.block * self.bins
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HogDescriptor {
    pub params: HogParams,
    pub values: Vec<f64>,
}

impl HogDescriptor {
    pub fn distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

const NORM_EPS: f64 = 1e-3;

/// Letterboxes `img` into the canonical gray frame and describes it.
pub fn hog(img: &Image, params: &HogParams) -> HogDescriptor {
    hog_canonical(&img.letterbox_gray(params.canonical_size), params)
}

/// Describes an image already in the canonical frame (its gray values are
/// used as-is).
///
/// Gradients are centered differences with clamped borders. Each pixel
/// votes its magnitude into the two orientation bins nearest its unsigned
/// angle (bin `b` is centered at `b · 180°/bins`), linearly weighted.
/// Blocks are normalized as `v / sqrt(|v|² + ε²)`, clipped, and
/// normalized again. Layout: blocks row-major, cells row-major within a
/// block, bins innermost.
pub fn hog_canonical(img: &Image, params: &HogParams) -> HogDescriptor {
    let (w, h) = (img.width, img.height);
    let gray = img.gray_f64();
    let at = |x: usize, y: usize| gray[y * w + x];
    let cells = params.cells_per_side();
    let nb = params.bins;
    let bin_width = std::f64::consts::PI / nb as f64;
    let mut hist = vec![0.0f64; cells * cells * nb];
    for y in 0..(cells * params.cell).min(h) {
        for x in 0..(cells * params.cell).min(w) {
            let gx = at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y);
            let gy = at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(std::f64::consts::PI);
            let pos = theta / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let b0 = (lo as usize) % nb;
            let b1 = (b0 + 1) % nb;
            let cell = (y / params.cell) * cells + x / params.cell;
            hist[cell * nb + b0] += mag * (1.0 - frac);
            hist[cell * nb + b1] += mag * frac;
        }
    }

    let blocks = params.blocks_per_side();
    let mut values = Vec::with_capacity(params.descriptor_len());
    let mut block = Vec::with_capacity(params.block * params.block * nb);
    for by in 0..blocks {
        for bx in 0..blocks {
            block.clear();
            for cy in by..by + params.block {
                for cx in bx..bx + params.block {
                    let c = cy * cells + cx;
                    block.extend_from_slice(&hist[c * nb..(c + 1) * nb]);
                }
            }
            l2_hys(&mut block, params.clip);
            values.extend_from_slice(&block);
        }
    }
    HogDescriptor {
        params: *params,
        values,
    }
}

fn l2_hys(v: &mut [f64], clip: f64) {
    let norm = (v.iter().map(|x| x * x).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
    for x in v.iter_mut() {
        *x = (*x / norm).min(clip);
    }
    let norm = (v.iter().map(|x| x * x).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

//! Threshold-and-morphology motif segmentation.

use serde::{Deserialize, Serialize};

use super::labels::drop_small;
use super::{label_binary, otsu_dark_mask, Image, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphParams {
    /// Disc radius (px) of the closing that bridges small gaps.
    pub close_radius: usize,
    /// Regions below this many pixels are dropped.
    pub min_area: usize,
}

impl Default for MorphParams {
    fn default() -> Self {
        Self {
            close_radius: 2,
            min_area: 20,
        }
    }
}

fn disc_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Out-of-frame pixels count as background.
pub fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    let offsets = disc_offsets(radius);
    let mut out = vec![false; mask.len()];
    for (p, &on) in mask.iter().enumerate() {
        if !on {
            continue;
        }
        let (x, y) = ((p % width) as i64, (p / width) as i64);
        for &(dx, dy) in &offsets {
            let (qx, qy) = (x + dx, y + dy);
            if qx >= 0 && qy >= 0 && qx < width as i64 && qy < height as i64 {
                out[qy as usize * width + qx as usize] = true;
            }
        }
    }
    out
}

/// Out-of-frame pixels are ignored, so shapes touching the frame are not
/// eaten from outside.
pub fn erode(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    let offsets = disc_offsets(radius);
    (0..mask.len())
        .map(|p| {
            let (x, y) = ((p % width) as i64, (p / width) as i64);
            offsets.iter().all(|&(dx, dy)| {
                let (qx, qy) = (x + dx, y + dy);
                qx < 0
                    || qy < 0
                    || qx >= width as i64
                    || qy >= height as i64
                    || mask[qy as usize * width + qx as usize]
            })
        })
        .collect()
}

pub fn close(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    erode(&dilate(mask, width, height, radius), width, height, radius)
}

pub fn open(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    dilate(&erode(mask, width, height, radius), width, height, radius)
}

/// Otsu threshold (dark motif on light ground), closing with a disc of
/// `close_radius`, opening with a unit disc, then 8-connected regions of at
/// least `min_area` pixels. Background is id 0.
pub fn morph_segment(img: &Image, params: &MorphParams) -> LabelMap {
    let (w, h) = (img.width, img.height);
    let Some(mask) = otsu_dark_mask(img) else {
        return LabelMap {
            width: w,
            height: h,
            labels: vec![0; img.len()],
            count: 1,
            background: Some(0),
        };
    };
    let closed = close(&mask, w, h, params.close_radius);
    let opened = open(&closed, w, h, 1);
    drop_small(label_binary(&opened, w, h), params.min_area)
}

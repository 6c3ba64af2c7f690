use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Image, Result};

/// Per-pixel segment ids, dense in `[0, count)`. Masks produced by
/// thresholding reserve id 0 for the background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub count: u32,
    pub background: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionInfo {
    pub id: u32,
    pub area: usize,
    /// `[x_min, y_min, x_max, y_max]`, inclusive.
    pub bbox: [usize; 4],
    pub centroid: [f64; 2],
}

impl LabelMap {
    /// Segments excluding the background.
    pub fn region_count(&self) -> usize {
        self.count as usize - usize::from(self.background.is_some())
    }

    pub fn region_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.count).filter(move |&id| Some(id) != self.background)
    }

    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0; self.count as usize];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    pub fn regions(&self) -> Vec<RegionInfo> {
        let n = self.count as usize;
        let mut info: Vec<RegionInfo> = (0..n)
            .map(|id| RegionInfo {
                id: id as u32,
                area: 0,
                bbox: [usize::MAX, usize::MAX, 0, 0],
                centroid: [0.0, 0.0],
            })
            .collect();
        for (i, &l) in self.labels.iter().enumerate() {
            let (x, y) = (i % self.width, i / self.width);
            let r = &mut info[l as usize];
            r.area += 1;
            r.bbox = [r.bbox[0].min(x), r.bbox[1].min(y), r.bbox[2].max(x), r.bbox[3].max(y)];
            r.centroid[0] += x as f64;
            r.centroid[1] += y as f64;
        }
        info.retain(|r| Some(r.id) != self.background && r.area > 0);
        for r in &mut info {
            r.centroid = [r.centroid[0] / r.area as f64, r.centroid[1] / r.area as f64];
        }
        info
    }

    /// Pixels of one id as a mask.
    pub fn mask(&self, id: u32) -> Vec<bool> {
        self.labels.iter().map(|&l| l == id).collect()
    }

    /// Color-mapped rendering; the background is black.
    pub fn to_image(&self) -> Image {
        let mut img = Image::filled_rgb(self.width, self.height, [0.0; 3]);
        for (i, &l) in self.labels.iter().enumerate() {
            if Some(l) != self.background {
                img.set_rgb(i % self.width, i / self.width, id_color(l));
            }
        }
        img
    }

    /// Writes `<stem>.png` and the region table `<stem>.json`.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        super::save_png(&self.to_image(), path.with_extension("png"))?;
        let table = serde_json::to_vec_pretty(&self.regions())
            .map_err(|e| super::ImagingError::InvalidArgument(e.to_string()))?;
        std::fs::write(path.with_extension("json"), table)?;
        Ok(())
    }
}

fn id_color(id: u32) -> [f32; 3] {
    let mut h = (id as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= h >> 29;
    let c = |shift: u32| 0.25 + 0.75 * ((h >> shift) & 0xff) as f32 / 255.0;
    [c(0), c(8), c(16)]
}

/// 8-connected components of a mask. Background is id 0; regions are
/// numbered from 1 in raster order of their first pixel.
pub fn label_binary(mask: &[bool], width: usize, height: usize) -> LabelMap {
    let mut labels = vec![0u32; mask.len()];
    let mut next = 1u32;
    let mut stack = Vec::new();
    for seed in 0..mask.len() {
        if !mask[seed] || labels[seed] != 0 {
            continue;
        }
        labels[seed] = next;
        stack.push(seed);
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % width) as i64, (p / width) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (qx, qy) = (x + dx, y + dy);
                    if qx < 0 || qy < 0 || qx >= width as i64 || qy >= height as i64 {
                        continue;
                    }
                    let q = qy as usize * width + qx as usize;
                    if mask[q] && labels[q] == 0 {
                        labels[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
        next += 1;
    }
    LabelMap {
        width,
        height,
        labels,
        count: next,
        background: Some(0),
    }
}

/// Drops regions smaller than `min_area` and renumbers the rest densely.
pub(crate) fn drop_small(map: LabelMap, min_area: usize) -> LabelMap {
    let areas = map.areas();
    let mut remap = vec![0u32; map.count as usize];
    let mut next = 1u32;
    for id in 1..map.count as usize {
        if areas[id] >= min_area.max(1) {
            remap[id] = next;
            next += 1;
        }
    }
    LabelMap {
        labels: map.labels.iter().map(|&l| remap[l as usize]).collect(),
        count: next,
        ..map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_are_connected() {
        let mask = [true, false, false, true];
        let map = label_binary(&mask, 2, 2);
        assert_eq!(map.region_count(), 1);
        assert_eq!(map.labels, vec![1, 0, 0, 1]);
    }

    #[test]
    fn small_regions_are_dropped_and_renumbered() {
        let mask = [true, false, true, true, false, false, true, true];
        let map = drop_small(label_binary(&mask, 8, 1), 2);
        assert_eq!(map.labels, vec![0, 0, 1, 1, 0, 0, 2, 2]);
        assert_eq!(map.count, 3);
    }

    #[test]
    fn export_writes_png_and_table() {
        let dir = tempfile::tempdir().unwrap();
        let map = label_binary(&[true, true, false, false], 2, 2);
        map.export(dir.path().join("seg")).unwrap();
        let table: Vec<RegionInfo> =
            serde_json::from_slice(&std::fs::read(dir.path().join("seg.json")).unwrap()).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].area, 2);
        assert!(dir.path().join("seg.png").exists());
    }
}

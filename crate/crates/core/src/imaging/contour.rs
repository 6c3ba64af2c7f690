//! Closed outlines: boundary tracing, resampling and silhouettes.

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::{label_binary, otsu_dark_mask, Image, ImagingError, LabelMap, Result};

pub const DEFAULT_CONTOUR_POINTS: usize = 128;

/// Closed polygon; the last point connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Point2<f64>>,
}

impl Contour {
    pub fn new(points: Vec<Point2<f64>>) -> Result<Self> {
        if points.len() < 3 {
            return Err(ImagingError::DegenerateContour(format!(
                "{} points; need at least 3",
                points.len()
            )));
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(ImagingError::DegenerateContour("non-finite point".into()));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n).map(|i| (self.points[(i + 1) % n] - self.points[i]).norm()).sum()
    }

    /// Shoelace area; positive when counter-clockwise in a y-up frame.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point2<f64> {
        let sum: Vector2<f64> = self.points.iter().map(|p| p.coords).sum();
        Point2::from(sum / self.points.len() as f64)
    }

    /// `n` points evenly spaced by arclength, starting at the first point.
    pub fn resample(&self, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(ImagingError::InvalidArgument(format!(
                "resampled contours need at least 8 points, got {n}"
            )));
        }
        let perimeter = self.perimeter();
        if !(perimeter > 0.0) {
            return Err(ImagingError::DegenerateContour("zero perimeter".into()));
        }
        let m = self.points.len();
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        let mut seg_start = 0.0;
        let mut seg_len = (self.points[1 % m] - self.points[0]).norm();
        for k in 0..n {
            let target = perimeter * k as f64 / n as f64;
            while seg_start + seg_len < target && seg + 1 < m {
                seg_start += seg_len;
                seg += 1;
                seg_len = (self.points[(seg + 1) % m] - self.points[seg]).norm();
            }
            let a = self.points[seg];
            let b = self.points[(seg + 1) % m];
            let t = if seg_len > 0.0 {
                ((target - seg_start) / seg_len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push(a + (b - a) * t);
        }
        Ok(Self { points: out })
    }

    pub fn map(&self, f: impl Fn(&Point2<f64>) -> Point2<f64>) -> Self {
        Self {
            points: self.points.iter().map(f).collect(),
        }
    }
}

const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter().position(|&d| d == (dx, dy)).expect("unit neighbor offset")
}

/// Moore-neighbor tracing of the outer boundary of the 8-connected region
/// containing `start`, which must be its first pixel in raster order.
/// Returns boundary pixels in tracing order; holes are never visited.
pub(crate) fn moore_trace(
    inside: impl Fn(i64, i64) -> bool,
    start: (usize, usize),
) -> Vec<(usize, usize)> {
    let s = (start.0 as i64, start.1 as i64);
    let mut out = vec![start];
    let mut current = s;
    // the west neighbor of the raster-first pixel is outside
    let mut back = 4usize;
    let mut first_move: Option<(i64, i64)> = None;
    loop {
        let mut next = None;
        for i in 1..=8 {
            let d = (back + i) % 8;
            let q = (current.0 + DIRS[d].0, current.1 + DIRS[d].1);
            if inside(q.0, q.1) {
                let prev = DIRS[(back + i - 1) % 8];
                let bg = (current.0 + prev.0, current.1 + prev.1);
                next = Some((q, dir_index(bg.0 - q.0, bg.1 - q.1)));
                break;
            }
        }
        let Some((q, new_back)) = next else {
            return out;
        };
        if current == s {
            match first_move {
                None => first_move = Some(q),
                Some(f) if f == q => {
                    out.pop();
                    return out;
                }
                Some(_) => {}
            }
        }
        out.push((q.0 as usize, q.1 as usize));
        current = q;
        back = new_back;
    }
}

fn trace_region(map: &LabelMap, id: u32) -> Option<Contour> {
    let first = map.labels.iter().position(|&l| l == id)?;
    let (w, h) = (map.width as i64, map.height as i64);
    let inside = |x: i64, y: i64| {
        x >= 0 && y >= 0 && x < w && y < h && map.labels[(y * w + x) as usize] == id
    };
    let pixels = moore_trace(inside, (first % map.width, first / map.width));
    let points: Vec<Point2<f64>> = pixels.iter().map(|&(x, y)| Point2::new(x as f64, y as f64)).collect();
    Contour::new(points).ok()
}

/// Outer boundary of every non-background region with at least
/// `min_area` pixels, in id order, each resampled to `n` points. Regions
/// too thin to enclose a loop are skipped.
pub fn extract_outlines(labels: &LabelMap, min_area: usize, n: usize) -> Vec<Contour> {
    let areas = labels.areas();
    labels
        .region_ids()
        .filter(|&id| areas[id as usize] >= min_area.max(1))
        .filter_map(|id| trace_region(labels, id)?.resample(n).ok())
        .collect()
}

/// Outline of the dominant object: Otsu threshold, the class that does not
/// dominate the image frame is foreground, and the largest 8-connected
/// foreground component is traced and resampled to `n` points.
pub fn silhouette(img: &Image, n: usize) -> Result<Contour> {
    let (w, h) = (img.width, img.height);
    let dark = otsu_dark_mask(img).ok_or(ImagingError::NoForeground)?;
    let (mut border, mut border_dark) = (0usize, 0usize);
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                border += 1;
                border_dark += usize::from(dark[y * w + x]);
            }
        }
    }
    let invert = 2 * border_dark > border;
    let fg: Vec<bool> = dark.iter().map(|&d| d != invert).collect();
    let map = label_binary(&fg, w, h);
    let areas = map.areas();
    let largest = map
        .region_ids()
        .max_by(|&a, &b| areas[a as usize].cmp(&areas[b as usize]).then(b.cmp(&a)))
        .ok_or(ImagingError::NoForeground)?;
    trace_region(&map, largest)
        .ok_or(ImagingError::NoForeground)?
        .resample(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::disc_image;

    fn square_map(size: usize, x0: usize, side: usize) -> LabelMap {
        let mut mask = vec![false; size * size];
        for y in x0..x0 + side {
            for x in x0..x0 + side {
                mask[y * size + x] = true;
            }
        }
        label_binary(&mask, size, size)
    }

    #[test]
    fn traces_square_boundary() {
        let map = square_map(20, 4, 8);
        let raw = trace_region(&map, 1).unwrap();
        assert_eq!(raw.len(), 28);
        let outlines = extract_outlines(&map, 1, 64);
        assert_eq!(outlines.len(), 1);
        let area = outlines[0].area();
        assert!((area - 64.0).abs() <= outlines[0].perimeter(), "{area}");
    }

    #[test]
    fn small_regions_are_dropped() {
        assert!(extract_outlines(&square_map(20, 4, 3), 10, 16).is_empty());
    }

    #[test]
    fn annulus_gives_outer_loop_only() {
        let mut mask = vec![false; 40 * 40];
        for y in 5..35 {
            for x in 5..35 {
                mask[y * 40 + x] = !(12..28).contains(&x) || !(12..28).contains(&y);
            }
        }
        let outlines = extract_outlines(&label_binary(&mask, 40, 40), 1, 128);
        assert_eq!(outlines.len(), 1);
        assert!((outlines[0].area() - 29.0 * 29.0).abs() < 1.0);
    }

    #[test]
    fn disc_silhouette_area() {
        let img = disc_image(256, 256, 128.0, 128.0, 100.0);
        let c = silhouette(&img, DEFAULT_CONTOUR_POINTS).unwrap();
        let disc = std::f64::consts::PI * 100.0 * 100.0;
        assert!((c.area() - disc).abs() / disc < 0.02);
        assert_eq!(c.len(), 128);
    }

    #[test]
    fn blank_has_no_foreground() {
        assert!(matches!(
            silhouette(&Image::filled_gray(32, 32, 1.0), 128),
            Err(ImagingError::NoForeground)
        ));
    }

    #[test]
    fn larger_of_two_blobs_wins() {
        let mut img = disc_image(128, 64, 30.0, 32.0, 20.0);
        for y in 0..64 {
            for x in 0..128 {
                let (dx, dy) = (x as f64 - 95.0, y as f64 - 32.0);
                if dx * dx + dy * dy <= 100.0 {
                    img.set_gray(x, y, 0.0);
                }
            }
        }
        let c = silhouette(&img, 64).unwrap();
        assert!((c.centroid().x - 30.0).abs() < 1.0);
    }

    #[test]
    fn light_object_on_dark_ground() {
        let mut img = disc_image(64, 64, 32.0, 32.0, 12.0);
        for v in &mut img.data {
            *v = 1.0 - *v;
        }
        let c = silhouette(&img, 64).unwrap();
        assert!((c.area() - std::f64::consts::PI * 144.0).abs() < 0.15 * std::f64::consts::PI * 144.0);
    }

    #[test]
    fn resample_spacing_is_even() {
        let c = Contour::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(0.0, 4.0),
        ])
        .unwrap();
        let r = c.resample(16).unwrap();
        for i in 0..16 {
            let d = (r.points[(i + 1) % 16] - r.points[i]).norm();
            assert!((d - 1.0).abs() < 1e-12);
        }
    }
}

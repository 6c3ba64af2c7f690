//! Rasterized rollouts and their export formats.

use std::io::Write;
use std::path::Path;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{FlatMap2D, FlattenError, Result};
use crate::imaging::Image;
use crate::mesh::TriangleMesh;

/// Untextured surfaces render in this gray.
const DEFAULT_SURFACE: [f32; 3] = [0.75, 0.72, 0.68];
const MAX_PIXELS: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatMetric {
    Angular,
    Areal,
}

impl std::str::FromStr for HeatMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "angular" => Ok(Self::Angular),
            "areal" => Ok(Self::Areal),
            other => Err(format!("unknown heat metric `{other}` (angular, areal)")),
        }
    }
}

/// Georeference of a rendered rollout: pixel `(x, y)` has its center at
/// `origin + ((x + 0.5)·mm_per_px, −(y + 0.5)·mm_per_px)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSidecar {
    pub mm_per_px: f64,
    pub width: usize,
    pub height: usize,
    /// Top-left corner of the image in map millimeters.
    pub origin: [f64; 2],
}

/// Blue (0) through white (0.5) to red (1).
fn heat_color(t: f64) -> [f32; 3] {
    let t = t.clamp(0.0, 1.0) as f32;
    if t < 0.5 {
        let s = t * 2.0;
        [s, s, 1.0]
    } else {
        let s = (1.0 - t) * 2.0;
        [1.0, s, s]
    }
}

/// Angular distortion maps `[1, 4]` onto the upper half of the scale,
/// areal distortion maps `[1/2, 2]` (log scale) onto the whole of it.
fn heat_value(metric: HeatMetric, d: &super::DistortionSample) -> f64 {
    match metric {
        HeatMetric::Angular => 0.5 + 0.5 * d.angular.max(1.0).ln() / 4f64.ln(),
        HeatMetric::Areal => {
            if d.areal > 0.0 {
                0.5 + 0.5 * d.areal.ln() / 2f64.ln()
            } else {
                0.0
            }
        }
    }
}

/// Paints every map triangle with barycentrically interpolated vertex
/// colors on a white background. With `heat`, triangle colors are blended
/// half-and-half with a distortion color scale.
pub fn render_flatmap(
    map: &FlatMap2D,
    mesh: &TriangleMesh,
    px_per_mm: f64,
    heat: Option<HeatMetric>,
) -> Result<(Image, RenderSidecar)> {
    if !(px_per_mm > 0.0 && px_per_mm.is_finite()) {
        return Err(FlattenError::InvalidArgument(format!("px_per_mm must be positive, got {px_per_mm}")));
    }
    if map.triangles.is_empty() {
        return Err(FlattenError::EmptyMap);
    }
    map.check_against(mesh)?;
    let used: Vec<Point2<f64>> = map.triangles.iter().flatten().map(|&v| map.positions[v]).collect();
    let (mut lo, mut hi) = (used[0], used[0]);
    for p in &used {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let width = (((hi.x - lo.x) * px_per_mm).round() as usize).max(1);
    let height = (((hi.y - lo.y) * px_per_mm).round() as usize).max(1);
    if width.saturating_mul(height) > MAX_PIXELS {
        return Err(FlattenError::InvalidArgument(format!("{width}x{height} render is too large")));
    }
    let mut img = Image::filled_rgb(width, height, [1.0; 3]);
    let color_of = |v: usize| -> [f32; 3] {
        mesh.colors
            .as_ref()
            .map_or(DEFAULT_SURFACE, |c| c[map.source_vertex[v]])
    };
    let to_px = |p: &Point2<f64>| Point2::new((p.x - lo.x) * px_per_mm, (hi.y - p.y) * px_per_mm);

    for (t, tri) in map.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|v| to_px(&map.positions[v]));
        let area = (b - a).perp(&(c - a));
        if area.abs() < 1e-12 {
            continue;
        }
        let colors = tri.map(color_of);
        let overlay = heat.map(|m| heat_color(heat_value(m, &map.per_triangle[t])));
        let x0 = (a.x.min(b.x).min(c.x) - 0.5).floor().max(0.0) as usize;
        let x1 = ((a.x.max(b.x).max(c.x) - 0.5).ceil().max(0.0) as usize).min(width - 1);
        let y0 = (a.y.min(b.y).min(c.y) - 0.5).floor().max(0.0) as usize;
        let y1 = ((a.y.max(b.y).max(c.y) - 0.5).ceil().max(0.0) as usize).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                let wa = (c - b).perp(&(p - b)) / area;
                let wb = (a - c).perp(&(p - c)) / area;
                let wc = 1.0 - wa - wb;
                if wa < -1e-9 || wb < -1e-9 || wc < -1e-9 {
                    continue;
                }
                let mut rgb = [0.0f32; 3];
                for (ch, out) in rgb.iter_mut().enumerate() {
                    *out = (wa * colors[0][ch] as f64 + wb * colors[1][ch] as f64 + wc * colors[2][ch] as f64)
                        as f32;
                }
                if let Some(h) = overlay {
                    for ch in 0..3 {
                        rgb[ch] = 0.5 * rgb[ch] + 0.5 * h[ch];
                    }
                }
                img.set_rgb(x, y, rgb);
            }
        }
    }
    Ok((
        img,
        RenderSidecar {
            mm_per_px: 1.0 / px_per_mm,
            width,
            height,
            origin: [lo.x, hi.y],
        },
    ))
}

/// Writes `path` as PNG and the sidecar next to it with a `.json` extension.
pub fn save_render(img: &Image, sidecar: &RenderSidecar, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    crate::imaging::save_png(img, path)?;
    let json = serde_json::to_vec_pretty(sidecar).expect("sidecar serializes");
    std::fs::write(path.with_extension("json"), json)?;
    Ok(())
}

/// Wavefront OBJ of the cut mesh with `z = 0`.
pub fn write_flatmap_obj(map: &FlatMap2D, out: &mut impl Write) -> std::io::Result<()> {
    for p in &map.positions {
        writeln!(out, "v {} {} 0", p.x, p.y)?;
    }
    for t in &map.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn write_distortion_csv(map: &FlatMap2D, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "tri_index,sigma1,sigma2,angular,areal")?;
    for (t, d) in map.per_triangle.iter().enumerate() {
        writeln!(out, "{t},{},{},{},{}", d.sigma1, d.sigma2, d.angular, d.areal)?;
    }
    Ok(())
}

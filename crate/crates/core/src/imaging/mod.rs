//! Raster images, motif segmentation and 2D shape descriptors.
//!
//! Pixel `(x, y)` has its sample point at `(x, y)`, with y pointing down.
//! Values are in `[0, 1]`.

mod contour;
mod egbis;
mod hog;
mod hungarian;
mod labels;
mod morph;
mod scd;
mod shape_context;

pub use contour::{extract_outlines, silhouette, Contour, DEFAULT_CONTOUR_POINTS};
pub use egbis::{egbis_segment, egbis_segment_traced, EgbisEdge, EgbisParams, MergeEvent};
pub use hog::{hog, hog_canonical, HogDescriptor, HogParams};
pub use hungarian::hungarian;
pub use labels::{label_binary, LabelMap, RegionInfo};
pub use morph::{close, dilate, erode, morph_segment, open, MorphParams};
pub use scd::{scd, scd_distance, ScdParams, SilhouetteDescriptor};
pub use shape_context::{
    shape_context, shape_context_cost, shape_context_set_cost, ShapeContextParams, ShapeContextSet,
};

use std::path::Path;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no foreground object found")]
    NoForeground,
    #[error("degenerate contour: {0}")]
    DegenerateContour(String),
}

pub type Result<T, E = ImagingError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Self::Gray => 1,
            Self::Rgb => 3,
        }
    }
}

/// Row-major interleaved raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: Channels,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: Channels, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidArgument(format!(
                "image must be non-empty, got {width}×{height}"
            )));
        }
        if data.len() != width * height * channels.count() {
            return Err(ImagingError::InvalidArgument(format!(
                "{} values for a {width}×{height} {channels:?} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ImagingError::InvalidArgument(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled_gray(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            channels: Channels::Gray,
            data: vec![value; width * height],
        }
    }

    pub fn filled_rgb(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        Self {
            width,
            height,
            channels: Channels::Rgb,
            data: rgb.iter().copied().cycle().take(3 * width * height).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Color of a pixel; gray images replicate their value.
    pub fn rgb(&self, x: usize, y: usize) -> [f32; 3] {
        let i = y * self.width + x;
        match self.channels {
            Channels::Gray => [self.data[i]; 3],
            Channels::Rgb => [self.data[3 * i], self.data[3 * i + 1], self.data[3 * i + 2]],
        }
    }

    /// Luma (Rec. 601 weights).
    pub fn gray(&self, x: usize, y: usize) -> f32 {
        let i = y * self.width + x;
        match self.channels {
            Channels::Gray => self.data[i],
            Channels::Rgb => {
                0.299 * self.data[3 * i] + 0.587 * self.data[3 * i + 1] + 0.114 * self.data[3 * i + 2]
            }
        }
    }

    pub fn set_gray(&mut self, x: usize, y: usize, v: f32) {
        let i = y * self.width + x;
        match self.channels {
            Channels::Gray => self.data[i] = v,
            Channels::Rgb => self.data[3 * i..3 * i + 3].fill(v),
        }
    }

    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = y * self.width + x;
        match self.channels {
            Channels::Gray => self.data[i] = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2],
            Channels::Rgb => self.data[3 * i..3 * i + 3].copy_from_slice(&rgb),
        }
    }

    pub fn to_gray(&self) -> Self {
        let mut data = Vec::with_capacity(self.len());
        for y in 0..self.height {
            for x in 0..self.width {
                data.push(self.gray(x, y));
            }
        }
        Self {
            width: self.width,
            height: self.height,
            channels: Channels::Gray,
            data,
        }
    }

    /// Gray values as `f64`, row-major.
    pub fn gray_f64(&self) -> Vec<f64> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .map(|(x, y)| self.gray(x, y) as f64)
            .collect()
    }

    /// Mean gray value over the one-pixel frame.
    pub fn border_mean(&self) -> f32 {
        let mut sum = 0.0f64;
        let mut n = 0usize;
        for y in 0..self.height {
            for x in 0..self.width {
                if x == 0 || y == 0 || x + 1 == self.width || y + 1 == self.height {
                    sum += self.gray(x, y) as f64;
                    n += 1;
                }
            }
        }
        (sum / n as f64) as f32
    }

    /// Aspect-preserving bilinear resample into a `size × size` gray frame,
    /// padded with the border mean.
    pub fn letterbox_gray(&self, size: usize) -> Self {
        let gray = self.to_gray();
        if self.width == size && self.height == size {
            return gray;
        }
        let scale = size as f64 / self.width.max(self.height) as f64;
        let (w, h) = (
            ((self.width as f64 * scale).round() as usize).clamp(1, size),
            ((self.height as f64 * scale).round() as usize).clamp(1, size),
        );
        let (ox, oy) = ((size - w) / 2, (size - h) / 2);
        let mut out = Self::filled_gray(size, size, self.border_mean());
        let sample = |fx: f64, fy: f64| -> f32 {
            let fx = fx.clamp(0.0, (gray.width - 1) as f64);
            let fy = fy.clamp(0.0, (gray.height - 1) as f64);
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(gray.width - 1), (y0 + 1).min(gray.height - 1));
            let (tx, ty) = ((fx - x0 as f64) as f32, (fy - y0 as f64) as f32);
            let at = |x: usize, y: usize| gray.data[y * gray.width + x];
            let lerp = |a: f32, b: f32, t: f32| a + (b - a) * t;
            lerp(lerp(at(x0, y0), at(x1, y0), tx), lerp(at(x0, y1), at(x1, y1), tx), ty)
        };
        let sx = self.width as f64 / w as f64;
        let sy = self.height as f64 / h as f64;
        for y in 0..h {
            for x in 0..w {
                let v = sample((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5);
                out.data[(y + oy) * size + x + ox] = v;
            }
        }
        out
    }

    pub fn from_dynamic(img: &image::DynamicImage) -> Self {
        use image::ColorType;
        let (width, height) = (img.width() as usize, img.height() as usize);
        match img.color() {
            ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16 => {
                let luma = img.to_luma32f();
                Self {
                    width,
                    height,
                    channels: Channels::Gray,
                    data: luma.into_raw().into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                }
            }
            _ => {
                let rgb = img.to_rgb32f();
                Self {
                    width,
                    height,
                    channels: Channels::Rgb,
                    data: rgb.into_raw().into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                }
            }
        }
    }

    pub fn to_dynamic(&self) -> image::DynamicImage {
        let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let bytes: Vec<u8> = self.data.iter().map(|&v| q(v)).collect();
        let (w, h) = (self.width as u32, self.height as u32);
        match self.channels {
            Channels::Gray => image::DynamicImage::ImageLuma8(
                image::GrayImage::from_raw(w, h, bytes).expect("size checked"),
            ),
            Channels::Rgb => image::DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(w, h, bytes).expect("size checked"),
            ),
        }
    }

    /// 8-bit PNG bytes.
    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_dynamic()
            .write_to(&mut out, image::ImageFormat::Png)
            .expect("in-memory PNG encoding");
        out.into_inner()
    }
}

/// Reads PNG (8/16-bit gray or color) and binary PGM (P5).
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let bytes = std::fs::read(path)?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let format = image::guess_format(bytes).map_err(|e| ImagingError::Decode(e.to_string()))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Pnm) {
        return Err(ImagingError::Decode(format!("unsupported format {format:?}")));
    }
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| ImagingError::Decode(e.to_string()))?;
    Ok(Image::from_dynamic(&img))
}

pub fn save_png(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, img.encode_png())?;
    Ok(())
}

/// Even-odd scanline fill of a polygon, sampling pixels at integer
/// coordinates.
pub fn fill_polygon(img: &mut Image, poly: &[Point2<f64>], value: f32) {
    for (x, y) in polygon_pixels(poly, img.width, img.height) {
        img.set_gray(x, y, value);
    }
}

pub(crate) fn polygon_pixels(poly: &[Point2<f64>], width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if poly.len() < 3 {
        return out;
    }
    let mut xs = Vec::new();
    for y in 0..height {
        let fy = y as f64;
        xs.clear();
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            if (a.y > fy) != (b.y > fy) {
                xs.push(a.x + (fy - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let lo = pair[0].ceil().max(0.0);
            let hi = pair[1].min(width as f64 - 1e-9);
            let mut x = lo;
            while x < hi {
                out.push((x as usize, y));
                x += 1.0;
            }
        }
    }
    out
}

/// Separable Gaussian blur with clamped borders; `sigma = 0` is the
/// identity. Kernel half-width `ceil(4σ)`.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return img.clone();
    }
    let half = (4.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let c = img.channels.count();
    let (w, h) = (img.width as i64, img.height as i64);
    let pass = |src: &[f32], horizontal: bool| -> Vec<f32> {
        let mut dst = vec![0.0f32; src.len()];
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    let mut acc = 0.0f64;
                    for (k, weight) in kernel.iter().enumerate() {
                        let o = k as i64 - half;
                        let (sx, sy) = if horizontal {
                            ((x + o).clamp(0, w - 1), y)
                        } else {
                            (x, (y + o).clamp(0, h - 1))
                        };
                        acc += weight * src[((sy * w + sx) as usize) * c + ch] as f64;
                    }
                    dst[((y * w + x) as usize) * c + ch] = acc as f32;
                }
            }
        }
        dst
    };
    let data = pass(&pass(&img.data, true), false);
    Image {
        data,
        ..img.clone()
    }
}

/// Otsu threshold on 256 gray levels. Returns the last level of the dark
/// class, or `None` when the image has fewer than two distinct levels.
pub fn otsu_level(img: &Image) -> Option<u8> {
    let mut hist = [0u64; 256];
    for y in 0..img.height {
        for x in 0..img.width {
            hist[quantize(img.gray(x, y)) as usize] += 1;
        }
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total = img.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0u8);
    for t in 0..255 {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    Some(best.1)
}

pub(crate) fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Dark-class mask under the Otsu threshold.
pub(crate) fn otsu_dark_mask(img: &Image) -> Option<Vec<bool>> {
    let t = otsu_level(img)?;
    let mut mask = Vec::with_capacity(img.len());
    for y in 0..img.height {
        for x in 0..img.width {
            mask.push(quantize(img.gray(x, y)) <= t);
        }
    }
    Some(mask)
}

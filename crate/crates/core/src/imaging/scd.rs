//! Silhouette contour descriptor: multi-scale turning angles along an
//! arclength-resampled outline.

use serde::{Deserialize, Serialize};

use super::{Contour, ImagingError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScdParams {
    /// Resampled contour points.
    pub n: usize,
    /// Chord spans `1, 2, 4, …, 2^(scales−1)` samples.
    pub scales: usize,
}

impl Default for ScdParams {
    fn default() -> Self {
        Self { n: 128, scales: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteDescriptor {
    pub n: usize,
    pub scales: usize,
    /// `scales` blocks of `n` turning angles (radians per sample step),
    /// traversal counter-clockwise in the contour's coordinate frame.
    pub values: Vec<f64>,
}

/// Turning angle at every sample for chord spans `k = 2^s`, divided by
/// `k`. A circle gives `2π/n` everywhere.
pub fn scd(contour: &Contour, params: &ScdParams) -> Result<SilhouetteDescriptor> {
    if params.scales == 0 || (1usize << (params.scales - 1)) >= params.n {
        return Err(ImagingError::InvalidArgument(format!(
            "{} scales do not fit {} samples",
            params.scales, params.n
        )));
    }
    let mut c = contour.resample(params.n)?;
    if c.signed_area() < 0.0 {
        let n = c.points.len();
        c.points = (0..n).map(|i| c.points[(n - i) % n]).collect();
    }
    let n = params.n;
    let p = &c.points;
    let mut values = Vec::with_capacity(n * params.scales);
    for s in 0..params.scales {
        let k = 1usize << s;
        for i in 0..n {
            let a = p[i] - p[(i + n - k) % n];
            let b = p[(i + k) % n] - p[i];
            let cross = a.x * b.y - a.y * b.x;
            let dot = a.dot(&b);
            let turn = if cross == 0.0 && dot == 0.0 { 0.0 } else { cross.atan2(dot) };
            values.push(turn / k as f64);
        }
    }
    Ok(SilhouetteDescriptor {
        n,
        scales: params.scales,
        values,
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Mean absolute turning-angle difference per sample, minimized over
/// cyclic start shifts and mirror reflection. Arguments are put in a
/// canonical order first, so the result is exactly symmetric.
pub fn scd_distance(a: &SilhouetteDescriptor, b: &SilhouetteDescriptor) -> f64 {
    assert_eq!((a.n, a.scales), (b.n, b.scales), "descriptor layouts differ");
    let (x, y) = if lexicographic(&a.values, &b.values).is_le() {
        (a, b)
    } else {
        (b, a)
    };
    let n = x.n;
    let mut best = f64::INFINITY;
    for reflect in [false, true] {
        for shift in 0..n {
            let mut total = 0.0;
            for s in 0..x.scales {
                let xs = &x.values[s * n..(s + 1) * n];
                let ys = &y.values[s * n..(s + 1) * n];
                for i in 0..n {
                    let j = if reflect { (2 * n - i - shift) % n } else { (i + shift) % n };
                    total += (xs[i] - ys[j]).abs();
                }
                if total >= best * n as f64 {
                    break;
                }
            }
            best = best.min(total / n as f64);
        }
    }
    best
}

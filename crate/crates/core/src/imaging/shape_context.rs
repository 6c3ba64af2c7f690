//! Shape Context descriptors and matching cost.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{hungarian, Contour, ImagingError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeContextParams {
    pub samples: usize,
    pub radial_bins: usize,
    pub angle_bins: usize,
    /// Radial range in units of the mean pairwise distance; distances
    /// outside it fall into the first or last ring.
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Default for ShapeContextParams {
    fn default() -> Self {
        Self {
            samples: 100,
            radial_bins: 5,
            angle_bins: 12,
            r_inner: 0.125,
            r_outer: 2.0,
        }
    }
}

/// Per-sample log-polar histograms of the other samples' positions. Each
/// histogram holds raw counts summing to `samples − 1`; bins are radial
/// ring major, angle minor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeContextSet {
    pub params: ShapeContextParams,
    pub histograms: Vec<Vec<f64>>,
}

/// Floor that treats values within rounding noise of an integer as that
/// integer, so bin edges do not flicker under translation or scaling.
fn stable_floor(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() < 1e-9 {
        r
    } else {
        t.floor()
    }
}

pub fn shape_context(contour: &Contour, params: &ShapeContextParams) -> Result<ShapeContextSet> {
    if params.samples < 8 || params.radial_bins == 0 || params.angle_bins == 0 {
        return Err(ImagingError::InvalidArgument(format!("bad shape context layout {params:?}")));
    }
    if !(0.0 < params.r_inner && params.r_inner < params.r_outer) {
        return Err(ImagingError::InvalidArgument(format!(
            "radial range must satisfy 0 < r_inner < r_outer, got [{}, {}]",
            params.r_inner, params.r_outer
        )));
    }
    let pts = contour.resample(params.samples)?.points;
    let m = pts.len();
    let mut dist = vec![0.0f64; m * m];
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let d = (pts[j] - pts[i]).norm();
                dist[i * m + j] = d;
                total += d;
            }
        }
    }
    let mean = total / (m * (m - 1)) as f64;
    if !(mean > 0.0) {
        return Err(ImagingError::DegenerateContour("all samples coincide".into()));
    }
    let (nr, na) = (params.radial_bins, params.angle_bins);
    let log_span = (params.r_outer / params.r_inner).ln();
    let histograms = (0..m)
        .map(|i| {
            let mut h = vec![0.0; nr * na];
            for j in 0..m {
                if i == j {
                    continue;
                }
                let r = dist[i * m + j] / mean;
                let ring = if r <= params.r_inner {
                    0
                } else if r >= params.r_outer {
                    nr - 1
                } else {
                    (stable_floor((r / params.r_inner).ln() / log_span * nr as f64) as usize).min(nr - 1)
                };
                let d = pts[j] - pts[i];
                let theta = d.y.atan2(d.x).rem_euclid(TAU);
                let sector = (stable_floor(theta / TAU * na as f64) as usize) % na;
                h[ring * na + sector] += 1.0;
            }
            h
        })
        .collect();
    Ok(ShapeContextSet {
        params: *params,
        histograms,
    })
}

/// χ² distance between two count histograms after normalizing each to
/// unit mass.
fn chi2(g: &[f64], h: &[f64], gs: f64, hs: f64) -> f64 {
    0.5 * g
        .iter()
        .zip(h)
        .map(|(&a, &b)| {
            let (a, b) = (a / gs, b / hs);
            if a + b > 0.0 {
                (a - b) * (a - b) / (a + b)
            } else {
                0.0
            }
        })
        .sum::<f64>()
}

/// Mean χ² over the optimal one-to-one matching of two descriptor sets.
pub fn shape_context_set_cost(a: &ShapeContextSet, b: &ShapeContextSet) -> f64 {
    let (n, m) = (a.histograms.len(), b.histograms.len());
    let (rows, cols, transpose) = if n <= m { (n, m, false) } else { (m, n, true) };
    let sums = |s: &ShapeContextSet| -> Vec<f64> {
        s.histograms.iter().map(|h| h.iter().sum::<f64>().max(1.0)).collect()
    };
    let (sa, sb) = (sums(a), sums(b));
    let mut cost = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let (i, j) = if transpose { (c, r) } else { (r, c) };
            cost[r * cols + c] = chi2(&a.histograms[i], &b.histograms[j], sa[i], sb[j]);
        }
    }
    let assignment = hungarian(&cost, rows, cols);
    assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| cost[r * cols + c])
        .sum::<f64>()
        / rows as f64
}

/// Resamples both contours, builds their Shape Contexts and returns the
/// mean matched χ² cost.
pub fn shape_context_cost(a: &Contour, b: &Contour, params: &ShapeContextParams) -> Result<f64> {
    Ok(shape_context_set_cost(&shape_context(a, params)?, &shape_context(b, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point2;

    fn circle(r: f64) -> Contour {
        Contour::new(
            (0..90)
                .map(|i| {
                    let t = TAU * i as f64 / 90.0;
                    Point2::new(r * t.cos(), r * t.sin())
                })
                .collect(),
        )
        .unwrap()
    }

    fn square(s: f64) -> Contour {
        Contour::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(s, 0.0),
            Point2::new(s, s),
            Point2::new(0.0, s),
        ])
        .unwrap()
    }

    #[test]
    fn histograms_sum_to_m_minus_one() {
        let p = ShapeContextParams::default();
        let set = shape_context(&square(10.0), &p).unwrap();
        assert_eq!(set.histograms.len(), 100);
        for h in &set.histograms {
            assert_eq!(h.len(), 60);
            assert_eq!(h.iter().sum::<f64>(), 99.0);
        }
    }

    #[test]
    fn identical_contours_cost_nothing() {
        let p = ShapeContextParams::default();
        assert!(shape_context_cost(&square(10.0), &square(10.0), &p).unwrap() < 1e-9);
    }

    #[test]
    fn similarity_invariance() {
        let p = ShapeContextParams::default();
        let a = square(10.0);
        let b = a.map(|q| Point2::new(3.0 * q.x + 17.25, 3.0 * q.y - 4.5));
        assert!(shape_context_cost(&a, &b, &p).unwrap() < 1e-6);
    }

    #[test]
    fn circle_is_closer_to_circle_than_square() {
        let p = ShapeContextParams::default();
        let cc = shape_context_cost(&circle(5.0), &circle(12.0), &p).unwrap();
        let cs = shape_context_cost(&circle(5.0), &square(10.0), &p).unwrap();
        assert!(cs > cc, "{cs} vs {cc}");
    }

    #[test]
    fn cost_is_symmetric() {
        let p = ShapeContextParams::default();
        let (a, b) = (circle(5.0), square(7.0));
        let ab = shape_context_cost(&a, &b, &p).unwrap();
        let ba = shape_context_cost(&b, &a, &p).unwrap();
        assert!((ab - ba).abs() < 1e-6);
    }
}

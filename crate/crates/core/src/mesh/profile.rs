use serde::{Deserialize, Serialize};

use super::{Axis, MeshError, Result, TriangleMesh};
use crate::util::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    /// Height along the axis (mm).
    pub z: f64,
    /// Radius (mm).
    pub r: f64,
}

/// Radius as a function of height along an axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub samples: Vec<ProfileSample>,
    /// The axis the profile was measured against, if any.
    pub axis: Option<Axis>,
}

impl Profile {
    /// Checks that heights are strictly increasing and radii non-negative.
    pub fn new(samples: Vec<ProfileSample>, axis: Option<Axis>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !(s.z.is_finite() && s.r.is_finite()) {
                return Err(MeshError::InvalidArgument(format!("sample {i} is not finite")));
            }
            if s.r < 0.0 {
                return Err(MeshError::InvalidArgument(format!("sample {i} has negative radius")));
            }
            if i > 0 && s.z <= samples[i - 1].z {
                return Err(MeshError::InvalidArgument(format!(
                    "heights not strictly increasing at sample {i}"
                )));
            }
        }
        Ok(Self { samples, axis })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|&(z, r)| ProfileSample { z, r }).collect(),
            None,
        )
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.z, s.r)).collect()
    }
}

/// Bins vertices by height along `axis` and takes the median distance to the
/// axis per bin.
///
/// Sample heights are `n_bins` evenly spaced values from the lowest to the
/// highest vertex, both ends included; each vertex falls into the bin of
/// its nearest sample height. Empty bins are linearly interpolated from the
/// nearest populated neighbors (or copied at the ends).
pub fn extract_profile(mesh: &TriangleMesh, axis: &Axis, n_bins: usize) -> Result<Profile> {
    if n_bins < 2 {
        return Err(MeshError::InvalidArgument(format!(
            "n_bins must be at least 2, got {n_bins}"
        )));
    }
    if mesh.vertices.is_empty() {
        return Err(MeshError::Empty);
    }
    let heights: Vec<f64> = mesh.vertices.iter().map(|p| axis.height(p)).collect();
    let (lo, hi) = heights
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| {
            (lo.min(h), hi.max(h))
        });
    let span = hi - lo;
    if !(span > 1e-9 * mesh.bbox().diagonal().max(1e-300)) {
        return Err(MeshError::AllBinsEmpty);
    }
    let step = span / (n_bins - 1) as f64;

    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for (p, &h) in mesh.vertices.iter().zip(&heights) {
        let k = (((h - lo) / step).round() as usize).min(n_bins - 1);
        bins[k].push(axis.radius(p));
    }
    let radii: Vec<Option<f64>> = bins.iter_mut().map(|b| median(b)).collect();
    if radii.iter().all(Option::is_none) {
        return Err(MeshError::AllBinsEmpty);
    }

    let filled: Vec<f64> = (0..n_bins)
        .map(|k| match radii[k] {
            Some(r) => r,
            None => {
                let below = (0..k).rev().find_map(|j| radii[j].map(|r| (j, r)));
                let above = (k + 1..n_bins).find_map(|j| radii[j].map(|r| (j, r)));
                match (below, above) {
                    (Some((j0, r0)), Some((j1, r1))) => {
                        let t = (k - j0) as f64 / (j1 - j0) as f64;
                        r0 + t * (r1 - r0)
                    }
                    (Some((_, r)), None) | (None, Some((_, r))) => r,
                    (None, None) => unreachable!(),
                }
            }
        })
        .collect();

    let samples = filled
        .into_iter()
        .enumerate()
        .map(|(k, r)| ProfileSample {
            z: if k == n_bins - 1 { hi } else { lo + k as f64 * step },
            r,
        })
        .collect();
    Profile::new(samples, Some(*axis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use nalgebra::{Point3, Vector3};

    fn z_axis() -> Axis {
        Axis::new(Point3::origin(), Vector3::z())
    }

    #[test]
    fn cylinder_profile_is_flat() {
        let mesh = synth::cylinder(20.0, 50.0, 128, 20, false);
        let profile = extract_profile(&mesh, &z_axis(), 10).unwrap();
        assert_eq!(profile.samples.len(), 10);
        for s in &profile.samples {
            assert!((s.r - 20.0).abs() < 1e-9, "{s:?}");
        }
        assert_eq!(profile.samples[0].z, 0.0);
        assert_eq!(profile.samples[9].z, 50.0);
    }

    #[test]
    fn cone_profile_is_linear() {
        // apex up: r = 30 (1 − z/60)
        let mesh = synth::cone(30.0, 60.0, 128, 60, false);
        let profile = extract_profile(&mesh, &z_axis(), 13).unwrap();
        for s in &profile.samples[..12] {
            let expected = 30.0 * (1.0 - s.z / 60.0);
            assert!((s.r - expected).abs() <= 0.02 * 30.0, "{s:?} vs {expected}");
        }
        for w in profile.samples.windows(2) {
            assert!(w[1].r <= w[0].r + 1e-9);
        }
    }

    #[test]
    fn empty_bins_are_interpolated() {
        // two rings far apart: every inner bin is empty
        let mesh = synth::cone(30.0, 60.0, 32, 1, false);
        let profile = extract_profile(&mesh, &z_axis(), 7).unwrap();
        let r: Vec<f64> = profile.samples.iter().map(|s| s.r).collect();
        assert!((r[0] - 30.0).abs() < 1e-9);
        assert!((r[3] - 15.0).abs() < 1e-9);
    }

    #[test]
    fn one_bin_is_rejected() {
        let mesh = synth::cylinder(20.0, 50.0, 16, 2, false);
        assert!(matches!(
            extract_profile(&mesh, &z_axis(), 1),
            Err(MeshError::InvalidArgument(_))
        ));
    }

    #[test]
    fn flat_along_axis_is_all_bins_empty() {
        let mesh = synth::grid(5, 5, 1.0);
        assert!(matches!(
            extract_profile(&mesh, &z_axis(), 4),
            Err(MeshError::AllBinsEmpty)
        ));
    }

    #[test]
    fn profile_invariants_are_checked() {
        assert!(Profile::from_pairs(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Profile::from_pairs(&[(0.0, -1.0)]).is_err());
    }
}

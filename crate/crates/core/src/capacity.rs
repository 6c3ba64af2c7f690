//! Filling volume (capacity) of vessels: revolving a measured profile,
//! closing and measuring an inner surface, offsetting an outer surface by a
//! known wall thickness, and subtracting the ceramic volume implied by mass
//! and bulk density.
//!
//! Capacities are brimful: the fill level is the rim plane.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{
    boundary_loops, mesh_volume, signed_volume_mm3, MeshError, Profile, TriangleMesh, MM3_PER_ML,
};

#[derive(Debug, Error)]
pub enum CapacityError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("profile needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("mesh is not closed ({boundary_edges} boundary edges); cap the rim first")]
    NotClosed { boundary_edges: usize },
    #[error("offset collapses the surface: {flipped} of {total} triangles inverted or degenerate")]
    OffsetCollapse { flipped: usize, total: usize },
    #[error("ceramic volume {ceramic_ml:.3} ml exceeds the enclosed volume {enclosed_ml:.3} ml")]
    InconsistentInputs { ceramic_ml: f64, enclosed_ml: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = CapacityError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    Revolve,
    InnerMesh,
    Offset,
    MassDensity,
    Voxel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub method: CapacityMethod,
    pub volume_ml: f64,
    #[serde(rename = "notes")]
    pub uncertainty_note: String,
}

fn closedness(err: MeshError) -> CapacityError {
    match err {
        MeshError::NotClosed { boundary_edges } => CapacityError::NotClosed { boundary_edges },
        other => CapacityError::Mesh(other),
    }
}

/// `π ∫ r(z)² dz` by the trapezoid rule over the profile samples.
pub fn volume_of_revolution(profile: &Profile) -> Result<CapacityResult> {
    let s = &profile.samples;
    if s.len() < 2 {
        return Err(CapacityError::TooFewSamples(s.len()));
    }
    let mm3: f64 = s
        .windows(2)
        .map(|w| 0.5 * (w[0].r * w[0].r + w[1].r * w[1].r) * (w[1].z - w[0].z))
        .sum::<f64>()
        * PI;
    Ok(CapacityResult {
        method: CapacityMethod::Revolve,
        volume_ml: mm3 / MM3_PER_ML,
        uncertainty_note: format!(
            "body of rotation over {} profile samples (trapezoid rule); assumes rotational symmetry",
            s.len()
        ),
    })
}

/// Closes every boundary loop with a planar disc: a least-squares plane
/// through the loop, a center vertex at the loop centroid, and a fan of
/// triangles oriented consistently with the surface.
pub fn cap_open_rim(mesh: &TriangleMesh) -> TriangleMesh {
    let mut out = mesh.clone();
    for lp in boundary_loops(mesh) {
        let pts: Vec<Point3<f64>> = lp.iter().map(|&v| mesh.vertices[v]).collect();
        let centroid = Point3::from(
            pts.iter().map(|p| p.coords).sum::<Vector3<f64>>() / pts.len() as f64,
        );
        let cov = pts.iter().fold(Matrix3::zeros(), |acc, p| {
            let d = p - centroid;
            acc + d * d.transpose()
        });
        let eig = SymmetricEigen::new(cov);
        let normal = eig.eigenvectors.column(eig.eigenvalues.imin()).into_owned();
        let plane_dev = pts
            .iter()
            .map(|p| (p - centroid).dot(&normal).abs())
            .fold(0.0, f64::max);
        if plane_dev > 0.0 {
            log::debug!("rim loop deviates up to {plane_dev:.4} mm from its fitted plane");
        }
        out.vertices.push(centroid);
        if let Some(colors) = &mut out.colors {
            colors.push([1.0, 1.0, 1.0]);
        }
        let c = out.vertices.len() - 1;
        for i in 0..lp.len() {
            let a = lp[i];
            let b = lp[(i + 1) % lp.len()];
            out.triangles.push([b, a, c]);
        }
    }
    out
}

/// Volume enclosed by a closed inner surface (cap open rims with
/// [`cap_open_rim`] first).
pub fn capacity_inner_mesh(inner: &TriangleMesh) -> Result<CapacityResult> {
    let v = mesh_volume(inner).map_err(closedness)?;
    let mut note = format!("closed inner surface of {} triangles", inner.triangles.len());
    if v.orientation_flipped {
        note.push_str("; winding was inverted, absolute volume reported");
    }
    Ok(CapacityResult {
        method: CapacityMethod::InnerMesh,
        volume_ml: v.volume_ml,
        uncertainty_note: note,
    })
}

/// Moves every vertex inward so that each incident face plane is offset by
/// `thickness`.
///
/// Per vertex, the displacement `δ` solves the least-squares system
/// `n_f · δ = −t` over its incident face normals, restricted to the
/// well-determined directions of `Σ w n nᵀ`. At a cube corner this is the
/// exact plane intersection; on smooth regions it reduces to a move of `t`
/// along the averaged normal.
pub fn interior_offset(outer: &TriangleMesh, thickness: f64) -> Result<TriangleMesh> {
    if !(thickness > 0.0 && thickness.is_finite()) {
        return Err(CapacityError::InvalidArgument(format!(
            "thickness must be positive, got {thickness}"
        )));
    }
    let before = mesh_volume(outer).map_err(closedness)?;
    let report = crate::mesh::validate_mesh(outer);
    if !report.is_manifold {
        return Err(CapacityError::Mesh(MeshError::Degenerate(
            "offset needs a manifold surface".into(),
        )));
    }
    let orientation = if before.orientation_flipped { -1.0 } else { 1.0 };

    let n = outer.vertices.len();
    let mut normal_moments = vec![Matrix3::zeros(); n];
    let mut normal_sums = vec![Vector3::zeros(); n];
    let mut weights = vec![0.0; n];
    for (t, tri) in outer.triangles.iter().enumerate() {
        let scaled = outer.face_normal_scaled(t) * orientation;
        let area = 0.5 * scaled.norm();
        if area < crate::mesh::ZERO_AREA_TOLERANCE {
            continue;
        }
        let unit = scaled / (2.0 * area);
        for &v in tri {
            normal_moments[v] += unit * unit.transpose() * area;
            normal_sums[v] += unit * area;
            weights[v] += area;
        }
    }

    let vertices: Vec<Point3<f64>> = (0..n)
        .map(|v| {
            if weights[v] == 0.0 {
                return outer.vertices[v];
            }
            let m = normal_moments[v] / weights[v];
            let rhs = normal_sums[v] / weights[v];
            let eig = SymmetricEigen::new(m);
            let max = eig.eigenvalues.amax();
            let mut delta = Vector3::zeros();
            for k in 0..3 {
                let lambda = eig.eigenvalues[k];
                if lambda > 1e-2 * max {
                    let e = eig.eigenvectors.column(k);
                    delta += e * (e.dot(&rhs) / lambda);
                }
            }
            outer.vertices[v] - delta * thickness
        })
        .collect();
    let inner = TriangleMesh {
        vertices,
        triangles: outer.triangles.clone(),
        colors: outer.colors.clone(),
    };

    let flipped = (0..outer.triangles.len())
        .filter(|&t| {
            let a = outer.face_normal_scaled(t);
            let b = inner.face_normal_scaled(t);
            a.norm() >= 2.0 * crate::mesh::ZERO_AREA_TOLERANCE
                && (b.norm() < 2.0 * crate::mesh::ZERO_AREA_TOLERANCE || a.dot(&b) <= 0.0)
        })
        .count();
    let after = signed_volume_mm3(&inner) * orientation;
    if flipped > 0 || !(after > 0.0 && after < before.signed_mm3.abs()) {
        return Err(CapacityError::OffsetCollapse {
            flipped,
            total: outer.triangles.len(),
        });
    }
    Ok(inner)
}

/// Capacity of a closed vessel from its outer surface and a constant wall
/// thickness.
pub fn capacity_offset(outer: &TriangleMesh, thickness: f64) -> Result<CapacityResult> {
    let inner = interior_offset(outer, thickness)?;
    let v = mesh_volume(&inner)?;
    Ok(CapacityResult {
        method: CapacityMethod::Offset,
        volume_ml: v.volume_ml,
        uncertainty_note: format!(
            "outer surface offset inward by a constant wall thickness of {thickness} mm"
        ),
    })
}

/// Enclosed volume of the outer surface minus the ceramic volume
/// `mass / density`.
pub fn capacity_mass_density(
    outer: &TriangleMesh,
    mass_g: f64,
    density_g_per_ml: f64,
) -> Result<CapacityResult> {
    if !(density_g_per_ml > 0.0 && density_g_per_ml.is_finite()) {
        return Err(CapacityError::InvalidArgument(format!(
            "density must be positive, got {density_g_per_ml}"
        )));
    }
    if !(mass_g > 0.0 && mass_g.is_finite()) {
        return Err(CapacityError::InvalidArgument(format!(
            "mass must be positive, got {mass_g}"
        )));
    }
    let enclosed_ml = mesh_volume(outer).map_err(closedness)?.volume_ml;
    mass_density_from_volume(enclosed_ml, mass_g, density_g_per_ml)
}

pub(crate) fn mass_density_from_volume(
    enclosed_ml: f64,
    mass_g: f64,
    density_g_per_ml: f64,
) -> Result<CapacityResult> {
    let ceramic_ml = mass_g / density_g_per_ml;
    if ceramic_ml > enclosed_ml {
        return Err(CapacityError::InconsistentInputs {
            ceramic_ml,
            enclosed_ml,
        });
    }
    Ok(CapacityResult {
        method: CapacityMethod::MassDensity,
        volume_ml: enclosed_ml - ceramic_ml,
        uncertainty_note: format!(
            "enclosed {enclosed_ml:.3} ml minus ceramic {ceramic_ml:.3} ml \
             ({mass_g} g at {density_g_per_ml} g/ml); restorations bias the mass"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn cylinder_revolution() {
        let p = Profile::from_pairs(&[(0.0, 10.0), (10.0, 10.0)]).unwrap();
        let v = volume_of_revolution(&p).unwrap().volume_ml;
        assert!((v - PI).abs() < 1e-12);
    }

    #[test]
    fn cone_revolution_with_many_samples() {
        let pairs: Vec<(f64, f64)> = (0..1000)
            .map(|i| {
                let z = 10.0 * i as f64 / 999.0;
                (z, z)
            })
            .collect();
        let v = volume_of_revolution(&Profile::from_pairs(&pairs).unwrap())
            .unwrap()
            .volume_ml;
        let exact = PI / 3.0 * 100.0 * 10.0 / 1000.0;
        assert!((v - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn single_sample_profile() {
        let p = Profile::from_pairs(&[(0.0, 10.0)]).unwrap();
        assert!(matches!(volume_of_revolution(&p), Err(CapacityError::TooFewSamples(1))));
    }

    #[test]
    fn capped_hemispherical_bowl() {
        let bowl = synth::hemispherical_bowl(50.0, 128, 64);
        assert!(matches!(
            capacity_inner_mesh(&bowl),
            Err(CapacityError::NotClosed { .. })
        ));
        let capped = cap_open_rim(&bowl);
        let v = capacity_inner_mesh(&capped).unwrap().volume_ml;
        let exact = 2.0 * PI * 50f64.powi(3) / 3.0 / 1000.0;
        assert!((v - exact).abs() / exact < 0.01, "{v} vs {exact}");
        assert!((exact - 261.80).abs() < 0.01);
    }

    #[test]
    fn unit_cube_cavity() {
        let v = capacity_inner_mesh(&synth::cube(10.0)).unwrap().volume_ml;
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_offset_is_exact() {
        let inner = interior_offset(&synth::cube(10.0), 1.0).unwrap();
        let v = mesh_volume(&inner).unwrap().volume_ml;
        assert!((v - 0.512).abs() < 1e-12);
        let fine = interior_offset(&synth::subdivided_cube(10.0, 3), 1.0).unwrap();
        assert!((mesh_volume(&fine).unwrap().volume_ml - 0.512).abs() < 1e-12);
    }

    #[test]
    fn sphere_offset() {
        let inner = interior_offset(&synth::icosphere(10.0, 4), 1.0).unwrap();
        let v = mesh_volume(&inner).unwrap().volume_ml;
        let exact = 4.0 * PI * 729.0 / 3.0 / 1000.0;
        assert!((v - exact).abs() / exact < 0.01, "{v} vs {exact}");
    }

    #[test]
    fn thick_offset_collapses() {
        assert!(matches!(
            interior_offset(&synth::cube(10.0), 6.0),
            Err(CapacityError::OffsetCollapse { .. })
        ));
    }

    #[test]
    fn offset_shrinks_volume() {
        let outer = synth::blob(20.0, 3, 11);
        let v0 = mesh_volume(&outer).unwrap().volume_ml;
        for t in [0.1, 0.5, 1.0] {
            let v = mesh_volume(&interior_offset(&outer, t).unwrap()).unwrap().volume_ml;
            assert!(v < v0);
        }
    }

    #[test]
    fn mass_density_arithmetic() {
        let r = mass_density_from_volume(2000.0, 1200.0, 1.5).unwrap();
        assert!((r.volume_ml - 1200.0).abs() < 1e-12);
        assert!(matches!(
            mass_density_from_volume(2000.0, 4000.0, 1.5),
            Err(CapacityError::InconsistentInputs { .. })
        ));
        assert!(matches!(
            capacity_mass_density(&synth::cube(10.0), 1.0, 0.0),
            Err(CapacityError::InvalidArgument(_))
        ));
    }

    #[test]
    fn mass_density_is_linear_in_mass() {
        let outer = synth::icosphere(50.0, 4);
        let a = capacity_mass_density(&outer, 100.0, 2.0).unwrap().volume_ml;
        let b = capacity_mass_density(&outer, 300.0, 2.0).unwrap().volume_ml;
        assert!(((b - a) / 200.0 + 1.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn hollow_sphere_generator_oracle() {
        // generator: wall between r = 45 and R = 50 of density 2.1 g/ml
        let (outer_r, inner_r, density) = (50.0, 45.0, 2.1);
        let ball = |r: f64| 4.0 / 3.0 * PI * r.powi(3) / 1000.0;
        let mass = density * (ball(outer_r) - ball(inner_r));
        let outer = synth::icosphere(outer_r, 5);
        let cap = capacity_mass_density(&outer, mass, density).unwrap().volume_ml;
        assert!((cap - ball(inner_r)).abs() / ball(inner_r) < 0.01);
    }
}

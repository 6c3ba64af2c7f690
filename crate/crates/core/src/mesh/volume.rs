use serde::{Deserialize, Serialize};

use super::{topology::edge_incidence, MeshError, Result, TriangleMesh, MM3_PER_ML};

/// Enclosed volume of a closed mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshVolume {
    /// Absolute enclosed volume in ml.
    pub volume_ml: f64,
    /// Signed volume in mm³; negative for inward-facing (clockwise) winding.
    pub signed_mm3: f64,
    /// Set when the winding is inverted; the absolute value is still reported.
    pub orientation_flipped: bool,
}

/// Divergence-theorem volume: sum of signed tetrahedra spanned by each
/// triangle and a reference point, in mm³. The reference is the vertex
/// centroid, which keeps the sum well conditioned far from the origin.
/// Does not check closedness.
pub fn signed_volume_mm3(mesh: &TriangleMesh) -> f64 {
    let origin = mesh.centroid();
    mesh.triangles
        .iter()
        .map(|&[a, b, c]| {
            let pa = mesh.vertices[a] - origin;
            let pb = mesh.vertices[b] - origin;
            let pc = mesh.vertices[c] - origin;
            pa.dot(&pb.cross(&pc))
        })
        .sum::<f64>()
        / 6.0
}

pub fn mesh_volume(mesh: &TriangleMesh) -> Result<MeshVolume> {
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    let boundary_edges = edge_incidence(mesh).values().filter(|&&c| c == 1).count();
    if boundary_edges > 0 {
        return Err(MeshError::NotClosed { boundary_edges });
    }
    let signed = signed_volume_mm3(mesh);
    let flipped = signed < 0.0;
    if flipped {
        log::warn!("mesh winding is inverted (signed volume {signed:.3} mm³); reporting |V|");
    }
    Ok(MeshVolume {
        volume_ml: signed.abs() / MM3_PER_ML,
        signed_mm3: signed,
        orientation_flipped: flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use nalgebra::{Rotation3, Vector3};
    use proptest::prelude::*;

    #[test]
    fn unit_cube_is_one_ml() {
        let v = mesh_volume(&synth::cube(10.0)).unwrap();
        assert!((v.volume_ml - 1.0).abs() < 1e-12);
        assert!(!v.orientation_flipped);
    }

    #[test]
    fn reversed_cube_warns() {
        let v = mesh_volume(&synth::cube(10.0).flipped()).unwrap();
        assert!((v.volume_ml - 1.0).abs() < 1e-12);
        assert!(v.orientation_flipped);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let mut cube = synth::cube(10.0);
        cube.triangles.pop();
        assert!(matches!(
            mesh_volume(&cube),
            Err(MeshError::NotClosed { boundary_edges: 3 })
        ));
    }

    #[test]
    fn icosphere_refinement_converges_to_ball() {
        // Inscribed polyhedra approach 4πr³/3 from below as the tessellation
        // refines; subdivision level 3 must be within 1%.
        let exact = 4.0 * std::f64::consts::PI * 1000.0 / 3.0 / 1000.0;
        let mut previous_error = f64::INFINITY;
        for level in 1..=4 {
            let v = mesh_volume(&synth::icosphere(10.0, level)).unwrap().volume_ml;
            let error = (exact - v) / exact;
            assert!(error > 0.0, "inscribed polyhedron exceeds the ball");
            assert!(error < previous_error);
            previous_error = error;
            if level == 3 {
                assert!(error < 0.01, "level 3 error {error}");
            }
        }
    }

    proptest! {
        #[test]
        fn rigid_invariance_and_cubic_scaling(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
            angle in 0.0f64..6.28,
            tx in -500.0f64..500.0, ty in -500.0f64..500.0, tz in -500.0f64..500.0,
            scale in 0.2f64..5.0,
        ) {
            let mesh = synth::icosphere(10.0, 2);
            let base = signed_volume_mm3(&mesh);
            let axis = Vector3::new(ax, ay, az + 2.0).normalize();
            let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
            let t = Vector3::new(tx, ty, tz);
            let moved = mesh.map_vertices(|p| rot * p + t);
            let rel = (signed_volume_mm3(&moved) - base).abs() / base;
            prop_assert!(rel < 1e-9, "rigid motion changed volume by {rel}");
            let scaled = mesh.map_vertices(|p| p * scale);
            let rel = (signed_volume_mm3(&scaled) - base * scale.powi(3)).abs() / (base * scale.powi(3));
            prop_assert!(rel < 1e-9);
        }
    }
}

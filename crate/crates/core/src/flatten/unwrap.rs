//! Naive unwrapping: each vertex goes to the proxy's developable (or
//! plate-carrée) chart by its angle around the axis.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{Point2, Point3};

use super::{FlatMap2D, FlattenError, ProxyFit, ProxyShape, Result};
use crate::mesh::TriangleMesh;

/// Angle of a vertex past the seam, in `[0, 2π)`.
fn seam_relative(theta: f64, seam: f64) -> f64 {
    let phi = (theta - seam).rem_euclid(TAU);
    if TAU - phi < 1e-12 {
        0.0
    } else {
        phi
    }
}

fn chart(fit: &ProxyFit, p: &Point3<f64>, phi: f64) -> Point2<f64> {
    let axis = &fit.axis;
    match fit.shape {
        ProxyShape::Cylinder { radius } => Point2::new(radius * phi, axis.height(p)),
        ProxyShape::Cone { apex, half_angle } => {
            let s = (p - apex).norm();
            let psi = phi * half_angle.sin();
            Point2::new(s * psi.cos(), s * psi.sin())
        }
        ProxyShape::Sphere { center, radius } => {
            let v = p - center;
            let len = v.norm();
            let lat = if len > 0.0 {
                (v.dot(&axis.direction) / len).clamp(-1.0, 1.0).asin()
            } else {
                0.0
            };
            Point2::new(radius * phi, radius * lat)
        }
    }
}

/// Cuts `mesh` along the meridian at `seam_angle` (radians, measured by
/// [`Axis::angle`](crate::mesh::Axis::angle)) and maps it onto the proxy's
/// chart. The result is oriented so that mesh triangles keep a positive
/// total signed area.
pub fn unwrap_on_proxy(mesh: &TriangleMesh, fit: &ProxyFit, seam_angle: f64) -> Result<FlatMap2D> {
    if mesh.triangles.is_empty() {
        return Err(FlattenError::EmptyMap);
    }
    if !seam_angle.is_finite() {
        return Err(FlattenError::InvalidArgument("seam angle must be finite".into()));
    }
    mesh.check_indices()?;
    let axis = &fit.axis;
    let pole_tol = 1e-9 * mesh.bbox().diagonal();
    let n = mesh.vertices.len();
    let phi: Vec<f64> = mesh.vertices.iter().map(|p| seam_relative(axis.angle(p), seam_angle)).collect();
    let pole: Vec<bool> = mesh.vertices.iter().map(|p| axis.radius(p) < pole_tol).collect();

    let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edge_use.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }

    let mut positions: Vec<Point2<f64>> =
        (0..n).map(|v| chart(fit, &mesh.vertices[v], phi[v])).collect();
    let mut source_vertex: Vec<usize> = (0..n).collect();
    let mut wrapped: HashMap<usize, usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(mesh.triangles.len());

    // A pole is where the seam ends, so it stays a single vertex. Plate
    // carrée sends it to a whole segment; it goes to the mean angle of the
    // triangles around it.
    let mut pole_sum = vec![(0.0f64, 0usize); n];
    let mut local = Vec::with_capacity(mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let ring: Vec<usize> = tri.iter().copied().filter(|&v| !pole[v]).collect();
        if ring.is_empty() {
            return Err(FlattenError::Degenerate(format!("triangle {t} lies on the axis")));
        }
        let lo = ring.iter().map(|&v| phi[v]).fold(f64::INFINITY, f64::min);
        let hi = ring.iter().map(|&v| phi[v]).fold(f64::NEG_INFINITY, f64::max);
        let straddles = hi - lo > PI;
        if straddles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if edge_use[&(a.min(b), a.max(b))] > 2 {
                    return Err(FlattenError::SeamCutFailed(format!(
                        "edge ({a}, {b}) of triangle {t} is non-manifold"
                    )));
                }
            }
        }
        let local_phi = |v: usize| if straddles && phi[v] < PI { phi[v] + TAU } else { phi[v] };
        let mean = ring.iter().map(|&v| local_phi(v)).sum::<f64>() / ring.len() as f64;
        for &v in tri.iter().filter(|&&v| pole[v]) {
            pole_sum[v].0 += mean;
            pole_sum[v].1 += 1;
        }
        local.push(straddles);
    }
    for v in 0..n {
        if pole[v] && pole_sum[v].1 > 0 {
            positions[v] = chart(fit, &mesh.vertices[v], pole_sum[v].0 / pole_sum[v].1 as f64);
        }
    }
    for (tri, &straddles) in mesh.triangles.iter().zip(&local) {
        let cut = tri.map(|v| {
            if straddles && !pole[v] && phi[v] < PI {
                *wrapped.entry(v).or_insert_with(|| {
                    positions.push(chart(fit, &mesh.vertices[v], phi[v] + TAU));
                    source_vertex.push(v);
                    positions.len() - 1
                })
            } else {
                v
            }
        });
        triangles.push(cut);
    }

    let signed: f64 = triangles
        .iter()
        .map(|t: &[usize; 3]| {
            let (a, b, c) = (positions[t[0]], positions[t[1]], positions[t[2]]);
            (b - a).perp(&(c - a))
        })
        .sum();
    if signed < 0.0 {
        for p in &mut positions {
            p.y = -p.y;
        }
    }

    let mut map = FlatMap2D {
        positions,
        triangles,
        source_vertex,
        seam_angle,
        per_triangle: Vec::new(),
    };
    map.update_distortion(mesh);
    Ok(map)
}

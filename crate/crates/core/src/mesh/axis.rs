//! Axis-of-revolution estimation from vertex normals.
//!
//! Every normal line of a surface of revolution meets the axis. For a
//! candidate axis through `c` with direction `d`, the moment
//! `(p − c) · (n × d)` of a normal line `(p, n)` vanishes exactly when the
//! two lines are coplanar, so the fit minimizes the sum of squared moments
//! by alternating two closed-form steps: the best point for a fixed
//! direction (a 2D linear least-squares problem in the plane orthogonal to
//! `d`) and the best direction for a fixed point (smallest eigenvector of
//! the scatter of `(p − c) × n`). One outlier pass then discards normal
//! lines further than twice the median distance from the axis, which keeps
//! handles and spouts from dragging the fit.

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::{MeshError, Result, TriangleMesh};
use crate::util::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Point on the axis (mm): the foot of the vertex centroid, or the
    /// normal focal point when the direction is ambiguous.
    pub point: Point3<f64>,
    /// Unit direction.
    pub direction: Vector3<f64>,
    /// RMS distance between the axis and the inlier normal lines (mm).
    pub fit_rms: f64,
    /// Every direction through `point` fits equally well (sphere-like input).
    pub ambiguous: bool,
    /// Fraction of vertices kept by the outlier pass.
    pub inlier_fraction: f64,
}

impl Axis {
    /// Axis through `point` along `direction` (normalized here).
    pub fn new(point: Point3<f64>, direction: Vector3<f64>) -> Self {
        Self {
            point,
            direction: direction.normalize(),
            fit_rms: 0.0,
            ambiguous: false,
            inlier_fraction: 1.0,
        }
    }

    /// Signed height of `p` along the axis.
    pub fn height(&self, p: &Point3<f64>) -> f64 {
        (p - self.point).dot(&self.direction)
    }

    /// Distance of `p` from the axis line.
    pub fn radius(&self, p: &Point3<f64>) -> f64 {
        let v = p - self.point;
        (v - self.direction * v.dot(&self.direction)).norm()
    }

    /// Orthonormal frame `(e1, e2, d)` with `e1 × e2 = d`. `e1` is built
    /// from the world axis least aligned with `d`, so the frame is a
    /// deterministic function of the direction.
    pub fn frame(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let d = self.direction;
        let helper = if d.x.abs() <= d.y.abs() && d.x.abs() <= d.z.abs() {
            Vector3::x()
        } else if d.y.abs() <= d.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let e1 = (helper - d * helper.dot(&d)).normalize();
        let e2 = d.cross(&e1);
        (e1, e2, d)
    }

    /// Angle of `p` around the axis in `(−π, π]`.
    pub fn angle(&self, p: &Point3<f64>) -> f64 {
        let (e1, e2, _) = self.frame();
        let v = p - self.point;
        v.dot(&e2).atan2(v.dot(&e1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisParams {
    /// `NotRevolutionLike` when fit rms exceeds this fraction of the bbox diagonal.
    pub max_rms_fraction: f64,
    /// Inlier threshold as a multiple of the median normal-line distance.
    pub outlier_factor: f64,
    pub max_iterations: usize,
}

impl Default for AxisParams {
    fn default() -> Self {
        Self {
            max_rms_fraction: 0.01,
            outlier_factor: 2.0,
            max_iterations: 200,
        }
    }
}

pub fn estimate_axis(mesh: &TriangleMesh) -> Result<Axis> {
    estimate_axis_with(mesh, &AxisParams::default())
}

struct NormalLine {
    p: Point3<f64>,
    n: Vector3<f64>,
}

pub fn estimate_axis_with(mesh: &TriangleMesh, params: &AxisParams) -> Result<Axis> {
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    let normals = mesh.vertex_normals();
    let lines: Vec<NormalLine> = mesh
        .vertices
        .iter()
        .zip(&normals)
        .filter(|(_, n)| n.norm_squared() > 0.5)
        .map(|(p, n)| NormalLine { p: *p, n: *n })
        .collect();
    if lines.len() < 3 {
        return Err(MeshError::Degenerate("fewer than 3 usable vertex normals".into()));
    }

    // Parallel normal lines carry no axis information.
    let scatter = lines
        .iter()
        .fold(Matrix3::zeros(), |acc, l| acc + l.n * l.n.transpose())
        / lines.len() as f64;
    let mut spread = SymmetricEigen::new(scatter).eigenvalues.as_slice().to_vec();
    spread.sort_by(|a, b| b.total_cmp(a));
    if spread[1] < 1e-6 {
        return Err(MeshError::Degenerate(
            "vertex normals are (nearly) parallel; planar input".into(),
        ));
    }

    let bbox = mesh.bbox();
    let diag = bbox.diagonal();
    let extent = bbox.extent();
    let d0 = if extent.x >= extent.y && extent.x >= extent.z {
        Vector3::x()
    } else if extent.y >= extent.z {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let centroid = mesh.centroid();

    let all: Vec<&NormalLine> = lines.iter().collect();
    let (c, d) = alternate(&all, centroid, d0, params.max_iterations, diag);

    let residuals: Vec<f64> = lines.iter().map(|l| line_distance(l, &c, &d)).collect();
    let threshold = (params.outlier_factor * median(&mut residuals.clone()).unwrap_or(0.0))
        .max(1e-9 * diag);
    let inliers: Vec<&NormalLine> = lines
        .iter()
        .zip(&residuals)
        .filter(|(_, &r)| r <= threshold)
        .map(|(l, _)| l)
        .collect();
    let (c, d) = if inliers.len() >= 3 && inliers.len() < lines.len() {
        alternate(&inliers, c, d, params.max_iterations, diag)
    } else {
        (c, d)
    };
    let used: &[&NormalLine] = if inliers.len() >= 3 { &inliers } else { &all };

    let fit_rms = (used
        .iter()
        .map(|l| line_distance(l, &c, &d).powi(2))
        .sum::<f64>()
        / used.len() as f64)
        .sqrt();

    let (ambiguous, focal) = ambiguity(used, &c);
    let point = if ambiguous {
        focal
    } else {
        c + d * (centroid - c).dot(&d)
    };
    let axis = Axis {
        point,
        direction: canonical_sign(d),
        fit_rms,
        ambiguous,
        inlier_fraction: used.len() as f64 / lines.len() as f64,
    };
    let limit = params.max_rms_fraction * diag;
    if fit_rms > limit {
        return Err(MeshError::NotRevolutionLike {
            rms: fit_rms,
            limit,
        });
    }
    Ok(axis)
}

fn canonical_sign(d: Vector3<f64>) -> Vector3<f64> {
    let imax = d.iamax();
    if d[imax] < 0.0 {
        -d
    } else {
        d
    }
}

/// Distance between the normal line of `l` and the axis `(c, d)`.
fn line_distance(l: &NormalLine, c: &Point3<f64>, d: &Vector3<f64>) -> f64 {
    let cross = l.n.cross(d);
    let v = l.p - c;
    let s = cross.norm();
    if s > 1e-9 {
        v.dot(&cross).abs() / s
    } else {
        (v - d * v.dot(d)).norm()
    }
}

fn alternate(
    lines: &[&NormalLine],
    mut c: Point3<f64>,
    mut d: Vector3<f64>,
    max_iterations: usize,
    diag: f64,
) -> (Point3<f64>, Vector3<f64>) {
    for _ in 0..max_iterations {
        let c_new = best_point(lines, &d, &c);
        let d_new = best_direction(lines, &c_new, &d);
        let moved = (c_new - c).norm() / diag.max(f64::MIN_POSITIVE);
        let turned = (d_new - d).norm();
        c = c_new;
        d = d_new;
        if moved < 1e-13 && turned < 1e-13 {
            break;
        }
    }
    (c, d)
}

/// Minimizes Σ ((p − c)·a)² with a = n × d over c in the plane through
/// `keep` orthogonal to `d`.
fn best_point(lines: &[&NormalLine], d: &Vector3<f64>, keep: &Point3<f64>) -> Point3<f64> {
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for l in lines {
        let a = l.n.cross(d);
        m += a * a.transpose();
        rhs += a * a.dot(&l.p.coords);
    }
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.amax();
    let mut x = Vector3::zeros();
    for k in 0..3 {
        let lambda = eig.eigenvalues[k];
        if lambda > 1e-12 * max {
            let v = eig.eigenvectors.column(k);
            x += v * (v.dot(&rhs) / lambda);
        }
    }
    let along = keep.coords.dot(d);
    Point3::from(x - d * x.dot(d) + d * along)
}

fn best_direction(lines: &[&NormalLine], c: &Point3<f64>, previous: &Vector3<f64>) -> Vector3<f64> {
    let s = lines.iter().fold(Matrix3::zeros(), |acc, l| {
        let w = (l.p - c).cross(&l.n);
        acc + w * w.transpose()
    });
    let eig = SymmetricEigen::new(s);
    let k = eig.eigenvalues.imin();
    let d: Vector3<f64> = eig.eigenvectors.column(k).into_owned().normalize();
    if d.dot(previous) < 0.0 {
        -d
    } else {
        d
    }
}

/// Detects sphere-like input (all normal lines through one point) and
/// returns that focal point.
fn ambiguity(lines: &[&NormalLine], c: &Point3<f64>) -> (bool, Point3<f64>) {
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let mut scatter = Matrix3::zeros();
    let mut scale = 0.0;
    for l in lines {
        let proj = Matrix3::identity() - l.n * l.n.transpose();
        m += proj;
        rhs += proj * l.p.coords;
        let w = (l.p - c).cross(&l.n);
        scatter += w * w.transpose();
        scale += (l.p - c).norm_squared();
    }
    let mut eig = SymmetricEigen::new(scatter).eigenvalues.as_slice().to_vec();
    eig.sort_by(|a, b| a.total_cmp(b));
    let ambiguous = scale > 0.0 && eig[1] / scale < 1e-4;
    let focal = m
        .try_inverse()
        .map(|inv| Point3::from(inv * rhs))
        .unwrap_or(*c);
    (ambiguous, focal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use nalgebra::{Rotation3, Unit};

    fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        a.dot(b).abs().min(1.0).acos()
    }

    #[test]
    fn cylinder_along_z() {
        let mesh = synth::cylinder(20.0, 50.0, 64, 10, false);
        let axis = estimate_axis(&mesh).unwrap();
        assert!(angle_between(&axis.direction, &Vector3::z()) < 1e-3);
        assert!(axis.radius(&Point3::origin()) < 1e-6);
        assert!(!axis.ambiguous);
        assert!((axis.direction.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn capped_cylinder_ignores_cap_normals() {
        let mesh = synth::cylinder(20.0, 50.0, 64, 10, true);
        let axis = estimate_axis(&mesh).unwrap();
        assert!(angle_between(&axis.direction, &Vector3::z()) < 1e-3);
    }

    #[test]
    fn sphere_is_ambiguous_but_centered() {
        let center = Vector3::new(3.0, -2.0, 7.0);
        let mesh = synth::icosphere(10.0, 3).map_vertices(|p| p + center);
        let axis = estimate_axis(&mesh).unwrap();
        assert!(axis.ambiguous);
        assert!((axis.point.coords - center).norm() < 1e-3 * 10.0);
    }

    #[test]
    fn flat_grid_is_degenerate() {
        let mesh = synth::grid(10, 10, 1.0);
        assert!(matches!(estimate_axis(&mesh), Err(MeshError::Degenerate(_))));
    }

    #[test]
    fn tilted_vessel_with_handle() {
        let profile: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let z = i as f64 * 2.5;
                (z, 25.0 + 8.0 * (z / 100.0 * std::f64::consts::PI).sin())
            })
            .collect();
        let body = synth::revolve(&profile, 96, false);
        let handle = synth::icosphere(6.0, 2).map_vertices(|p| p + Vector3::new(36.0, 0.0, 55.0));
        let mesh = body.merged(&handle);
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, 2.0, 0.5)), 0.7);
        let moved = mesh.map_vertices(|p| rot * p + Vector3::new(5.0, 6.0, 7.0));
        let axis = estimate_axis(&moved).unwrap();
        let truth = rot * Vector3::z();
        assert!(angle_between(&axis.direction, &truth) < 1e-3, "{:?}", axis);
        assert!(axis.inlier_fraction < 1.0);
    }

    #[test]
    fn non_revolution_shape_is_rejected() {
        let mesh = synth::blob(30.0, 3, 7);
        assert!(matches!(
            estimate_axis(&mesh),
            Err(MeshError::NotRevolutionLike { .. })
        ));
    }
}

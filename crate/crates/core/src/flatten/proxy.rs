//! Least-squares cylinder, cone and sphere proxies sharing a given axis.

use nalgebra::{Matrix2, Point3, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use super::{FlattenError, Result};
use crate::mesh::{Axis, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxyKind {
    Cylinder,
    Cone,
    Sphere,
}

impl ProxyKind {
    pub const ALL: [ProxyKind; 3] = [Self::Cylinder, Self::Cone, Self::Sphere];
}

impl std::str::FromStr for ProxyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cyl" | "cylinder" => Ok(Self::Cylinder),
            "cone" => Ok(Self::Cone),
            "sphere" => Ok(Self::Sphere),
            other => Err(format!("unknown proxy `{other}` (cyl, cone, sphere)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProxyShape {
    Cylinder { radius: f64 },
    Cone { apex: Point3<f64>, half_angle: f64 },
    Sphere { center: Point3<f64>, radius: f64 },
}

impl ProxyShape {
    pub fn kind(&self) -> ProxyKind {
        match self {
            Self::Cylinder { .. } => ProxyKind::Cylinder,
            Self::Cone { .. } => ProxyKind::Cone,
            Self::Sphere { .. } => ProxyKind::Sphere,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyFit {
    pub shape: ProxyShape,
    pub axis: Axis,
    /// RMS distance of the mesh vertices from the proxy surface (mm).
    pub rms: f64,
}

/// Fits the requested kind, or all three and returns the one with the
/// smallest rms (ties go to the simpler shape).
pub fn fit_proxy(mesh: &TriangleMesh, axis: &Axis, kind: Option<ProxyKind>) -> Result<ProxyFit> {
    if let Some(kind) = kind {
        return fit_proxy_kind(mesh, axis, kind);
    }
    let mut best: Option<ProxyFit> = None;
    let mut first_err = None;
    for kind in ProxyKind::ALL {
        match fit_proxy_kind(mesh, axis, kind) {
            Ok(fit) => {
                if best.map_or(true, |b| fit.rms < b.rms) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                log::debug!("{kind:?} proxy rejected: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("three kinds tried"))
}

/// `(height, radius)` of every vertex relative to the axis.
fn meridian_samples(mesh: &TriangleMesh, axis: &Axis) -> Result<Vec<(f64, f64)>> {
    if mesh.vertices.is_empty() {
        return Err(FlattenError::Degenerate("empty mesh".into()));
    }
    if !(axis.direction.norm() - 1.0).abs().lt(&1e-9) {
        return Err(FlattenError::InvalidArgument("axis direction is not unit length".into()));
    }
    Ok(mesh.vertices.iter().map(|p| (axis.height(p), axis.radius(p))).collect())
}

pub fn fit_proxy_kind(mesh: &TriangleMesh, axis: &Axis, kind: ProxyKind) -> Result<ProxyFit> {
    let samples = meridian_samples(mesh, axis)?;
    let diag = mesh.bbox().diagonal();
    let n = samples.len() as f64;
    let (shape, rms) = match kind {
        ProxyKind::Cylinder => {
            let radius = samples.iter().map(|s| s.1).sum::<f64>() / n;
            if !(radius > 0.0) {
                return Err(FlattenError::Degenerate("all vertices lie on the axis".into()));
            }
            let rms = (samples.iter().map(|s| (s.1 - radius).powi(2)).sum::<f64>() / n).sqrt();
            (ProxyShape::Cylinder { radius }, rms)
        }
        ProxyKind::Cone => fit_cone(&samples, axis, diag)?,
        ProxyKind::Sphere => fit_sphere(&samples, axis)?,
    };
    Ok(ProxyFit {
        shape,
        axis: *axis,
        rms,
    })
}

/// Total least squares line through the meridian samples; the cone's
/// generator.
fn fit_cone(samples: &[(f64, f64)], axis: &Axis, diag: f64) -> Result<(ProxyShape, f64)> {
    let n = samples.len() as f64;
    let mean = samples
        .iter()
        .fold(Vector2::zeros(), |acc, s| acc + Vector2::new(s.0, s.1))
        / n;
    let cov = samples.iter().fold(Matrix2::zeros(), |acc, s| {
        let d = Vector2::new(s.0, s.1) - mean;
        acc + d * d.transpose()
    }) / n;
    let eig = SymmetricEigen::new(cov);
    let major = eig.eigenvalues.imax();
    let dir = eig.eigenvectors.column(major).into_owned();
    let residual = eig.eigenvalues[1 - major].max(0.0);
    let (dh, dr) = (dir[0], dir[1]);
    let half_angle = dr.abs().atan2(dh.abs());
    if half_angle < 1e-4 {
        return Err(FlattenError::FitDiverged(format!(
            "cone generator parallel to the axis (half angle {half_angle:.2e} rad)"
        )));
    }
    if half_angle > std::f64::consts::FRAC_PI_2 - 1e-4 {
        return Err(FlattenError::FitDiverged("cone degenerates to a disc".into()));
    }
    let apex_h = mean[0] - mean[1] * dh / dr;
    if (apex_h - mean[0]).abs() > 1e3 * diag {
        return Err(FlattenError::FitDiverged(format!(
            "apex {:.3e} mm from the mesh",
            (apex_h - mean[0]).abs()
        )));
    }
    let apex = axis.point + axis.direction * apex_h;
    Ok((ProxyShape::Cone { apex, half_angle }, residual.sqrt()))
}

/// Sphere centered on the axis: algebraic fit, then Gauss-Newton on the
/// geometric residual.
fn fit_sphere(samples: &[(f64, f64)], axis: &Axis) -> Result<(ProxyShape, f64)> {
    // h² + ρ² = 2 h t + k with k = R² − t²
    let mut ata = Matrix2::zeros();
    let mut atb = Vector2::zeros();
    for &(h, r) in samples {
        let a = Vector2::new(2.0 * h, 1.0);
        ata += a * a.transpose();
        atb += a * (h * h + r * r);
    }
    let sol = ata
        .try_inverse()
        .map(|inv| inv * atb)
        .ok_or_else(|| FlattenError::FitDiverged("all vertices at one height".into()))?;
    let (mut t, k) = (sol[0], sol[1]);
    let r2 = k + t * t;
    if !(r2 > 0.0) {
        return Err(FlattenError::FitDiverged("negative squared radius".into()));
    }
    let mut radius = r2.sqrt();
    for _ in 0..50 {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for &(h, r) in samples {
            let dist = ((h - t).powi(2) + r * r).sqrt();
            if dist == 0.0 {
                continue;
            }
            let res = dist - radius;
            let j = Vector2::new(-(h - t) / dist, -1.0);
            jtj += j * j.transpose();
            jtr += j * res;
        }
        let Some(step) = jtj.try_inverse().map(|inv| -(inv * jtr)) else {
            break;
        };
        t += step[0];
        radius += step[1];
        if step.norm() < 1e-12 * radius.abs().max(1.0) {
            break;
        }
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(FlattenError::FitDiverged("sphere radius collapsed".into()));
    }
    let rms = (samples
        .iter()
        .map(|&(h, r)| (((h - t).powi(2) + r * r).sqrt() - radius).powi(2))
        .sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    let center = axis.point + axis.direction * t;
    Ok((ProxyShape::Sphere { center, radius }, rms))
}

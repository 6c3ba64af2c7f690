//! Rollouts of painted vessel surfaces: proxy surfaces of revolution, naive
//! unwrapping around the axis, per-triangle distortion and Elastic
//! Flattening.
//!
//! A [`FlatMap2D`] lives on a *cut* copy of the source mesh: vertices on
//! triangles that straddle the seam meridian are duplicated, while a vertex
//! on the axis (a pole) ends the cut and stays single. `source_vertex` maps
//! every cut vertex back to the source, and triangle `t` of the map is
//! triangle `t` of the source.

mod elastic;
mod proxy;
mod render;
mod unwrap;

pub use elastic::{edge_energy, elastic_flatten, ElasticParams, ElasticStats};
pub use proxy::{fit_proxy, fit_proxy_kind, ProxyFit, ProxyKind, ProxyShape};
pub use render::{
    render_flatmap, save_render, write_distortion_csv, write_flatmap_obj, HeatMetric, RenderSidecar,
};
pub use unwrap::unwrap_on_proxy;

use nalgebra::{Matrix2, Point2, Point3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{MeshError, TriangleMesh};

#[derive(Debug, Error)]
pub enum FlattenError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("proxy fit diverged: {0}")]
    FitDiverged(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("cannot cut along the seam: {0}")]
    SeamCutFailed(String),
    #[error("energy is not finite; check the initial map")]
    NonFiniteEnergy,
    #[error("flat map does not belong to this mesh: {0}")]
    Mismatch(String),
    #[error("flat map has no triangles")]
    EmptyMap,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = FlattenError> = std::result::Result<T, E>;

/// Singular values of the linear map from a 3D triangle to its image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSample {
    pub sigma1: f64,
    pub sigma2: f64,
    /// `sigma1 / sigma2`; 1 for a conformal triangle.
    pub angular: f64,
    /// `sigma1 · sigma2`; 1 for an area-preserving triangle.
    pub areal: f64,
}

impl DistortionSample {
    /// Singular values of the 3D→2D map for one triangle. A zero-area
    /// source triangle yields all-zero values with `angular = 1`.
    pub fn from_triangle(p: [Point3<f64>; 3], u: [Point2<f64>; 3]) -> Self {
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let normal = e1.cross(&e2);
        if normal.norm() < crate::mesh::ZERO_AREA_TOLERANCE || e1.norm() == 0.0 {
            return Self {
                sigma1: 0.0,
                sigma2: 0.0,
                angular: 1.0,
                areal: 0.0,
            };
        }
        let ax = e1.normalize();
        let ay = normal.normalize().cross(&ax);
        let q = Matrix2::new(e1.dot(&ax), e2.dot(&ax), e1.dot(&ay), e2.dot(&ay));
        let d = Matrix2::new(u[1].x - u[0].x, u[2].x - u[0].x, u[1].y - u[0].y, u[2].y - u[0].y);
        let j = d * q.try_inverse().expect("non-degenerate source triangle");
        let (sigma1, sigma2) = singular_values_2x2(&j);
        Self {
            sigma1,
            sigma2,
            angular: if sigma2 > 0.0 { sigma1 / sigma2 } else { f64::INFINITY },
            areal: sigma1 * sigma2,
        }
    }
}

/// Closed-form singular values of a 2×2 matrix, largest first.
fn singular_values_2x2(m: &Matrix2<f64>) -> (f64, f64) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = (e * e + h * h).sqrt();
    let r = (f * f + g * g).sqrt();
    (q + r, (q - r).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatMap2D {
    /// Planar position (mm) of every cut vertex.
    pub positions: Vec<Point2<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Source-mesh vertex of every cut vertex.
    pub source_vertex: Vec<usize>,
    /// Meridian (radians around the axis) along which the surface is cut.
    pub seam_angle: f64,
    pub per_triangle: Vec<DistortionSample>,
}

impl FlatMap2D {
    /// Recomputes `per_triangle` against the source mesh.
    pub fn update_distortion(&mut self, mesh: &TriangleMesh) {
        self.per_triangle = (0..self.triangles.len())
            .map(|t| {
                let tri = self.triangles[t];
                DistortionSample::from_triangle(
                    tri.map(|v| mesh.vertices[self.source_vertex[v]]),
                    tri.map(|v| self.positions[v]),
                )
            })
            .collect();
    }

    /// Checks that this map is a cut of `mesh`.
    pub fn check_against(&self, mesh: &TriangleMesh) -> Result<()> {
        if self.triangles.len() != mesh.triangles.len() {
            return Err(FlattenError::Mismatch(format!(
                "{} map triangles vs {} mesh triangles",
                self.triangles.len(),
                mesh.triangles.len()
            )));
        }
        if self.positions.len() != self.source_vertex.len() {
            return Err(FlattenError::Mismatch("positions and source_vertex differ in length".into()));
        }
        if self.source_vertex.iter().any(|&s| s >= mesh.vertices.len()) {
            return Err(FlattenError::Mismatch("source vertex out of range".into()));
        }
        for (t, (cut, src)) in self.triangles.iter().zip(&mesh.triangles).enumerate() {
            if cut.iter().any(|&v| v >= self.positions.len())
                || cut.map(|v| self.source_vertex[v]) != *src
            {
                return Err(FlattenError::Mismatch(format!("triangle {t} does not match the mesh")));
            }
        }
        Ok(())
    }

    pub fn max_angular(&self) -> f64 {
        self.per_triangle.iter().map(|d| d.angular).fold(0.0, f64::max)
    }

    /// Largest `|σ − 1|` over both singular values of every triangle.
    pub fn max_sigma_deviation(&self) -> f64 {
        self.per_triangle
            .iter()
            .map(|d| (d.sigma1 - 1.0).abs().max((d.sigma2 - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    /// `(min, max)` corner of the planar bounding box.
    pub fn bounds(&self) -> (Point2<f64>, Point2<f64>) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Largest relative edge-length error `| ‖u_i − u_j‖ / L_ij − 1 |`.
    pub fn max_length_distortion(&self, mesh: &TriangleMesh) -> f64 {
        elastic::cut_edges(self, mesh)
            .iter()
            .filter(|e| e.2 > 0.0)
            .map(|&(i, j, l)| ((self.positions[i] - self.positions[j]).norm() / l - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Applies a planar rigid motion or any other map to every position.
    pub fn map_positions(&self, f: impl FnMut(&Point2<f64>) -> Point2<f64>) -> Self {
        Self {
            positions: self.positions.iter().map(f).collect(),
            ..self.clone()
        }
    }
}

//! Indexed triangle meshes and the geometric primitives shared by every
//! downstream pipeline.
//!
//! Coordinates are millimeters throughout; volumes are reported in
//! milliliters (1 ml = 1000 mm³).

mod axis;
mod io;
mod profile;
mod topology;
mod volume;

pub use axis::{estimate_axis, estimate_axis_with, Axis, AxisParams};
pub use io::{load_mesh, load_obj, load_ply, read_obj, read_ply, write_obj, write_ply};
pub use profile::{extract_profile, Profile, ProfileSample};
pub use topology::{boundary_loops, validate_mesh, Aabb, MeshReport};
pub use volume::{mesh_volume, signed_volume_mm3, MeshVolume};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Triangles with an area below this are flagged as degenerate (mm²).
pub const ZERO_AREA_TOLERANCE: f64 = 1e-12;

/// Cubic millimeters per milliliter.
pub const MM3_PER_ML: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("PLY format error at byte offset {offset}: {message}")]
    PlyFormat { offset: usize, message: String },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("triangle {triangle} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("mesh is empty")]
    Empty,
    #[error("mesh is not closed ({boundary_edges} boundary edges)")]
    NotClosed { boundary_edges: usize },
    #[error("mesh is not revolution-like: axis fit rms {rms:.4} mm exceeds limit {limit:.4} mm")]
    NotRevolutionLike { rms: f64, limit: f64 },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("every profile bin is empty")]
    AllBinsEmpty,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = MeshError> = std::result::Result<T, E>;

/// Indexed triangle surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Optional per-vertex RGB color, channels in `[0, 1]`.
    pub colors: Option<Vec<[f32; 3]>>,
}

impl TriangleMesh {
    /// Builds a mesh, checking that every index is in range.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            colors: None,
        };
        mesh.check_indices()?;
        Ok(mesh)
    }

    pub fn with_colors(mut self, colors: Vec<[f32; 3]>) -> Result<Self> {
        if colors.len() != self.vertices.len() {
            return Err(MeshError::InvalidArgument(format!(
                "{} colors for {} vertices",
                colors.len(),
                self.vertices.len()
            )));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn check_indices(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &index in tri {
                if index >= n {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        vertex_count: n,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_points(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal; its norm is twice the triangle area.
    pub fn face_normal_scaled(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_points(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_normal_scaled(t).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted vertex normals, normalized. Vertices without incident
    /// area get a zero vector.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.face_normal_scaled(t);
            for &v in tri {
                normals[v] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn centroid(&self) -> Point3<f64> {
        if self.vertices.is_empty() {
            return Point3::origin();
        }
        let sum = self
            .vertices
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.vertices.len() as f64)
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            colors: self.colors.clone(),
        }
    }

    /// Reverses the winding of every triangle.
    pub fn flipped(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            colors: self.colors.clone(),
        }
    }

    /// Concatenates two meshes into one vertex/index space.
    pub fn merged(&self, other: &Self) -> Self {
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(
            other
                .triangles
                .iter()
                .map(|&[a, b, c]| [a + offset, b + offset, c + offset]),
        );
        let colors = match (&self.colors, &other.colors) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Self {
            vertices,
            triangles,
            colors,
        }
    }

    /// Indices of triangles whose area is below [`ZERO_AREA_TOLERANCE`].
    pub fn degenerate_triangles(&self) -> Vec<usize> {
        (0..self.triangles.len())
            .filter(|&t| self.triangle_area(t) < ZERO_AREA_TOLERANCE)
            .collect()
    }
}

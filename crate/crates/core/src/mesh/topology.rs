use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::TriangleMesh;
use crate::util::DisjointSet;

/// Axis-aligned bounding box in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Self {
        let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for p in points {
            any = true;
            min = min.inf(p);
            max = max.sup(p);
        }
        if !any {
            return Self {
                min: Point3::origin(),
                max: Point3::origin(),
            };
        }
        Self { min, max }
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }
}

/// Topological findings about a mesh. Never an error: the report carries
/// the problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub triangle_count: usize,
    /// Every edge is shared by at most two triangles.
    pub is_manifold: bool,
    /// No boundary edges.
    pub is_closed: bool,
    pub boundary_edge_count: usize,
    pub non_manifold_edge_count: usize,
    pub connected_component_count: usize,
    /// Triangles with area below the zero-area tolerance (flagged, not removed).
    pub degenerate_triangle_count: usize,
    /// V − E + F over the referenced vertices.
    pub euler_characteristic: i64,
    pub bbox: Aabb,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Undirected edge → number of incident triangles.
pub(crate) fn edge_incidence(mesh: &TriangleMesh) -> HashMap<(usize, usize), u32> {
    let mut edges = HashMap::with_capacity(mesh.triangles.len() * 3 / 2);
    for &[a, b, c] in &mesh.triangles {
        for (u, v) in [(a, b), (b, c), (c, a)] {
            *edges.entry(edge_key(u, v)).or_insert(0) += 1;
        }
    }
    edges
}

pub fn validate_mesh(mesh: &TriangleMesh) -> MeshReport {
    let edges = edge_incidence(mesh);
    let boundary_edge_count = edges.values().filter(|&&c| c == 1).count();
    let non_manifold_edge_count = edges.values().filter(|&&c| c > 2).count();

    let mut used = vec![false; mesh.vertices.len()];
    let mut sets = DisjointSet::new(mesh.vertices.len());
    for &[a, b, c] in &mesh.triangles {
        used[a] = true;
        used[b] = true;
        used[c] = true;
        sets.union(a, b);
        sets.union(b, c);
    }
    let mut roots: Vec<usize> = (0..mesh.vertices.len())
        .filter(|&v| used[v])
        .map(|v| sets.find(v))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    let used_count = used.iter().filter(|&&u| u).count();

    MeshReport {
        vertex_count: mesh.vertices.len(),
        edge_count: edges.len(),
        triangle_count: mesh.triangles.len(),
        is_manifold: non_manifold_edge_count == 0,
        is_closed: boundary_edge_count == 0 && !mesh.triangles.is_empty(),
        boundary_edge_count,
        non_manifold_edge_count,
        connected_component_count: roots.len(),
        degenerate_triangle_count: mesh.degenerate_triangles().len(),
        euler_characteristic: used_count as i64 - edges.len() as i64
            + mesh.triangles.len() as i64,
        bbox: mesh.bbox(),
    }
}

/// Boundary loops as vertex sequences, oriented consistently with the
/// triangles that own the boundary edges.
pub fn boundary_loops(mesh: &TriangleMesh) -> Vec<Vec<usize>> {
    let incidence = edge_incidence(mesh);
    // directed boundary edges a -> b, in triangle order
    let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut starts = Vec::new();
    for &[a, b, c] in &mesh.triangles {
        for (u, v) in [(a, b), (b, c), (c, a)] {
            if incidence[&edge_key(u, v)] == 1 {
                next.entry(u).or_default().push(v);
                starts.push(u);
            }
        }
    }
    let mut loops = Vec::new();
    for start in starts {
        if next.get(&start).map_or(true, |v| v.is_empty()) {
            continue;
        }
        let mut current = start;
        let mut lp = Vec::new();
        loop {
            let Some(targets) = next.get_mut(&current) else { break };
            let Some(v) = targets.pop() else { break };
            lp.push(current);
            current = v;
            if current == start {
                break;
            }
        }
        if lp.len() >= 3 {
            loops.push(lp);
        }
    }
    loops
}

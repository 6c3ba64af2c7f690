//! Elastic Flattening: relax a flat map toward the 3D edge lengths with
//! Gauss-Seidel stress-majorization sweeps.

use std::collections::BTreeSet;

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::{FlatMap2D, FlattenError, Result};
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    pub max_iters: usize,
    /// Fraction of the way each vertex moves toward its majorizer minimum,
    /// in `(0, 1]`.
    pub step: f64,
    /// Stop once no vertex moves more than `eps` times the 3D bbox diagonal.
    pub eps: f64,
}

impl Default for ElasticParams {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            step: 0.5,
            eps: 1e-6,
        }
    }
}

impl ElasticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(FlattenError::InvalidArgument(format!("step {} not in (0, 1]", self.step)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(FlattenError::InvalidArgument(format!("eps {} must be finite and >= 0", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticStats {
    /// Completed sweeps.
    pub iterations: usize,
    /// Energy before the first sweep and after every sweep.
    pub energy_history: Vec<f64>,
    pub converged: bool,
}

/// A vertex move cut below `2^-MAX_HALVINGS` of its full step is dropped.
const MAX_HALVINGS: i32 = 12;

/// Largest fraction `2^-k` of `delta` (k ≤ `MAX_HALVINGS`) that moves
/// `p` without collapsing or inverting any triangle `(p, a, b)` whose
/// signed area currently has the sign `orientation`; zero when there is
/// none. Already inverted triangles are free to unfold.
fn safe_fraction(
    u: &[Point2<f64>],
    opposite: &[(usize, usize)],
    orientation: f64,
    p: Point2<f64>,
    delta: Vector2<f64>,
) -> f64 {
    let mut limit = f64::INFINITY;
    for &(a, b) in opposite {
        let (pa, pb) = (u[a], u[b]);
        let area = orientation * (pa - p).perp(&(pb - p));
        let rate = orientation * (pb - pa).perp(&delta);
        if area > 0.0 && rate < 0.0 {
            limit = limit.min(-area / rate);
        }
    }
    // area(p + s·delta) is linear in s, so the bound is exact; the margin
    // keeps rounding from landing a vertex on an opposite edge.
    let limit = limit * (1.0 - 1e-6);
    let mut s = 1.0;
    for _ in 0..=MAX_HALVINGS {
        if s < limit {
            return s;
        }
        s *= 0.5;
    }
    0.0
}

/// Unique edges of the cut mesh as `(i, j, rest_length)` with `i < j`,
/// sorted.
pub(crate) fn cut_edges(map: &FlatMap2D, mesh: &TriangleMesh) -> Vec<(usize, usize, f64)> {
    let mut set = BTreeSet::new();
    for t in &map.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
    }
    set.into_iter()
        .map(|(a, b)| {
            let l = (mesh.vertices[map.source_vertex[a]] - mesh.vertices[map.source_vertex[b]]).norm();
            (a, b, l)
        })
        .collect()
}

fn energy_of(positions: &[Point2<f64>], edges: &[(usize, usize, f64)]) -> f64 {
    edges
        .iter()
        .map(|&(a, b, l)| ((positions[a] - positions[b]).norm() - l).powi(2))
        .sum()
}

/// `Σ (‖u_i − u_j‖ − L_ij)²` over the edges of the cut mesh, with `L_ij`
/// the 3D edge length.
pub fn edge_energy(map: &FlatMap2D, mesh: &TriangleMesh) -> Result<f64> {
    map.check_against(mesh)?;
    Ok(energy_of(&map.positions, &cut_edges(map, mesh)))
}

/// Relaxes `init` so planar edge lengths approach the 3D ones. Every sweep
/// moves each vertex (in index order) part of the way toward the minimum
/// of a quadratic majorizer of its local energy, so the total energy never
/// increases. A move that would invert a triangle agreeing with the map's
/// overall orientation is halved until it does not, so folds can unfold
/// but never form.
pub fn elastic_flatten(
    mesh: &TriangleMesh,
    init: &FlatMap2D,
    params: &ElasticParams,
) -> Result<(FlatMap2D, ElasticStats)> {
    params.validate()?;
    init.check_against(mesh)?;
    if init.triangles.is_empty() {
        return Err(FlattenError::EmptyMap);
    }
    let edges = cut_edges(init, mesh);
    let n = init.positions.len();
    let mut offsets = vec![0usize; n + 1];
    for &(a, b, _) in &edges {
        offsets[a + 1] += 1;
        offsets[b + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut adj = vec![(0usize, 0.0f64); offsets[n]];
    for &(a, b, l) in &edges {
        adj[fill[a]] = (b, l);
        fill[a] += 1;
        adj[fill[b]] = (a, l);
        fill[b] += 1;
    }

    let mut tri_offsets = vec![0usize; n + 1];
    for t in &init.triangles {
        for &v in t {
            tri_offsets[v + 1] += 1;
        }
    }
    for i in 0..n {
        tri_offsets[i + 1] += tri_offsets[i];
    }
    let mut tri_fill = tri_offsets.clone();
    let mut opposite = vec![(0usize, 0usize); tri_offsets[n]];
    for t in &init.triangles {
        for k in 0..3 {
            let v = t[k];
            opposite[tri_fill[v]] = (t[(k + 1) % 3], t[(k + 2) % 3]);
            tri_fill[v] += 1;
        }
    }

    let mut u = init.positions.clone();
    let total_area: f64 = init
        .triangles
        .iter()
        .map(|t| (u[t[1]] - u[t[0]]).perp(&(u[t[2]] - u[t[0]])))
        .sum();
    let orientation = if total_area < 0.0 { -1.0 } else { 1.0 };
    let tolerance = params.eps * mesh.bbox().diagonal();
    let e0 = energy_of(&u, &edges);
    if !e0.is_finite() {
        return Err(FlattenError::NonFiniteEnergy);
    }
    let mut history = vec![e0];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iters {
        let mut max_move = 0.0f64;
        for i in 0..n {
            let nbrs = &adj[offsets[i]..offsets[i + 1]];
            if nbrs.is_empty() {
                continue;
            }
            let ui = u[i];
            let mut target = Vector2::zeros();
            for &(j, l) in nbrs {
                let d = ui - u[j];
                let len = d.norm();
                target += u[j].coords;
                if len > 0.0 {
                    target += d * (l / len);
                }
            }
            target /= nbrs.len() as f64;
            let mut delta = (target - ui.coords) * params.step;
            delta *= safe_fraction(&u, &opposite[tri_offsets[i]..tri_offsets[i + 1]], orientation, ui, delta);
            u[i] += delta;
            max_move = max_move.max(delta.norm());
        }
        iterations += 1;
        let e = energy_of(&u, &edges);
        if !e.is_finite() {
            return Err(FlattenError::NonFiniteEnergy);
        }
        history.push(e);
        if max_move < tolerance {
            converged = true;
            break;
        }
    }

    let mut map = FlatMap2D {
        positions: u,
        ..init.clone()
    };
    map.update_distortion(mesh);
    Ok((
        map,
        ElasticStats {
            iterations,
            energy_history: history,
            converged,
        },
    ))
}

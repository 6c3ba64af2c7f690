//! Similarity registration of meshes (scale, rotation, translation) and
//! detection of mould series: copies that shrink a little with every
//! re-moulding.

use std::collections::BTreeMap;

use rstar::primitives::GeomWithData;
use rstar::RTree;
use nalgebra::{Matrix3, Point3, Rotation3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriangleMesh;
use crate::util::DisjointSet;

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("{0} mesh is empty")]
    EmptyMesh(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = RegistrationError> = std::result::Result<T, E>;

/// `x ↦ scale · rotation · x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords * self.scale + self.translation)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation * self.scale + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            scale: 1.0 / self.scale,
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
        }
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    pub fn apply_mesh(&self, mesh: &TriangleMesh) -> TriangleMesh {
        mesh.map_vertices(|p| self.apply(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationParams {
    pub max_iters: usize,
    /// Fraction of correspondences kept (closest first) in each direction.
    pub inlier_fraction: f64,
    /// Converged when rms changes by less than this fraction of the target
    /// bbox diagonal.
    pub tolerance: f64,
    /// Estimate a scale factor; otherwise the transform is rigid.
    pub estimate_scale: bool,
    /// Points sampled per mesh (vertices and triangle centroids, strided).
    pub max_samples: usize,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            inlier_fraction: 0.8,
            tolerance: 1e-9,
            estimate_scale: true,
            max_samples: 2000,
        }
    }
}

impl RegistrationParams {
    fn validate(&self) -> Result<()> {
        if !(self.inlier_fraction > 0.0 && self.inlier_fraction <= 1.0) {
            return Err(RegistrationError::InvalidArgument(format!(
                "inlier_fraction {} not in (0, 1]",
                self.inlier_fraction
            )));
        }
        if self.max_iters == 0 || self.max_samples < 4 || !(self.tolerance >= 0.0) {
            return Err(RegistrationError::InvalidArgument(
                "max_iters ≥ 1, max_samples ≥ 4 and tolerance ≥ 0 are required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// Maps the source onto the target.
    pub transform: SimilarityTransform,
    /// RMS over the kept correspondences of both directions (mm).
    pub rms: f64,
    pub inlier_fraction: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Distance from every transformed source vertex to the nearest target
    /// sample (mm).
    pub distance_map: Vec<f64>,
}

/// Umeyama's closed-form least-squares similarity `dst ≈ s·R·src + t`.
pub fn umeyama(src: &[Point3<f64>], dst: &[Point3<f64>], with_scale: bool) -> SimilarityTransform {
    assert_eq!(src.len(), dst.len());
    let n = src.len() as f64;
    let mu_s = src.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mu_d = dst.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mut cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s.coords - mu_s, d.coords - mu_d);
        cov += b * a.transpose();
        var_s += a.norm_squared();
    }
    cov /= n;
    var_s /= n;
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let mut signs = Vector3::new(1.0, 1.0, 1.0);
    if (u.determinant() * v_t.determinant()) < 0.0 {
        signs[2] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&signs) * v_t;
    let scale = if with_scale && var_s > 0.0 {
        svd.singular_values.component_mul(&signs).sum() / var_s
    } else {
        1.0
    };
    SimilarityTransform {
        scale,
        rotation,
        translation: mu_d - rotation * mu_s * scale,
    }
}

/// Vertices then triangle centroids, strided down to `max` points.
fn sample_points(mesh: &TriangleMesh, max: usize) -> Vec<Point3<f64>> {
    let mut all = mesh.vertices.clone();
    all.extend((0..mesh.triangles.len()).map(|t| {
        let [a, b, c] = mesh.triangle_points(t);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }));
    if all.len() <= max {
        return all;
    }
    let stride = all.len() as f64 / max as f64;
    (0..max).map(|k| all[(k as f64 * stride) as usize]).collect()
}

type PointTree = RTree<GeomWithData<[f64; 3], usize>>;

fn tree_of(points: &[Point3<f64>]) -> PointTree {
    RTree::bulk_load(
        points
            .iter()
            .enumerate()
            .map(|(i, p)| GeomWithData::new([p.x, p.y, p.z], i))
            .collect(),
    )
}

/// Index of the nearest point and its squared distance.
fn nearest(tree: &PointTree, p: &Point3<f64>) -> (usize, f64) {
    let hit = tree.nearest_neighbor(&[p.x, p.y, p.z]).expect("tree is not empty");
    let q = hit.geom();
    let d2 = (q[0] - p.x).powi(2) + (q[1] - p.y).powi(2) + (q[2] - p.z).powi(2);
    (hit.data, d2)
}

/// Centroid, principal axes (columns, largest variance first, right-handed)
/// and rms radius.
fn principal_frame(points: &[Point3<f64>]) -> (Vector3<f64>, Matrix3<f64>, f64) {
    let n = points.len() as f64;
    let c = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let cov = points.iter().fold(Matrix3::zeros(), |a, p| {
        let d = p.coords - c;
        a + d * d.transpose()
    }) / n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut axes = Matrix3::from_columns(&order.map(|k| eig.eigenvectors.column(k).into_owned()));
    if axes.determinant() < 0.0 {
        axes.set_column(2, &-axes.column(2));
    }
    (c, axes, cov.trace().max(0.0).sqrt())
}

/// Iterations every principal-axis start gets before the best is chosen.
const PROBE_ITERS: usize = 8;

struct Icp<'a> {
    src: &'a [Point3<f64>],
    dst: &'a [Point3<f64>],
    dst_tree: &'a PointTree,
    params: &'a RegistrationParams,
    diag: f64,
}

struct IcpRun {
    transform: SimilarityTransform,
    rms: f64,
    converged: bool,
    iterations: usize,
}

fn keep_closest(mut pairs: Vec<(f64, Point3<f64>, Point3<f64>)>, fraction: f64) -> Vec<(f64, Point3<f64>, Point3<f64>)> {
    let keep = ((pairs.len() as f64 * fraction).ceil() as usize).clamp(1, pairs.len());
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(keep);
    pairs
}

impl Icp<'_> {
    /// Trimmed correspondences in both directions as `(squared distance,
    /// source point, target point)`, source points untransformed.
    fn correspondences(&self, tf: &SimilarityTransform) -> Vec<(f64, Point3<f64>, Point3<f64>)> {
        let moved: Vec<Point3<f64>> = self.src.iter().map(|p| tf.apply(p)).collect();
        let forward: Vec<_> = self
            .src
            .iter()
            .zip(&moved)
            .map(|(s, m)| {
                let (j, d2) = nearest(self.dst_tree, m);
                (d2, *s, self.dst[j])
            })
            .collect();
        let moved_tree = tree_of(&moved);
        let backward: Vec<_> = self
            .dst
            .iter()
            .map(|d| {
                let (j, d2) = nearest(&moved_tree, d);
                (d2, self.src[j], *d)
            })
            .collect();
        let mut pairs = keep_closest(forward, self.params.inlier_fraction);
        pairs.extend(keep_closest(backward, self.params.inlier_fraction));
        pairs
    }

    /// Up to `iters` more iterations from `start`, whose rms was `prev`.
    fn run(&self, start: SimilarityTransform, prev: f64, done: usize, iters: usize) -> IcpRun {
        let mut tf = start;
        let mut prev = prev;
        for it in done + 1..=done + iters {
            let pairs = self.correspondences(&tf);
            let (s, d): (Vec<_>, Vec<_>) = pairs.iter().map(|p| (p.1, p.2)).unzip();
            tf = umeyama(&s, &d, self.params.estimate_scale);
            let rms = (pairs
                .iter()
                .map(|(_, s, d)| (tf.apply(s) - d).norm_squared())
                .sum::<f64>()
                / pairs.len() as f64)
                .sqrt();
            if (prev - rms).abs() <= self.params.tolerance * self.diag {
                return IcpRun {
                    transform: tf,
                    rms,
                    converged: true,
                    iterations: it,
                };
            }
            prev = rms;
        }
        IcpRun {
            transform: tf,
            rms: prev,
            converged: false,
            iterations: done + iters,
        }
    }
}

/// Trimmed, symmetric ICP with closed-form similarity updates. Because
/// correspondences are taken in both directions, shrinking the source onto
/// a patch of the target is not rewarded. The loop is started from the four
/// right-handed alignments of the principal axes; after a few iterations
/// only the start with the lowest rms is carried on.
pub fn register_similarity(
    source: &TriangleMesh,
    target: &TriangleMesh,
    params: &RegistrationParams,
) -> Result<RegistrationResult> {
    params.validate()?;
    if source.vertices.is_empty() {
        return Err(RegistrationError::EmptyMesh("source"));
    }
    if target.vertices.is_empty() {
        return Err(RegistrationError::EmptyMesh("target"));
    }
    let src = sample_points(source, params.max_samples);
    let dst = sample_points(target, params.max_samples);
    let dst_tree = tree_of(&dst);
    let diag = target.bbox().diagonal().max(f64::MIN_POSITIVE);
    let icp = Icp {
        src: &src,
        dst: &dst,
        dst_tree: &dst_tree,
        params,
        diag,
    };

    let (cs, axes_s, rs) = principal_frame(&src);
    let (cd, axes_d, rd) = principal_frame(&dst);
    let scale0 = if params.estimate_scale && rs > 0.0 { rd / rs } else { 1.0 };
    let mut best: Option<IcpRun> = None;
    for flip in [[1.0, 1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, -1.0]] {
        let rotation = axes_d * Matrix3::from_diagonal(&Vector3::from(flip)) * axes_s.transpose();
        let start = SimilarityTransform {
            scale: scale0,
            rotation,
            translation: cd - rotation * cs * scale0,
        };
        let run = icp.run(start, f64::INFINITY, 0, PROBE_ITERS.min(params.max_iters));
        if best.as_ref().map_or(true, |b| run.rms < b.rms) {
            best = Some(run);
        }
    }
    let mut best = best.expect("four starts");
    if !best.converged && best.iterations < params.max_iters {
        best = icp.run(best.transform, best.rms, best.iterations, params.max_iters - best.iterations);
    }
    let distance_map = source
        .vertices
        .iter()
        .map(|p| {
            let m = best.transform.apply(p);
            nearest(&dst_tree, &m).1.sqrt()
        })
        .collect();
    let mut transform = best.transform;
    // re-orthonormalize against rounding in the SVD product
    transform.rotation = *Rotation3::from_matrix(&transform.rotation).matrix();
    Ok(RegistrationResult {
        transform,
        rms: best.rms,
        inlier_fraction: params.inlier_fraction,
        converged: best.converged,
        iterations: best.iterations,
        distance_map,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub registration: RegistrationParams,
    /// Pairs link when rms is below this fraction of the target's bbox
    /// diagonal.
    pub shape_threshold: f64,
}

impl Default for SeriesParams {
    fn default() -> Self {
        Self {
            registration: RegistrationParams::default(),
            shape_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScale {
    pub id_a: String,
    pub id_b: String,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesGroup {
    /// Tallest first.
    pub member_ids: Vec<String>,
    /// Scale mapping the earlier member onto the later one, for every pair.
    pub pairwise_scales: Vec<PairScale>,
}

/// Extent of the mesh along its principal axis of largest variance.
pub fn object_height(mesh: &TriangleMesh) -> f64 {
    if mesh.vertices.is_empty() {
        return 0.0;
    }
    let (_, axes, _) = principal_frame(&mesh.vertices);
    let major = axes.column(0).into_owned();
    let (lo, hi) = mesh.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let h = p.coords.dot(&major);
        (lo.min(h), hi.max(h))
    });
    hi - lo
}

/// Registers every pair (taller onto shorter, in parallel), links pairs
/// whose rms is under the shape threshold and returns the connected
/// components. Groups are ordered by their smallest id; every id appears
/// in exactly one group.
pub fn detect_series(objects: &[(String, TriangleMesh)], params: &SeriesParams) -> Result<Vec<SeriesGroup>> {
    params.registration.validate()?;
    let mut order: Vec<usize> = (0..objects.len()).collect();
    order.sort_by(|&a, &b| objects[a].0.cmp(&objects[b].0));
    let heights: Vec<f64> = objects.iter().map(|(_, m)| object_height(m)).collect();
    // position of each object in the (height desc, id asc) member order
    let taller = |a: usize, b: usize| {
        heights[b]
            .total_cmp(&heights[a])
            .then_with(|| objects[a].0.cmp(&objects[b].0))
    };
    let mut pairs = Vec::new();
    for (x, &a) in order.iter().enumerate() {
        for &b in &order[x + 1..] {
            let (big, small) = if taller(a, b).is_le() { (a, b) } else { (b, a) };
            pairs.push((big, small));
        }
    }
    let results: Vec<Result<RegistrationResult>> = pairs
        .par_iter()
        .map(|&(big, small)| register_similarity(&objects[big].1, &objects[small].1, &params.registration))
        .collect();

    let mut sets = DisjointSet::new(objects.len());
    let mut scales = BTreeMap::new();
    for (&(big, small), res) in pairs.iter().zip(results) {
        let res = res?;
        let limit = params.shape_threshold * objects[small].1.bbox().diagonal();
        log::debug!(
            "{} -> {}: rms {:.4} (limit {:.4}), scale {:.4}",
            objects[big].0,
            objects[small].0,
            res.rms,
            limit,
            res.transform.scale
        );
        if res.rms < limit {
            sets.union(big, small);
        }
        scales.insert((big, small), res.transform.scale);
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in &order {
        groups.entry(sets.find(i)).or_default().push(i);
    }
    let mut out: Vec<(String, SeriesGroup)> = groups
        .into_values()
        .map(|mut members| {
            let first_id = objects[members[0]].0.clone();
            members.sort_by(|&a, &b| taller(a, b));
            let mut pairwise_scales = Vec::new();
            for (x, &a) in members.iter().enumerate() {
                for &b in &members[x + 1..] {
                    pairwise_scales.push(PairScale {
                        id_a: objects[a].0.clone(),
                        id_b: objects[b].0.clone(),
                        scale: scales[&(a, b)],
                    });
                }
            }
            (
                first_id,
                SeriesGroup {
                    member_ids: members.iter().map(|&m| objects[m].0.clone()).collect(),
                    pairwise_scales,
                },
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out.into_iter().map(|(_, g)| g).collect())
}

//! Rollout and flattening runs shared by the CLI and the service.

use serde::{Deserialize, Serialize};
use vaselab_core::flatten::{
    elastic_flatten, fit_proxy, render_flatmap, unwrap_on_proxy, ElasticParams, FlatMap2D, HeatMetric, ProxyFit,
    ProxyKind, RenderSidecar,
};
use vaselab_core::imaging::Image;
use vaselab_core::mesh::{estimate_axis, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutParams {
    /// `None` picks the best-fitting proxy.
    pub proxy: Option<ProxyKind>,
    pub seam_deg: f64,
    pub px_per_mm: f64,
    pub heat: Option<HeatMetric>,
}

impl Default for RolloutParams {
    fn default() -> Self {
        Self {
            proxy: None,
            seam_deg: 180.0,
            px_per_mm: 2.0,
            heat: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSummary {
    /// `None` when a triangle collapsed to zero area.
    pub max_angular: Option<f64>,
    pub mean_angular: Option<f64>,
    pub max_sigma_deviation: f64,
}

impl DistortionSummary {
    pub fn of(map: &FlatMap2D) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        let n = map.per_triangle.len().max(1) as f64;
        Self {
            max_angular: finite(map.max_angular()),
            mean_angular: finite(map.per_triangle.iter().map(|d| d.angular).sum::<f64>() / n),
            max_sigma_deviation: map.max_sigma_deviation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticSummary {
    pub params: ElasticParams,
    pub iterations: usize,
    pub converged: bool,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub initial_distortion: DistortionSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutReport {
    pub params: RolloutParams,
    pub proxy: ProxyFit,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub distortion: DistortionSummary,
    pub sidecar: RenderSidecar,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elastic: Option<ElasticSummary>,
}

pub struct RolloutOutput {
    pub map: FlatMap2D,
    pub image: Image,
    pub report: RolloutReport,
}

fn unwrap(mesh: &TriangleMesh, params: &RolloutParams) -> anyhow::Result<(ProxyFit, FlatMap2D)> {
    let axis = estimate_axis(mesh)?;
    let fit = fit_proxy(mesh, &axis, params.proxy)?;
    let map = unwrap_on_proxy(mesh, &fit, params.seam_deg.to_radians())?;
    Ok((fit, map))
}

fn finish(
    mesh: &TriangleMesh,
    params: &RolloutParams,
    proxy: ProxyFit,
    map: FlatMap2D,
    elastic: Option<ElasticSummary>,
) -> anyhow::Result<RolloutOutput> {
    let (image, sidecar) = render_flatmap(&map, mesh, params.px_per_mm, params.heat)?;
    let report = RolloutReport {
        params: *params,
        proxy,
        vertex_count: map.positions.len(),
        triangle_count: map.triangles.len(),
        distortion: DistortionSummary::of(&map),
        sidecar,
        elastic,
    };
    Ok(RolloutOutput { map, image, report })
}

/// Proxy unwrap of `mesh` around its estimated axis.
pub fn rollout(mesh: &TriangleMesh, params: &RolloutParams) -> anyhow::Result<RolloutOutput> {
    let (fit, map) = unwrap(mesh, params)?;
    finish(mesh, params, fit, map, None)
}

/// Proxy unwrap followed by elastic relaxation.
pub fn flatten(mesh: &TriangleMesh, params: &RolloutParams, elastic: &ElasticParams) -> anyhow::Result<RolloutOutput> {
    let (fit, init) = unwrap(mesh, params)?;
    let (map, stats) = elastic_flatten(mesh, &init, elastic)?;
    let summary = ElasticSummary {
        params: *elastic,
        iterations: stats.iterations,
        converged: stats.converged,
        initial_energy: stats.energy_history[0],
        final_energy: *stats.energy_history.last().expect("initial energy recorded"),
        initial_distortion: DistortionSummary::of(&init),
    };
    finish(mesh, params, fit, map, Some(summary))
}

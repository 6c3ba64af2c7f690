//! End-to-end acceptance checks, one line per criterion. They run in order
//! inside a single test so timings are not disturbed by parallel tests.

mod common;

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::time::Instant;

use axum::http::StatusCode;
use base64::Engine;
use nalgebra::{Matrix3, Point3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use vaselab_core::capacity::{capacity_inner_mesh, volume_of_revolution};
use vaselab_core::flatten::{elastic_flatten, fit_proxy_kind, unwrap_on_proxy, ElasticParams, ProxyKind};
use vaselab_core::imaging::{
    egbis_segment, hog, shape_context_cost, silhouette, Channels, EgbisParams, HogParams, Image, ShapeContextParams,
};
use vaselab_core::mesh::{estimate_axis, extract_profile, Axis, TriangleMesh};
use vaselab_core::registration::{
    detect_series, register_similarity, RegistrationParams, SeriesParams, SimilarityTransform,
};
use vaselab_core::retrieval::{evaluate_ranking, DescriptorIndex, DescriptorKind, IndexParams, Query, Truth};
use vaselab_core::synth::{self, OutlineFamily};
use vaselab_core::voxel::{cavity_capacity, CapPlane};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn z_axis() -> Axis {
    Axis::new(Point3::origin(), Vector3::z())
}

fn synthetic_vessel() -> Outcome {
    let start = Instant::now();
    let profile: Vec<(f64, f64)> = (0..101)
        .map(|i| {
            let t = i as f64 / 100.0;
            (160.0 * t, 30.0 + 25.0 * (std::f64::consts::PI * t).sin() - 8.0 * t * t)
        })
        .collect();
    let mesh = synth::revolve(&profile, 250, true);
    check!(mesh.triangles.len() >= 50_000, "only {} triangles", mesh.triangles.len());
    let axis = estimate_axis(&mesh).map_err(|e| e.to_string())?;
    let prof = extract_profile(&mesh, &axis, 101).map_err(|e| e.to_string())?;
    let revolved = volume_of_revolution(&prof).map_err(|e| e.to_string())?.volume_ml;
    let inner = capacity_inner_mesh(&mesh).map_err(|e| e.to_string())?.volume_ml;
    let secs = start.elapsed().as_secs_f64();
    let rel = (revolved - inner).abs() / inner;
    let detail = format!(
        "{} triangles, revolve {revolved:.2} ml, inner {inner:.2} ml, diff {:.3}%, {secs:.2} s",
        mesh.triangles.len(),
        100.0 * rel
    );
    check!(rel < 0.005 && secs < 5.0, "{detail}");
    Ok(detail)
}

fn developable_flattening() -> Outcome {
    // Facets are chords of the proxy, so tessellation must be fine enough
    // for the chord error (about (π/segments)²/6) to sit below 1e-6.
    let cyl = synth::cylinder(20.0, 50.0, 2048, 4, false);
    let fit = fit_proxy_kind(&cyl, &z_axis(), ProxyKind::Cylinder).map_err(|e| e.to_string())?;
    let cyl_dev = unwrap_on_proxy(&cyl, &fit, std::f64::consts::PI)
        .map_err(|e| e.to_string())?
        .max_sigma_deviation();
    let dense_cone = synth::cone(30.0, 40.0, 2048, 6, false);
    let fit = fit_proxy_kind(&dense_cone, &z_axis(), ProxyKind::Cone).map_err(|e| e.to_string())?;
    let cone_dev = unwrap_on_proxy(&dense_cone, &fit, std::f64::consts::PI)
        .map_err(|e| e.to_string())?
        .max_sigma_deviation();
    check!(cyl_dev < 1e-6 && cone_dev < 1e-6, "max |σ−1|: cylinder {cyl_dev:e}, cone {cone_dev:e}");

    let cone = synth::frustum(30.0, 15.0, 40.0, 16, 4);
    let fit = fit_proxy_kind(&cone, &z_axis(), ProxyKind::Cone).map_err(|e| e.to_string())?;
    let exact = unwrap_on_proxy(&cone, &fit, std::f64::consts::PI).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noisy = exact.map_positions(|p| {
        nalgebra::Point2::new(p.x + rng.gen_range(-3.0..3.0), p.y + rng.gen_range(-3.0..3.0))
    });
    let params = ElasticParams {
        max_iters: 2000,
        eps: 0.0,
        ..Default::default()
    };
    let (_, stats) = elastic_flatten(&cone, &noisy, &params).map_err(|e| e.to_string())?;
    let rises = stats.energy_history.windows(2).filter(|w| w[1] > w[0]).count();
    let detail = format!(
        "max |σ−1| cylinder {cyl_dev:.1e}, cone {cone_dev:.1e}; {} iterations, {rises} energy increases",
        stats.iterations
    );
    check!(stats.iterations == 2000 && rises == 0, "{detail}");
    Ok(detail)
}

fn elastic_improvement() -> Outcome {
    let mesh = synth::geodesic_dome(50.0, 5);
    let fit = fit_proxy_kind(&mesh, &z_axis(), ProxyKind::Sphere).map_err(|e| e.to_string())?;
    let init = unwrap_on_proxy(&mesh, &fit, std::f64::consts::PI).map_err(|e| e.to_string())?;
    let params = ElasticParams {
        max_iters: 80_000,
        step: 1.0,
        eps: 1e-6,
    };
    let start = Instant::now();
    let (out, stats) = elastic_flatten(&mesh, &init, &params).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (before, after) = (init.max_angular(), out.max_angular());
    // Excess over the conformal value 1.
    let reduction = 1.0 - (after - 1.0) / (before - 1.0);
    let detail = format!(
        "{} triangles, max σ1/σ2 {before:.2} -> {after:.3} ({:.1}% reduction), {} sweeps, converged {}, {secs:.1} s",
        mesh.triangles.len(),
        100.0 * reduction,
        stats.iterations,
        stats.converged
    );
    check!(mesh.triangles.len() >= 10_000, "{detail}");
    check!(reduction >= 0.5 && stats.converged && secs < 30.0, "{detail}");
    Ok(detail)
}

fn voxel_cavity() -> Outcome {
    let (n, outer, inner) = (128, 60.0, 52.0);
    let sealed = synth::voxel_hollow_sphere(n, outer, inner, 0.0);
    let sealed_ml = cavity_capacity(&sealed, 50.0, None).map_err(|e| e.to_string())?.volume_ml;
    let exact = 4.0 / 3.0 * std::f64::consts::PI * inner.powi(3) / 1000.0;
    let open = synth::voxel_hollow_sphere(n, outer, inner, 15.0);
    let c = (n as f64 - 1.0) / 2.0;
    let cap_z = c + (inner * inner - 15.0 * 15.0).sqrt();
    let capped_ml = cavity_capacity(&open, 50.0, Some(CapPlane::new(0.0, 0.0, 1.0, -cap_z)))
        .map_err(|e| e.to_string())?
        .volume_ml;
    let e1 = (sealed_ml - exact).abs() / exact;
    let e2 = (capped_ml - sealed_ml).abs() / sealed_ml;
    let detail = format!(
        "sealed {sealed_ml:.2} ml vs analytic {exact:.2} ml ({:.2}%), capped {capped_ml:.2} ml ({:.3}% from sealed)",
        100.0 * e1,
        100.0 * e2
    );
    check!(e1 < 0.02 && e2 < 0.005, "{detail}");
    Ok(detail)
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, channels: Channels, levels: u32) -> Image {
    let data = (0..w * h * channels.count())
        .map(|_| rng.gen_range(0..levels) as f32 / (levels - 1) as f32)
        .collect();
    Image::new(w, h, channels, data).unwrap()
}

fn egbis_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut mismatches = Vec::new();
    for trial in 0..100 {
        let channels = if trial % 3 == 0 { Channels::Rgb } else { Channels::Gray };
        let img = random_image(&mut rng, 16, 16, channels, 2 + trial as u32 % 5);
        let params = EgbisParams {
            k: rng.gen_range(0.05..3.0),
            sigma: 0.0,
            min_size: rng.gen_range(1..10),
        };
        let fast = egbis_segment(&img, &params).map_err(|e| e.to_string())?;
        if fast.labels != oracles::egbis_brute_force(&img, params.k, params.min_size) {
            mismatches.push(trial);
        }
    }
    check!(mismatches.is_empty(), "partitions differ in trials {mismatches:?}");
    Ok("100 of 100 random 16×16 images partition identically".into())
}

fn hog_oracle() -> Outcome {
    let p = HogParams::default();
    check!(p.descriptor_len() == 8100, "default length {}", p.descriptor_len());
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let img = random_image(&mut rng, 128, 128, Channels::Gray, 256);
        let fast = hog(&img, &p).values;
        let slow = oracles::hog_naive(&img, p.cell, p.bins, p.clip);
        check!(fast.len() == 8100 && slow.len() == 8100, "lengths {} and {}", fast.len(), slow.len());
        worst = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    let detail = format!("length 8100, max deviation {worst:.1e} over 10 images");
    check!(worst < 1e-6, "{detail}");
    Ok(detail)
}

fn random_similarity(rng: &mut ChaCha8Rng) -> SimilarityTransform {
    let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let rotation: Matrix3<f64> =
        *Rotation3::from_axis_angle(&Unit::new_normalize(axis), rng.gen_range(-3.1..3.1)).matrix();
    SimilarityTransform {
        scale: rng.gen_range(0.5..2.0),
        rotation,
        translation: Vector3::new(rng.gen_range(-80.0..80.0), rng.gen_range(-80.0..80.0), rng.gen_range(-80.0..80.0)),
    }
}

fn registration_recovery() -> Outcome {
    let mesh = synth::blob(30.0, 3, 17);
    let mut rng = ChaCha8Rng::seed_from_u64(93);
    let (mut worst_scale, mut worst_angle) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let truth = random_similarity(&mut rng);
        let r = register_similarity(&mesh, &truth.apply_mesh(&mesh), &RegistrationParams::default())
            .map_err(|e| e.to_string())?;
        worst_scale = worst_scale.max((r.transform.scale / truth.scale - 1.0).abs());
        worst_angle = worst_angle.max(r.transform.compose(&truth.inverse()).angle().to_degrees());
    }

    let base = synth::blob(40.0, 3, 100);
    let mut objects: Vec<(String, TriangleMesh)> = Vec::new();
    for (k, s) in [1.0, 0.9, 0.81].into_iter().enumerate() {
        let mut t = random_similarity(&mut rng);
        t.scale = s;
        objects.push((format!("head-{k}"), t.apply_mesh(&base)));
    }
    let distractors = [
        synth::subdivided_cube(60.0, 8),
        synth::torus(35.0, 12.0, 48, 24),
        synth::cylinder(25.0, 80.0, 48, 10, true),
        synth::cone(35.0, 70.0, 48, 10, true),
        synth::uv_sphere(40.0, 48, 24),
    ];
    for (k, m) in distractors.iter().enumerate() {
        objects.push((format!("other-{k}"), random_similarity(&mut rng).apply_mesh(m)));
    }
    let groups = detect_series(&objects, &SeriesParams::default()).map_err(|e| e.to_string())?;
    let merged: Vec<&Vec<String>> = groups.iter().map(|g| &g.member_ids).filter(|m| m.len() > 1).collect();
    let series_ok = merged.len() == 1 && merged[0] == &["head-0", "head-1", "head-2"];
    let detail = format!(
        "worst scale error {:.3}%, worst rotation error {worst_angle:.3}°, multi-member groups {merged:?}",
        100.0 * worst_scale
    );
    check!(worst_scale < 0.01 && worst_angle < 0.5 && series_ok, "{detail}");
    Ok(detail)
}

fn retrieval() -> Outcome {
    let items = synth::silhouette_corpus(20, 128);
    let images: Vec<(String, Image)> = items.iter().map(|(id, _, img)| (id.clone(), img.clone())).collect();
    let index = DescriptorIndex::from_images(&images, &DescriptorKind::ALL, &IndexParams::default())
        .map_err(|e| e.to_string())?;
    check!(index.warnings.is_empty(), "index warnings {:?}", index.warnings);
    let mut misses = Vec::new();
    for kind in DescriptorKind::ALL {
        for (id, _, img) in &items {
            let r = index.query(&Query::Image(img), kind, 1).map_err(|e| e.to_string())?;
            if r.results[0].id != *id {
                misses.push(format!("{kind}:{id}"));
            }
        }
    }
    let family: BTreeMap<&str, OutlineFamily> = items.iter().map(|(id, f, _)| (id.as_str(), *f)).collect();
    let mut total = 0.0;
    for (id, fam, img) in &items {
        let mut r = index.query(&Query::Image(img), DescriptorKind::Scd, 11).map_err(|e| e.to_string())?;
        r.results.retain(|h| &h.id != id);
        let labels = r.results.iter().map(|h| (h.id.clone(), family[h.id.as_str()] == *fam)).collect();
        total += evaluate_ranking(&r, &Truth::Labels(labels))
            .map_err(|e| e.to_string())?
            .precision_at(10)
            .unwrap_or(0.0);
    }
    let mean = total / items.len() as f64;
    let detail = format!(
        "{} items, self-rank misses {}, SCD mean precision@10 {mean:.3}",
        items.len(),
        misses.len()
    );
    check!(misses.is_empty() && mean >= 0.9, "{detail} {misses:?}");
    Ok(detail)
}

fn shape_context() -> Outcome {
    let params = ShapeContextParams::default();
    let (mut identity, mut invariance) = (0.0f64, 0.0f64);
    for fam in OutlineFamily::ALL {
        let img = synth::render_polygon(&fam.outline(5), 128, 0.07, 0.8);
        let c = silhouette(&img, 128).map_err(|e| e.to_string())?;
        identity = identity.max(shape_context_cost(&c, &c, &params).map_err(|e| e.to_string())?);
        for (s, tx, ty) in [(3.7, 12.5, -40.0), (0.25, -300.0, 7.0)] {
            let moved = c.map(|p| nalgebra::Point2::new(s * p.x + tx, s * p.y + ty));
            invariance = invariance.max(shape_context_cost(&c, &moved, &params).map_err(|e| e.to_string())?);
        }
    }
    let detail = format!("identical {identity:.1e}, scaled and translated {invariance:.1e}");
    check!(identity < 1e-9 && invariance < 1e-6, "{detail}");
    Ok(detail)
}

async fn service_conformance() -> Outcome {
    use common::*;
    let fx = fixture(4);
    let (_, app) = fx.app();
    let id = fx.records[0].id.clone();
    let motif = base64::engine::general_purpose::STANDARD
        .encode(std::fs::read(fx.dir.path().join(&fx.records[1].image_paths[0])).unwrap());
    let mut sketch = square_sketch();
    sketch["kind"] = json!("scd");
    sketch["k"] = json!(5);
    let object = schema("object");
    let requests: Vec<(&str, String, Option<serde_json::Value>, Option<serde_json::Value>)> = vec![
        ("GET", "/api/objects".into(), None, Some(array_of(object.clone()))),
        ("GET", "/api/objects?from=-700&to=-500&bbox=20,30,30,40".into(), None, Some(array_of(object.clone()))),
        ("GET", format!("/api/objects/{id}"), None, Some(object)),
        ("GET", format!("/api/objects/{id}/image"), None, None),
        ("GET", format!("/api/objects/{id}/mesh"), None, None),
        ("GET", format!("/api/objects/{id}/rollout?proxy=auto&seam=180"), None, Some(schema("render"))),
        ("GET", format!("/api/objects/{id}/flatten?iters=25"), None, Some(schema("render"))),
        ("GET", "/api/graph?kind=scd&k=3".into(), None, Some(schema("graph"))),
        ("POST", "/api/query/sketch".into(), Some(sketch), Some(schema("ranked"))),
        ("POST", "/api/query/motif".into(), Some(json!({ "image": motif, "k": 4 })), Some(schema("ranked"))),
        (
            "POST",
            "/api/selection".into(),
            Some(json!({ "selector": { "type": "date_interval", "from": -700, "to": -600 } })),
            Some(schema("selection")),
        ),
        ("GET", "/api/objects/unknown".into(), None, Some(schema("error"))),
    ];
    let mut failures = Vec::new();
    for (method, uri, body, schema) in &requests {
        let (s1, b1) = call(&app, method, uri, body.clone()).await;
        let (s2, b2) = call(&app, method, uri, body.clone()).await;
        let expect_ok = !uri.ends_with("/unknown");
        if (s1 == StatusCode::OK) != expect_ok {
            failures.push(format!("{method} {uri}: status {s1}"));
            continue;
        }
        if s1 != s2 || b1 != b2 {
            failures.push(format!("{method} {uri}: bodies differ"));
        }
        if let Some(schema) = schema {
            let value: serde_json::Value = match serde_json::from_slice(&b1) {
                Ok(v) => v,
                Err(e) => {
                    failures.push(format!("{method} {uri}: not JSON ({e})"));
                    continue;
                }
            };
            let compiled = jsonschema::JSONSchema::compile(schema).unwrap();
            if let Err(errors) = compiled.validate(&value) {
                let msgs: Vec<String> = errors.map(|e| e.to_string()).collect();
                failures.push(format!("{method} {uri}: {msgs:?}"));
            };
        }
    }
    check!(failures.is_empty(), "{failures:?}");
    Ok(format!("{} requests schema-valid and byte-identical on repeat, no static client", requests.len()))
}

fn main() {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("synthetic vessel pipeline", Box::new(synthetic_vessel)),
        ("developable flattening", Box::new(developable_flattening)),
        ("elastic flattening improvement", Box::new(elastic_improvement)),
        ("voxel cavity", Box::new(voxel_cavity)),
        ("EGBIS oracle equivalence", Box::new(egbis_oracle)),
        ("HOG reference equivalence", Box::new(hog_oracle)),
        ("registration recovery", Box::new(registration_recovery)),
        ("retrieval", Box::new(retrieval)),
        ("shape context", Box::new(shape_context)),
        ("service conformance", Box::new(move || rt.block_on(service_conformance()))),
    ];
    println!();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {n:>2} {name}: {detail}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria {failed:?}");
        std::process::exit(1);
    }
}

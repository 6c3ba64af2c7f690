#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tempfile::TempDir;
use tower::ServiceExt;
use vaselab::service::{router, AppState, ServiceConfig};
use vaselab_core::catalog::{write_catalog, CatalogRecord, Findspot};
use vaselab_core::imaging::save_png;
use vaselab_core::mesh::{write_obj, TriangleMesh};
use vaselab_core::synth;

pub const SCHEMA_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/schemas");

/// Small open vessel with a pole at the base.
pub fn vessel() -> TriangleMesh {
    let mut profile = vec![(0.0, 0.0)];
    profile.extend((0..16).map(|i| {
        let t = i as f64 / 15.0;
        (2.0 + 78.0 * t, 20.0 + 14.0 * (std::f64::consts::PI * t).sin() - 6.0 * t)
    }));
    synth::revolve(&profile, 32, false)
}

pub struct Fixture {
    pub dir: TempDir,
    pub catalog: PathBuf,
    pub records: Vec<CatalogRecord>,
}

impl Fixture {
    pub fn config(&self) -> ServiceConfig {
        ServiceConfig {
            port: 8080,
            catalog: self.catalog.clone(),
            index: None,
            static_dir: None,
            cache_dir: self.dir.path().join("cache"),
        }
    }

    pub fn app(&self) -> (AppState, Router) {
        let state = AppState::load(self.config()).expect("fixture loads");
        let app = router(state.clone());
        (state, app)
    }
}

/// Catalog of `3 · per_family` synthetic silhouettes. The first record
/// also carries a mesh; every fourth has no findspot.
pub fn fixture(per_family: usize) -> Fixture {
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::create_dir_all(dir.path().join("images")).unwrap();
    std::fs::create_dir_all(dir.path().join("meshes")).unwrap();
    let mut obj = Vec::new();
    write_obj(&vessel(), &mut obj).unwrap();
    std::fs::write(dir.path().join("meshes/vessel.obj"), obj).unwrap();

    let mut records = Vec::new();
    for (i, (id, family, img)) in synth::silhouette_corpus(per_family, 160).into_iter().enumerate() {
        let rel = PathBuf::from(format!("images/{id}.png"));
        save_png(&img, dir.path().join(&rel)).unwrap();
        let from = -700 + 25 * i as i32;
        records.push(CatalogRecord {
            id: id.clone(),
            name: format!("{} {i}", family.name()),
            collection: "synthetic".into(),
            shape_class: family.name().into(),
            date_from: from,
            date_to: from + 40,
            findspot: (i % 4 != 3).then(|| Findspot {
                lat: 36.0 + 0.5 * i as f64,
                lon: 22.0 + 0.25 * i as f64,
                place: format!("site {i}"),
            }),
            fabric: None,
            mass_g: None,
            density_g_per_ml: None,
            image_paths: vec![rel],
            mesh_path: (i == 0).then(|| PathBuf::from("meshes/vessel.obj")),
            voxel_path: None,
        });
    }
    let catalog = dir.path().join("catalog.json");
    write_catalog(&records, &catalog).unwrap();
    Fixture { dir, catalog, records }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, Vec<u8>) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => builder
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&v).unwrap())),
        None => builder.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    call(app, "GET", uri, None).await
}

pub async fn post(app: &Router, uri: &str, body: serde_json::Value) -> (StatusCode, Vec<u8>) {
    call(app, "POST", uri, Some(body)).await
}

pub fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(SCHEMA_DIR).join(format!("{name}.json"));
    serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap()
}

pub fn array_of(item: serde_json::Value) -> serde_json::Value {
    serde_json::json!({ "type": "array", "items": item })
}

/// Panics with every violation listed.
pub fn assert_valid(schema: &serde_json::Value, body: &[u8]) -> serde_json::Value {
    let value: serde_json::Value = serde_json::from_slice(body)
        .unwrap_or_else(|e| panic!("body is not JSON ({e}): {}", String::from_utf8_lossy(body)));
    let compiled = jsonschema::JSONSchema::compile(schema).expect("schema compiles");
    if let Err(errors) = compiled.validate(&value) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    }
    value
}

pub fn square_sketch() -> serde_json::Value {
    serde_json::json!({
        "polylines": [[[100.0, 100.0], [300.0, 100.0], [300.0, 300.0], [100.0, 300.0], [100.0, 100.0]]],
        "canvas": { "width": 400, "height": 400 }
    })
}

mod common;

use axum::http::StatusCode;
use base64::Engine;
use common::*;
use serde_json::json;
use vaselab::service::{router, AppState};
use vaselab_core::catalog::write_catalog;

fn error_code(body: &[u8]) -> String {
    let v = assert_valid(&schema("error"), body);
    v["code"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn objects_lists_every_record() {
    let fx = fixture(1);
    let (_, app) = fx.app();
    let (status, body) = get(&app, "/api/objects").await;
    assert_eq!(status, StatusCode::OK);
    let v = assert_valid(&array_of(schema("object")), &body);
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn objects_filter_by_date_and_bbox() {
    let fx = fixture(2);
    let (_, app) = fx.app();
    let ids = |body: &[u8]| -> Vec<String> {
        let v = assert_valid(&array_of(schema("object")), body);
        v.as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap().to_string()).collect()
    };

    let r0 = &fx.records[0];
    let (status, body) = get(&app, &format!("/api/objects?from={}&to={}", r0.date_from, r0.date_from)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ids(&body), vec![r0.id.clone()]);

    let (status, body) = get(&app, "/api/objects?bbox=21.9,35.9,22.3,36.6").await;
    assert_eq!(status, StatusCode::OK);
    let expected: Vec<String> = fx
        .records
        .iter()
        .filter(|r| r.findspot.as_ref().is_some_and(|f| f.lon <= 22.3 && f.lat <= 36.6))
        .map(|r| r.id.clone())
        .collect();
    assert!(!expected.is_empty());
    assert_eq!(ids(&body), expected);

    let (status, body) = get(&app, "/api/objects?bbox=1,2,3").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "bad_request");

    let (status, body) = get(&app, "/api/objects?from=abc").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    error_code(&body);
}

#[tokio::test]
async fn single_object_image_and_mesh() {
    let fx = fixture(1);
    let (_, app) = fx.app();
    let id = &fx.records[0].id;

    let (status, body) = get(&app, &format!("/api/objects/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    let v = assert_valid(&schema("object"), &body);
    assert_eq!(v["id"], json!(id));

    let (status, body) = get(&app, &format!("/api/objects/{id}/image")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&body[..8], b"\x89PNG\r\n\x1a\n");

    let (status, body) = get(&app, &format!("/api/objects/{id}/mesh")).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(body).unwrap();
    assert!(text.lines().any(|l| l.starts_with("v ")));
    assert!(text.lines().any(|l| l.starts_with("f ")));

    let other = &fx.records[1].id;
    let (status, body) = get(&app, &format!("/api/objects/{other}/mesh")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "no_mesh");
}

#[tokio::test]
async fn unknown_ids_and_routes_give_404_envelopes() {
    let fx = fixture(1);
    let (_, app) = fx.app();
    for uri in [
        "/api/objects/unknown",
        "/api/objects/unknown/image",
        "/api/objects/unknown/mesh",
        "/api/objects/unknown/rollout",
        "/api/objects/unknown/flatten",
    ] {
        let (status, body) = get(&app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(error_code(&body), "unknown_id", "{uri}");
    }
    let (status, body) = get(&app, "/api/nothing-here").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "not_found");
    let (status, body) = get(&app, "/index.html").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    error_code(&body);
}

#[tokio::test]
async fn rollout_and_flatten_render_and_cache() {
    let fx = fixture(1);
    let (_, app) = fx.app();
    let id = &fx.records[0].id;

    let uri = format!("/api/objects/{id}/rollout?proxy=cyl&seam=90&px_per_mm=1&heat=angular");
    let (status, first) = get(&app, &uri).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&first));
    let v = assert_valid(&schema("render"), &first);
    assert_eq!(v["report"]["params"]["seam_deg"], json!(90.0));
    assert_eq!(v["report"]["proxy"]["shape"]["kind"], json!("cylinder"));
    let png = base64::engine::general_purpose::STANDARD
        .decode(v["png_base64"].as_str().unwrap())
        .unwrap();
    let img = vaselab_core::imaging::decode_image(&png).unwrap();
    assert_eq!(img.width, v["report"]["sidecar"]["width"].as_u64().unwrap() as usize);

    let cached: Vec<_> = std::fs::read_dir(fx.dir.path().join("cache")).unwrap().collect();
    assert_eq!(cached.len(), 1);
    let (_, second) = get(&app, &uri).await;
    assert_eq!(first, second);

    // A fresh service without the cache renders the same bytes.
    std::fs::remove_dir_all(fx.dir.path().join("cache")).unwrap();
    let (_, app2) = fx.app();
    let (_, third) = get(&app2, &uri).await;
    assert_eq!(first, third);

    let uri = format!("/api/objects/{id}/flatten?iters=30&step=0.5&px_per_mm=1");
    let (status, body) = get(&app, &uri).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let v = assert_valid(&schema("render"), &body);
    let elastic = &v["report"]["elastic"];
    assert!(elastic["final_energy"].as_f64().unwrap() <= elastic["initial_energy"].as_f64().unwrap());
    let (_, again) = get(&app, &uri).await;
    assert_eq!(body, again);

    for bad in ["proxy=torus", "px_per_mm=0", "seam=x"] {
        let (status, body) = get(&app, &format!("/api/objects/{id}/rollout?{bad}")).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        error_code(&body);
    }
    let (status, body) = get(&app, &format!("/api/objects/{id}/flatten?step=2")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    error_code(&body);
}

#[tokio::test]
async fn graph_matches_schema_and_is_stable() {
    let fx = fixture(4);
    let (_, app) = fx.app();
    let (status, a) = get(&app, "/api/graph?kind=scd&k=3").await;
    assert_eq!(status, StatusCode::OK);
    let v = assert_valid(&schema("graph"), &a);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 12);
    assert!(!v["edges"].as_array().unwrap().is_empty());
    let (_, b) = get(&app, "/api/graph?kind=scd&k=3").await;
    assert_eq!(a, b);

    let (status, body) = get(&app, "/api/graph").await;
    assert_eq!(status, StatusCode::OK);
    let v = assert_valid(&schema("graph"), &body);
    assert_eq!(v["kind"], json!("scd"));

    let (status, body) = get(&app, "/api/graph?kind=zernike").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    error_code(&body);
}

#[tokio::test]
async fn square_sketch_returns_ranked_ids() {
    let fx = fixture(4);
    let (_, app) = fx.app();
    for kind in ["hog", "scd", "sc"] {
        let mut body = square_sketch();
        body["kind"] = json!(kind);
        body["k"] = json!(5);
        let (status, first) = post(&app, "/api/query/sketch", body.clone()).await;
        assert_eq!(status, StatusCode::OK, "{kind}: {}", String::from_utf8_lossy(&first));
        let v = assert_valid(&schema("ranked"), &first);
        let hits = v["results"].as_array().unwrap();
        assert_eq!(hits.len(), 5);
        let scores: Vec<f64> = hits.iter().map(|h| h["score"].as_f64().unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] <= w[1]));
        for h in hits {
            assert!(fx.records.iter().any(|r| r.id == h["id"].as_str().unwrap()));
        }
        let (_, second) = post(&app, "/api/query/sketch", body).await;
        assert_eq!(first, second);
    }
}

#[tokio::test]
async fn sketch_errors() {
    let fx = fixture(1);
    let (_, app) = fx.app();
    let dot = json!({ "polylines": [[[5.0, 5.0]]], "canvas": { "width": 100, "height": 100 }, "k": 3 });
    let (status, body) = post(&app, "/api/query/sketch", dot).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "degenerate_sketch");

    let (status, body) = post(&app, "/api/query/sketch", json!({ "canvas": 3 })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    error_code(&body);

    let (status, body) = call(&app, "POST", "/api/query/sketch", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    error_code(&body);
}

#[tokio::test]
async fn motif_query_finds_the_source_image() {
    let fx = fixture(3);
    let (_, app) = fx.app();
    let target = &fx.records[4];
    let png = std::fs::read(fx.dir.path().join(&target.image_paths[0])).unwrap();
    let image = base64::engine::general_purpose::STANDARD.encode(png);
    let (status, body) = post(&app, "/api/query/motif", json!({ "image": image, "kind": "scd", "k": 3 })).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let v = assert_valid(&schema("ranked"), &body);
    assert_eq!(v["results"][0]["id"], json!(target.id));
    assert!(v["results"][0]["score"].as_f64().unwrap() < 1e-9);

    let (status, body) = post(&app, "/api/query/motif", json!({ "image": "not base64!" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "bad_image");
    let junk = base64::engine::general_purpose::STANDARD.encode(b"junk bytes");
    let (status, body) = post(&app, "/api/query/motif", json!({ "image": junk })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "bad_image");
}

#[tokio::test]
async fn selection_links_every_view() {
    let fx = fixture(3);
    let (_, app) = fx.app();
    let selectors = [
        json!({ "type": "ids", "ids": [fx.records[0].id, fx.records[3].id] }),
        json!({ "type": "date_interval", "from": -700, "to": -600 }),
        json!({ "type": "geo_bbox", "min_lat": 35.0, "min_lon": 21.0, "max_lat": 37.0, "max_lon": 23.0 }),
        json!({ "type": "graph_hops", "node": fx.records[0].id, "hops": 1 }),
    ];
    for sel in selectors {
        let (status, body) = post(&app, "/api/selection", json!({ "selector": sel })).await;
        assert_eq!(status, StatusCode::OK, "{sel}: {}", String::from_utf8_lossy(&body));
        let v = assert_valid(&schema("selection"), &body);
        let selected: Vec<&str> = v["selected_ids"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
        assert!(!selected.is_empty(), "{sel}");
        let ids_of = |key: &str| -> Vec<&str> {
            v[key].as_array().unwrap().iter().map(|x| x["id"].as_str().unwrap()).collect()
        };
        assert_eq!(ids_of("map"), selected);
        assert_eq!(ids_of("timeline"), selected);
        let graph_selected: Vec<&str> = v["graph"]["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|n| n["selected"].as_bool().unwrap())
            .map(|n| n["id"].as_str().unwrap())
            .collect();
        assert_eq!(graph_selected, selected);
    }

    let (status, body) = post(&app, "/api/selection", json!({ "selector": { "type": "ids", "ids": ["nope"] } })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "unknown_id");
    let bad = json!({ "selector": { "type": "date_interval", "from": 10, "to": -10 } });
    let (status, body) = post(&app, "/api/selection", bad).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "invalid_selector");
    let (status, body) = post(&app, "/api/selection", json!({ "selector": { "type": "polygon" } })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    error_code(&body);
}

#[tokio::test]
async fn reload_swaps_the_snapshot() {
    let fx = fixture(1);
    let (state, app) = fx.app();
    let count = |body: &[u8]| serde_json::from_slice::<Vec<serde_json::Value>>(body).unwrap().len();
    assert_eq!(count(&get(&app, "/api/objects").await.1), 3);

    write_catalog(&fx.records[..2], &fx.catalog).unwrap();
    state.reload().unwrap();
    assert_eq!(count(&get(&app, "/api/objects").await.1), 2);

    std::fs::write(&fx.catalog, b"{ not json").unwrap();
    assert!(state.reload().is_err());
    assert_eq!(count(&get(&app, "/api/objects").await.1), 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn requests_never_see_a_partial_snapshot() {
    let fx = fixture(1);
    let (state, app) = fx.app();
    let small = fx.records[..1].to_vec();
    let full = fx.records.clone();
    let catalog = fx.catalog.clone();
    let reloader = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || {
            for i in 0..20 {
                write_catalog(if i % 2 == 0 { &small } else { &full }, &catalog).unwrap();
                // A failed load (torn file) must leave the old snapshot in place.
                let _ = state.reload();
            }
        })
    };
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..60 {
        let (status, body) = get(&app, "/api/objects").await;
        assert_eq!(status, StatusCode::OK);
        let n = serde_json::from_slice::<Vec<serde_json::Value>>(&body).unwrap().len();
        assert!(n == 1 || n == 3, "saw {n} records");
        seen.insert(n);
    }
    reloader.await.unwrap();
}

#[test]
fn static_files_are_served_when_configured() {
    let fx = fixture(1);
    let web = fx.dir.path().join("web");
    std::fs::create_dir_all(&web).unwrap();
    std::fs::write(web.join("index.html"), "<html>vaselab</html>").unwrap();
    let mut config = fx.config();
    config.static_dir = Some(web);
    let app = router(AppState::load(config).unwrap());
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async {
        let (status, body) = get(&app, "/index.html").await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body, b"<html>vaselab</html>");
        let (status, body) = get(&app, "/api/objects").await;
        assert_eq!(status, StatusCode::OK);
        assert_valid(&array_of(schema("object")), &body);
    });
}

#[test]
fn config_rejects_port_zero_and_missing_catalog() {
    let fx = fixture(1);
    let mut config = fx.config();
    config.port = 0;
    assert!(AppState::load(config).is_err());
    let mut config = fx.config();
    config.catalog = fx.dir.path().join("missing.json");
    let err = AppState::load(config).err().unwrap();
    assert!(format!("{err:#}").contains("missing.json"));
}

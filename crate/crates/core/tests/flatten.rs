use nalgebra::{Point2, Point3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaselab_core::flatten::{
    edge_energy, elastic_flatten, fit_proxy, fit_proxy_kind, unwrap_on_proxy, ElasticParams,
    FlatMap2D, ProxyKind,
};
use vaselab_core::mesh::{Axis, TriangleMesh};
use vaselab_core::synth;

fn z_axis() -> Axis {
    Axis::new(Point3::origin(), Vector3::z())
}

fn jitter(map: &FlatMap2D, amp: f64, seed: u64) -> FlatMap2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    map.map_positions(|p| {
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = amp * rng.gen_range(0.0..1.0f64);
        Point2::new(p.x + r * a.cos(), p.y + r * a.sin())
    })
}

fn cone_band() -> (TriangleMesh, FlatMap2D) {
    let mesh = synth::frustum(30.0, 15.0, 40.0, 16, 4);
    let fit = fit_proxy(&mesh, &z_axis(), None).unwrap();
    assert_eq!(fit.shape.kind(), ProxyKind::Cone);
    let map = unwrap_on_proxy(&mesh, &fit, std::f64::consts::PI).unwrap();
    (mesh, map)
}

#[test]
fn geodesic_dome_angular_distortion_halves() {
    let mesh = synth::geodesic_dome(50.0, 4);
    let fit = fit_proxy_kind(&mesh, &z_axis(), ProxyKind::Sphere).unwrap();
    let init = unwrap_on_proxy(&mesh, &fit, std::f64::consts::PI).unwrap();
    let params = ElasticParams {
        max_iters: 40_000,
        step: 1.0,
        eps: 1e-6,
    };
    let (out, stats) = elastic_flatten(&mesh, &init, &params).unwrap();
    assert!(stats.converged, "{} sweeps", stats.iterations);
    let (before, after) = (init.max_angular() - 1.0, out.max_angular() - 1.0);
    assert!(after <= 0.5 * before, "{before} -> {after}");
    for w in stats.energy_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn perturbed_cone_relaxes_to_isometry() {
    let (mesh, exact) = cone_band();
    let amp = 0.05 * mesh.bbox().diagonal();
    for seed in 0..4 {
        let params = ElasticParams {
            max_iters: 20_000,
            step: 1.0,
            eps: 1e-10,
        };
        let (out, _) = elastic_flatten(&mesh, &jitter(&exact, amp, seed), &params).unwrap();
        let d = out.max_length_distortion(&mesh);
        assert!(d < 1e-3, "seed {seed}: {d}");
    }
}

#[test]
fn developable_energy_vanishes_at_convergence() {
    let (mesh, exact) = cone_band();
    let amp = 0.05 * mesh.bbox().diagonal();
    let params = ElasticParams {
        max_iters: 20_000,
        step: 1.0,
        eps: 1e-10,
    };
    let (out, _) = elastic_flatten(&mesh, &jitter(&exact, amp, 11), &params).unwrap();
    let scale: f64 = mesh
        .triangles
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
        .map(|(a, b)| (mesh.vertices[a] - mesh.vertices[b]).norm_squared())
        .sum::<f64>()
        / 2.0;
    assert!(edge_energy(&out, &mesh).unwrap() < 1e-6 * scale);
}

#[test]
fn energy_never_increases_over_2000_sweeps() {
    let (mesh, exact) = cone_band();
    let params = ElasticParams {
        max_iters: 2000,
        eps: 0.0,
        ..Default::default()
    };
    let (_, stats) = elastic_flatten(&mesh, &jitter(&exact, 5.0, 3), &params).unwrap();
    assert_eq!(stats.iterations, 2000);
    for w in stats.energy_history.windows(2) {
        assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn colored_cylinder_render_width() {
    let mesh = synth::paint_checker(&synth::cylinder(20.0, 30.0, 256, 6, false), 8, 10.0);
    let fit = fit_proxy_kind(&mesh, &z_axis(), ProxyKind::Cylinder).unwrap();
    let map = unwrap_on_proxy(&mesh, &fit, 0.0).unwrap();
    let px = 3.0;
    let (img, side) = vaselab_core::flatten::render_flatmap(&map, &mesh, px, None).unwrap();
    let r = match fit.shape {
        vaselab_core::flatten::ProxyShape::Cylinder { radius } => radius,
        _ => unreachable!(),
    };
    assert_eq!(img.width, (std::f64::consts::TAU * r * px).round() as usize);
    assert_eq!(side.height, 90);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distortion_is_invariant_under_planar_rigid_motion(
        angle in -3.2f64..3.2, tx in -100.0f64..100.0, ty in -100.0f64..100.0,
    ) {
        let mesh = synth::hemisphere(30.0, 24, 8);
        let fit = fit_proxy_kind(&mesh, &z_axis(), ProxyKind::Sphere).unwrap();
        let map = unwrap_on_proxy(&mesh, &fit, 0.5).unwrap();
        let (s, c) = angle.sin_cos();
        let mut moved = map.map_positions(|p| Point2::new(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty));
        moved.update_distortion(&mesh);
        for (a, b) in map.per_triangle.iter().zip(&moved.per_triangle) {
            prop_assert!((a.sigma1 - b.sigma1).abs() < 1e-9 * a.sigma1.max(1.0));
            prop_assert!((a.sigma2 - b.sigma2).abs() < 1e-9 * a.sigma1.max(1.0));
        }
    }

    #[test]
    fn unwrap_adds_only_seam_duplicates(seam in -7.0f64..7.0, segments in 6usize..40) {
        let mesh = synth::cylinder(10.0, 15.0, segments, 3, false);
        let fit = fit_proxy_kind(&mesh, &z_axis(), ProxyKind::Cylinder).unwrap();
        let map = unwrap_on_proxy(&mesh, &fit, seam).unwrap();
        prop_assert_eq!(map.triangles.len(), mesh.triangles.len());
        prop_assert!(map.check_against(&mesh).is_ok());
        prop_assert!(map.positions.len() <= mesh.vertices.len() + 2 * 4);
        prop_assert!(map.positions.len() > mesh.vertices.len());
    }
}

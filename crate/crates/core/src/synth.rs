//! Synthetic generators with known ground truth: analytic solids, surfaces
//! of revolution, voxel shells and silhouette images.
//!
//! All meshes are outward-oriented (counter-clockwise seen from outside).

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{Point2, Point3, Vector3};

use crate::imaging::Image;
use crate::mesh::TriangleMesh;
use crate::voxel::VoxelGrid;

/// Axis-aligned cube `[0, size]³`, 8 vertices and 12 triangles.
pub fn cube(size: f64) -> TriangleMesh {
    let s = size;
    let vertices = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(s, 0.0, 0.0),
        Point3::new(s, s, 0.0),
        Point3::new(0.0, s, 0.0),
        Point3::new(0.0, 0.0, s),
        Point3::new(s, 0.0, s),
        Point3::new(s, s, s),
        Point3::new(0.0, s, s),
    ];
    let triangles = vec![
        [0, 3, 2],
        [0, 2, 1],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh {
        vertices,
        triangles,
        colors: None,
    }
}

/// Cube `[0, size]³` with every face split into an `n × n` grid.
pub fn subdivided_cube(size: f64, n: usize) -> TriangleMesh {
    let n = n.max(1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |c: [usize; 3], vertices: &mut Vec<Point3<f64>>| -> usize {
        *index.entry(c).or_insert_with(|| {
            vertices.push(Point3::new(
                c[0] as f64 * size / n as f64,
                c[1] as f64 * size / n as f64,
                c[2] as f64 * size / n as f64,
            ));
            vertices.len() - 1
        })
    };
    // (fixed axis, fixed value, u axis, v axis) with u × v pointing outward
    let faces = [
        (2, 0, 1, 0),
        (2, n, 0, 1),
        (1, 0, 0, 2),
        (1, n, 2, 0),
        (0, 0, 2, 1),
        (0, n, 1, 2),
    ];
    for &(fixed, value, u, v) in &faces {
        for i in 0..n {
            for j in 0..n {
                let corner = |di: usize, dj: usize| {
                    let mut c = [0usize; 3];
                    c[fixed] = value;
                    c[u] = i + di;
                    c[v] = j + dj;
                    c
                };
                let a = vid(corner(0, 0), &mut vertices);
                let b = vid(corner(1, 0), &mut vertices);
                let c = vid(corner(1, 1), &mut vertices);
                let d = vid(corner(0, 1), &mut vertices);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        colors: None,
    }
}

/// Icosahedron subdivided `level` times and projected onto a sphere of
/// `radius` centered at the origin. Level `k` has `20·4^k` triangles.
pub fn icosphere(radius: f64, level: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriangleMesh {
        vertices: vertices
            .into_iter()
            .map(|v| Point3::from(v * radius))
            .collect(),
        triangles,
        colors: None,
    }
}

/// Upper half of a geodesic sphere: `icosphere` rotated so that one
/// icosahedron vertex sits at the `+z` pole, keeping triangles whose
/// centroid lies above `z = 0`. Unlike [`hemisphere`] its triangles are
/// near-equilateral everywhere. Level 5 has about 10k triangles.
pub fn geodesic_dome(radius: f64, level: usize) -> TriangleMesh {
    let sphere = icosphere(1.0, level);
    let rot = nalgebra::UnitQuaternion::rotation_between(&sphere.vertices[5].coords, &Vector3::z())
        .expect("pole vertex is not antipodal to +z");
    let rotated: Vec<Point3<f64>> = sphere.vertices.iter().map(|p| rot * p).collect();
    let kept: Vec<[usize; 3]> = sphere
        .triangles
        .into_iter()
        .filter(|t| t.iter().map(|&v| rotated[v].z).sum::<f64>() > 0.0)
        .collect();
    let mut remap = vec![usize::MAX; rotated.len()];
    let mut vertices = Vec::new();
    let triangles = kept
        .iter()
        .map(|t| {
            t.map(|v| {
                if remap[v] == usize::MAX {
                    remap[v] = vertices.len();
                    let mut p = rotated[v] * radius;
                    if v == 5 {
                        p = Point3::new(0.0, 0.0, radius);
                    }
                    vertices.push(p);
                }
                remap[v]
            })
        })
        .collect();
    TriangleMesh {
        vertices,
        triangles,
        colors: None,
    }
}

/// Surface of revolution about the z axis through `(z, r)` samples.
///
/// Samples with `r == 0` become single pole vertices. With `capped`, ends
/// with a positive radius are closed by a fan around a center vertex.
pub fn revolve(profile: &[(f64, f64)], segments: usize, capped: bool) -> TriangleMesh {
    assert!(profile.len() >= 2 && segments >= 3);
    let mut vertices = Vec::new();
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(profile.len());
    for &(z, r) in profile {
        if r <= 0.0 {
            vertices.push(Point3::new(0.0, 0.0, z));
            rings.push(vec![vertices.len() - 1]);
        } else {
            let start = vertices.len();
            for j in 0..segments {
                let theta = TAU * j as f64 / segments as f64;
                vertices.push(Point3::new(r * theta.cos(), r * theta.sin(), z));
            }
            rings.push((start..start + segments).collect());
        }
    }
    let mut triangles = Vec::new();
    for k in 0..rings.len() - 1 {
        let (lo, hi) = (&rings[k], &rings[k + 1]);
        for j in 0..segments {
            let jn = (j + 1) % segments;
            match (lo.len(), hi.len()) {
                (1, 1) => {}
                (1, _) => triangles.push([lo[0], hi[jn], hi[j]]),
                (_, 1) => triangles.push([lo[j], lo[jn], hi[0]]),
                _ => {
                    triangles.push([lo[j], lo[jn], hi[jn]]);
                    triangles.push([lo[j], hi[jn], hi[j]]);
                }
            }
        }
    }
    if capped {
        let first = &rings[0];
        if first.len() > 1 {
            vertices.push(Point3::new(0.0, 0.0, profile[0].0));
            let c = vertices.len() - 1;
            for j in 0..segments {
                triangles.push([c, first[(j + 1) % segments], first[j]]);
            }
        }
        let last = &rings[rings.len() - 1];
        if last.len() > 1 {
            vertices.push(Point3::new(0.0, 0.0, profile[profile.len() - 1].0));
            let c = vertices.len() - 1;
            for j in 0..segments {
                triangles.push([c, last[j], last[(j + 1) % segments]]);
            }
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        colors: None,
    }
}

/// Cylinder of `radius` from z = 0 to z = `height`, `rings` height bands.
pub fn cylinder(
    radius: f64,
    height: f64,
    segments: usize,
    rings: usize,
    capped: bool,
) -> TriangleMesh {
    let rings = rings.max(1);
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|k| (height * k as f64 / rings as f64, radius))
        .collect();
    revolve(&profile, segments, capped)
}

/// Cone with base radius at z = 0 and apex at z = `height`.
pub fn cone(
    base_radius: f64,
    height: f64,
    segments: usize,
    rings: usize,
    capped: bool,
) -> TriangleMesh {
    let rings = rings.max(1);
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|k| {
            let t = k as f64 / rings as f64;
            (height * t, if k == rings { 0.0 } else { base_radius * (1.0 - t) })
        })
        .collect();
    revolve(&profile, segments, capped)
}

/// Frustum band of a cone (no apex): radius `r0` at z = 0 to `r1` at `height`.
pub fn frustum(
    r0: f64,
    r1: f64,
    height: f64,
    segments: usize,
    rings: usize,
) -> TriangleMesh {
    let rings = rings.max(1);
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|k| {
            let t = k as f64 / rings as f64;
            (height * t, r0 + (r1 - r0) * t)
        })
        .collect();
    revolve(&profile, segments, false)
}

/// Open upper hemisphere (dome) of `radius` centered at the origin, with a
/// pole vertex at the top and the boundary on the equator. It has
/// `segments · (2·rings − 1)` triangles.
pub fn hemisphere(radius: f64, segments: usize, rings: usize) -> TriangleMesh {
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|k| {
            let lat = 0.5 * PI * k as f64 / rings as f64;
            if k == rings {
                (radius, 0.0)
            } else {
                (radius * lat.sin(), radius * lat.cos())
            }
        })
        .collect();
    revolve(&profile, segments, false)
}

/// Closed latitude/longitude sphere with pole vertices.
pub fn uv_sphere(radius: f64, segments: usize, rings: usize) -> TriangleMesh {
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|k| {
            let lat = -0.5 * PI + PI * k as f64 / rings as f64;
            if k == 0 || k == rings {
                (radius * lat.sin(), 0.0)
            } else {
                (radius * lat.sin(), radius * lat.cos())
            }
        })
        .collect();
    revolve(&profile, segments, false)
}

/// Open bowl: the lower hemisphere of `radius` centered at the origin with
/// its rim on the z = 0 plane, oriented outward from the cavity it bounds.
pub fn hemispherical_bowl(radius: f64, segments: usize, rings: usize) -> TriangleMesh {
    let profile: Vec<(f64, f64)> = (0..=rings)
        .map(|k| {
            let lat = -0.5 * PI + 0.5 * PI * k as f64 / rings as f64;
            if k == 0 {
                (-radius, 0.0)
            } else {
                (radius * lat.sin(), radius * lat.cos())
            }
        })
        .collect();
    revolve(&profile, segments, false)
}

/// Flat `nx × ny` quad grid in the z = 0 plane.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> TriangleMesh {
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let w = nx + 1;
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let a = j * w + i;
            triangles.push([a, a + 1, a + w + 1]);
            triangles.push([a, a + w + 1, a + w]);
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        colors: None,
    }
}

/// Torus around the z axis.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriangleMesh {
    let mut vertices = Vec::new();
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let rr = major + minor * v.cos();
            vertices.push(Point3::new(rr * u.cos(), rr * u.sin(), minor * v.sin()));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            let a = i * nv + j;
            let b = ((i + 1) % nu) * nv + j;
            let c = ((i + 1) % nu) * nv + (j + 1) % nv;
            let d = i * nv + (j + 1) % nv;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        colors: None,
    }
}

/// Deterministic value in `[-1, 1]` from an integer seed.
fn hash_unit(seed: u64, salt: u64) -> f64 {
    let mut x = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(salt.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    x ^= x >> 31;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 29;
    (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Asymmetric closed blob: an anisotropic icosphere with low-frequency
/// bumps whose phases depend on `seed`. Its principal axes are distinct,
/// which makes it a good registration target.
pub fn blob(radius: f64, level: usize, seed: u64) -> TriangleMesh {
    let base = icosphere(1.0, level);
    let phase: Vec<f64> = (0..6).map(|k| PI * hash_unit(seed, k)).collect();
    base.map_vertices(|p| {
        let d = p.coords;
        let bump = 1.0
            + 0.18 * (2.0 * d.x + phase[0]).sin() * (1.5 * d.y + phase[1]).cos()
            + 0.12 * (3.0 * d.z + phase[2]).sin()
            + 0.10 * (2.5 * d.y + phase[3]).sin() * (d.z + phase[4]).cos()
            + 0.15 * d.x.max(0.0).powi(3);
        let scaled = Vector3::new(1.35 * d.x, 1.0 * d.y, 0.75 * d.z) * (radius * bump);
        Point3::from(scaled + Vector3::new(0.0, 0.0, 0.1 * radius * phase[5].sin()))
    })
}

/// Colors a mesh with a checker pattern in (angle, height) around the z
/// axis, so rollouts have visible structure.
pub fn paint_checker(mesh: &TriangleMesh, cells_around: usize, cell_height: f64) -> TriangleMesh {
    let colors = mesh
        .vertices
        .iter()
        .map(|p| {
            let theta = p.y.atan2(p.x) + PI;
            let a = (theta / TAU * cells_around as f64).floor() as i64;
            let b = (p.z / cell_height).floor() as i64;
            if (a + b).rem_euclid(2) == 0 {
                [0.85, 0.45, 0.2]
            } else {
                [0.1, 0.1, 0.1]
            }
        })
        .collect();
    TriangleMesh {
        colors: Some(colors),
        ..mesh.clone()
    }
}

/// Hollow sphere voxel phantom in an `n³` grid with unit spacing: material
/// (value 100) where `inner ≤ ρ ≤ outer` around the grid center, air (0)
/// elsewhere. With `mouth_radius > 0` a vertical cylindrical opening of that
/// radius is drilled through the top of the shell.
pub fn voxel_hollow_sphere(n: usize, outer: f64, inner: f64, mouth_radius: f64) -> VoxelGrid {
    let c = (n as f64 - 1.0) / 2.0;
    let mut values = vec![0.0f32; n * n * n];
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let (dx, dy, dz) = (x as f64 - c, y as f64 - c, z as f64 - c);
                let rho = (dx * dx + dy * dy + dz * dz).sqrt();
                let in_shell = rho >= inner && rho <= outer;
                let in_mouth = mouth_radius > 0.0 && dz > 0.0 && (dx * dx + dy * dy).sqrt() <= mouth_radius;
                if in_shell && !in_mouth {
                    values[x + n * (y + n * z)] = 100.0;
                }
            }
        }
    }
    VoxelGrid::new([n, n, n], [1.0, 1.0, 1.0], values).expect("valid dims")
}

/// Hollow sphere whose density peaks (value 100) at radius `mid` and falls
/// off linearly by `slope` per voxel on both sides; thresholding at `t`
/// yields a shell of half-thickness `(100 − t)/slope`.
pub fn voxel_graded_shell(n: usize, mid: f64, slope: f64) -> VoxelGrid {
    let c = (n as f64 - 1.0) / 2.0;
    let mut values = vec![0.0f32; n * n * n];
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let (dx, dy, dz) = (x as f64 - c, y as f64 - c, z as f64 - c);
                let rho = (dx * dx + dy * dy + dz * dz).sqrt();
                values[x + n * (y + n * z)] = (100.0 - slope * (rho - mid).abs()).max(0.0) as f32;
            }
        }
    }
    VoxelGrid::new([n, n, n], [1.0, 1.0, 1.0], values).expect("valid dims")
}

/// Closed 2D outline families for retrieval corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlineFamily {
    /// Wide-bodied amphora-like vessel with neck.
    Amphora,
    /// Shallow bowl with foot (kylix-like).
    Kylix,
    /// Tall slender vessel (lekythos-like).
    Lekythos,
}

impl OutlineFamily {
    pub const ALL: [OutlineFamily; 3] = [Self::Amphora, Self::Kylix, Self::Lekythos];

    pub fn name(self) -> &'static str {
        match self {
            Self::Amphora => "amphora",
            Self::Kylix => "kylix",
            Self::Lekythos => "lekythos",
        }
    }

    /// Right-hand half profile `(height, half-width)` pairs, bottom to top,
    /// in unit-ish coordinates, perturbed by `seed`.
    fn half_profile(self, seed: u64) -> Vec<(f64, f64)> {
        let j = |k: u64| 1.0 + 0.06 * hash_unit(seed, k);
        match self {
            Self::Amphora => vec![
                (0.0, 0.22 * j(1)),
                (0.08, 0.2 * j(2)),
                (0.3, 0.42 * j(3)),
                (0.5, 0.48 * j(4)),
                (0.7, 0.36 * j(5)),
                (0.8, 0.16 * j(6)),
                (0.95, 0.15 * j(7)),
                (1.0, 0.22 * j(8)),
            ],
            Self::Kylix => vec![
                (0.0, 0.3 * j(1)),
                (0.05, 0.08 * j(2)),
                (0.22, 0.07 * j(3)),
                (0.3, 0.6 * j(4)),
                (0.42, 0.95 * j(5)),
                (0.46, 1.0 * j(6)),
            ],
            Self::Lekythos => vec![
                (0.0, 0.1 * j(1)),
                (0.05, 0.12 * j(2)),
                (0.1, 0.14 * j(3)),
                (0.65, 0.16 * j(4)),
                (0.7, 0.12 * j(5)),
                (0.78, 0.05 * j(6)),
                (0.92, 0.05 * j(7)),
                (1.0, 0.09 * j(8)),
            ],
        }
    }

    /// Closed outline polygon in image-like coordinates (y down), roughly
    /// unit height, symmetric about x = 0.
    pub fn outline(self, seed: u64) -> Vec<Point2<f64>> {
        let half = self.half_profile(seed);
        let mut pts: Vec<Point2<f64>> = half.iter().map(|&(h, w)| Point2::new(w, -h)).collect();
        pts.extend(half.iter().rev().map(|&(h, w)| Point2::new(-w, -h)));
        pts
    }
}

/// Renders a filled polygon (dark on white) into a `size × size` gray image
/// after rotating by `angle`, scaling to `fill` of the frame and centering.
pub fn render_polygon(poly: &[Point2<f64>], size: usize, angle: f64, fill: f64) -> Image {
    let (s, c) = angle.sin_cos();
    let rotated: Vec<Point2<f64>> = poly
        .iter()
        .map(|p| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y))
        .collect();
    let (mut lo, mut hi) = (
        Point2::new(f64::INFINITY, f64::INFINITY),
        Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in &rotated {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = (hi - lo).max();
    let scale = fill * size as f64 / extent;
    let center = nalgebra::center(&lo, &hi);
    let half = size as f64 / 2.0;
    let mapped: Vec<Point2<f64>> = rotated
        .iter()
        .map(|p| Point2::new((p.x - center.x) * scale + half, (p.y - center.y) * scale + half))
        .collect();
    let mut img = Image::filled_gray(size, size, 1.0);
    crate::imaging::fill_polygon(&mut img, &mapped, 0.0);
    img
}

/// `per_family` silhouettes of every [`OutlineFamily`] as `size × size`
/// images with ids `"{family}-{nn}"`. Members differ in their profile
/// jitter, a small tilt and the frame fill.
pub fn silhouette_corpus(per_family: usize, size: usize) -> Vec<(String, OutlineFamily, Image)> {
    let mut out = Vec::with_capacity(3 * per_family);
    for fam in OutlineFamily::ALL {
        for i in 0..per_family {
            let seed = i as u64;
            let angle = 0.12 * hash_unit(seed, 101);
            let fill = 0.75 + 0.1 * hash_unit(seed, 102);
            let img = render_polygon(&fam.outline(seed), size, angle, fill);
            out.push((format!("{}-{i:02}", fam.name()), fam, img));
        }
    }
    out
}

/// Black disc of `radius` px centered at `(cx, cy)` on a white `w × h` image.
pub fn disc_image(w: usize, h: usize, cx: f64, cy: f64, radius: f64) -> Image {
    let mut img = Image::filled_gray(w, h, 1.0);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= radius * radius {
                img.set_gray(x, y, 0.0);
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_volume, validate_mesh};

    #[test]
    fn generators_are_closed_and_outward() {
        for mesh in [
            cube(10.0),
            subdivided_cube(10.0, 3),
            icosphere(5.0, 2),
            uv_sphere(5.0, 24, 12),
            cylinder(5.0, 10.0, 24, 3, true),
            cone(5.0, 10.0, 24, 3, true),
            torus(10.0, 3.0, 24, 12),
            blob(10.0, 2, 3),
        ] {
            let report = validate_mesh(&mesh);
            assert!(report.is_closed && report.is_manifold, "{report:?}");
            assert!(!mesh_volume(&mesh).unwrap().orientation_flipped);
        }
    }

    #[test]
    fn subdivided_cube_volume() {
        let v = mesh_volume(&subdivided_cube(10.0, 4)).unwrap();
        assert!((v.volume_ml - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hemisphere_triangle_count() {
        assert_eq!(hemisphere(50.0, 100, 50).triangles.len(), 9900);
    }

    #[test]
    fn torus_has_genus_one() {
        assert_eq!(validate_mesh(&torus(10.0, 3.0, 24, 12)).euler_characteristic, 0);
    }

    #[test]
    fn voxel_sphere_counts() {
        let g = voxel_hollow_sphere(32, 12.0, 8.0, 0.0);
        let material = g.values.iter().filter(|&&v| v > 50.0).count() as f64;
        let exact = 4.0 / 3.0 * PI * (12f64.powi(3) - 8f64.powi(3));
        assert!((material - exact).abs() / exact < 0.05);
    }
}

//! Command line front end. Every command prints JSON on stdout.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vaselab_core::capacity::{
    cap_open_rim, capacity_inner_mesh, capacity_mass_density, capacity_offset, volume_of_revolution,
};
use vaselab_core::catalog::Catalog;
use vaselab_core::flatten::{ElasticParams, HeatMetric, ProxyKind};
use vaselab_core::imaging::{egbis_segment, load_image, morph_segment, save_png, EgbisParams, LabelMap, MorphParams};
use vaselab_core::mesh::{estimate_axis, extract_profile, load_mesh, mesh_volume, validate_mesh, TriangleMesh};
use vaselab_core::registration::{detect_series, register_similarity, RegistrationParams, SeriesParams};
use vaselab_core::retrieval::{
    build_index, DescriptorIndex, DescriptorKind, IndexParams, Query, SketchQuery,
};
use vaselab_core::voxel::{cavity_capacity, load_voxels, porosity_stats, CapPlane};

use crate::pipeline::{self, RolloutParams};
use crate::service::{self, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "vaselab", version, about = "Pottery analysis workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh inspection.
    #[command(subcommand)]
    Mesh(MeshCmd),
    /// Unroll a vessel surface onto its proxy and render the flat map.
    Rollout(RolloutArgs),
    /// Proxy unroll followed by elastic relaxation.
    Flatten(FlattenArgs),
    /// Vessel capacity estimates.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Computed tomography volumes.
    #[command(subcommand)]
    Ct(CtCmd),
    /// Align mesh A onto mesh B.
    Register {
        a: PathBuf,
        b: PathBuf,
        /// Estimate a uniform scale factor.
        #[arg(long)]
        scale: bool,
        #[arg(long, default_value_t = 0.8)]
        inlier_fraction: f64,
        /// Include the per-vertex distance map.
        #[arg(long)]
        distances: bool,
    },
    /// Group the meshes of a directory into series of scaled copies.
    Series {
        dir: PathBuf,
        /// Rms limit as a fraction of the bbox diagonal.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
    },
    /// Image segmentation.
    #[command(subcommand)]
    Segment(SegmentCmd),
    /// Print one shape descriptor of an image.
    Descr {
        kind: DescriptorKind,
        image: PathBuf,
    },
    /// Descriptor index over a catalog.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Run the JSON service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum MeshCmd {
    Info { mesh: PathBuf },
    Volume { mesh: PathBuf },
    Axis { mesh: PathBuf },
    Profile {
        mesh: PathBuf,
        #[arg(long, default_value_t = 101)]
        bins: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProxyArg {
    Auto,
    Cyl,
    Cone,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeatArg {
    None,
    Angular,
    Areal,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    pub mesh: PathBuf,
    #[arg(long, value_enum, default_value_t = ProxyArg::Auto)]
    pub proxy: ProxyArg,
    #[arg(long, default_value_t = 180.0, allow_negative_numbers = true)]
    pub seam_deg: f64,
    #[arg(long, default_value_t = 2.0)]
    pub px_per_mm: f64,
    #[arg(long, value_enum, default_value_t = HeatArg::None)]
    pub heat: HeatArg,
    /// PNG written here; the report still goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlattenArgs {
    #[command(flatten)]
    pub rollout: RolloutArgs,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
}

#[derive(Debug, Subcommand)]
pub enum CapacityCmd {
    /// Volume of revolution of the profile.
    Revolve {
        mesh: PathBuf,
        #[arg(long, default_value_t = 101)]
        bins: usize,
    },
    /// Enclosed volume of an inner surface.
    Inner {
        mesh: PathBuf,
        /// Seal the rim with a fan before measuring.
        #[arg(long)]
        cap_rim: bool,
    },
    /// Outer surface offset inward by a wall thickness.
    Offset {
        mesh: PathBuf,
        #[arg(long)]
        thickness: f64,
    },
    /// Outer volume minus the ceramic volume.
    MassDensity {
        mesh: PathBuf,
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        density: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum CtCmd {
    Porosity {
        /// Sidecar JSON header.
        header: PathBuf,
        #[arg(long)]
        threshold: f32,
    },
    Capacity {
        header: PathBuf,
        #[arg(long)]
        threshold: f32,
        /// `a,b,c,d` of the sealing plane `a·x + b·y + c·z + d = 0`.
        #[arg(long, allow_hyphen_values = true)]
        cap_plane: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SegmentCmd {
    Egbis {
        image: PathBuf,
        #[arg(long, default_value_t = 300.0 / 255.0)]
        k: f64,
        #[arg(long, default_value_t = 0.8)]
        sigma: f64,
        #[arg(long, default_value_t = 20)]
        min_size: usize,
        /// Label image (16-bit PNG).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Morph {
        image: PathBuf,
        #[arg(long, default_value_t = 2)]
        close_radius: usize,
        #[arg(long, default_value_t = 20)]
        min_area: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum IndexCmd {
    Build {
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DescriptorKind::ALL)]
        kinds: Vec<DescriptorKind>,
    },
    Query {
        index: PathBuf,
        #[arg(long)]
        kind: DescriptorKind,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, group = "source")]
        image: Option<PathBuf>,
        /// JSON `{polylines, canvas}`.
        #[arg(long, group = "source")]
        sketch: Option<PathBuf>,
        /// Id of an indexed object.
        #[arg(long, group = "source")]
        id: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value = ".vaselab-cache")]
    pub cache_dir: PathBuf,
}

impl RolloutArgs {
    fn params(&self) -> RolloutParams {
        RolloutParams {
            proxy: match self.proxy {
                ProxyArg::Auto => None,
                ProxyArg::Cyl => Some(ProxyKind::Cylinder),
                ProxyArg::Cone => Some(ProxyKind::Cone),
                ProxyArg::Sphere => Some(ProxyKind::Sphere),
            },
            seam_deg: self.seam_deg,
            px_per_mm: self.px_per_mm,
            heat: match self.heat {
                HeatArg::None => None,
                HeatArg::Angular => Some(HeatMetric::Angular),
                HeatArg::Areal => Some(HeatMetric::Areal),
            },
        }
    }
}

fn print(value: &impl Serialize) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    use std::io::Write;
    writeln!(lock)?;
    Ok(())
}

fn mesh(path: &Path) -> anyhow::Result<TriangleMesh> {
    load_mesh(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_plane(s: &str) -> anyhow::Result<CapPlane> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("cap plane `{s}` is not four numbers"))?;
    let [a, b, c, d] = v[..] else {
        bail!("cap plane `{s}` is not four numbers");
    };
    Ok(CapPlane::new(a, b, c, d))
}

#[derive(Serialize)]
struct Segmentation<'a> {
    region_count: usize,
    regions: Vec<vaselab_core::imaging::RegionInfo>,
    labels: Option<&'a Path>,
}

fn segmentation(labels: &LabelMap, out: Option<&Path>) -> anyhow::Result<()> {
    if let Some(p) = out {
        labels.export(p).with_context(|| format!("writing {}", p.display()))?;
    }
    print(&Segmentation {
        region_count: labels.region_count(),
        regions: labels.regions(),
        labels: out,
    })
}

fn mesh_files(dir: &Path) -> anyhow::Result<Vec<(String, TriangleMesh)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("obj" | "ply")
            )
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok((id, mesh(p)?))
        })
        .collect()
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Mesh(cmd) => match cmd {
            MeshCmd::Info { mesh: p } => print(&validate_mesh(&mesh(&p)?)),
            MeshCmd::Volume { mesh: p } => print(&mesh_volume(&mesh(&p)?)?),
            MeshCmd::Axis { mesh: p } => print(&estimate_axis(&mesh(&p)?)?),
            MeshCmd::Profile { mesh: p, bins } => {
                let m = mesh(&p)?;
                let axis = estimate_axis(&m)?;
                print(&extract_profile(&m, &axis, bins)?)
            }
        },
        Command::Rollout(args) => {
            let out = pipeline::rollout(&mesh(&args.mesh)?, &args.params())?;
            if let Some(p) = &args.out {
                save_png(&out.image, p)?;
            }
            print(&out.report)
        }
        Command::Flatten(args) => {
            let elastic = ElasticParams {
                max_iters: args.iters,
                eps: args.eps,
                step: args.step,
            };
            let out = pipeline::flatten(&mesh(&args.rollout.mesh)?, &args.rollout.params(), &elastic)?;
            if let Some(p) = &args.rollout.out {
                save_png(&out.image, p)?;
            }
            print(&out.report)
        }
        Command::Capacity(cmd) => {
            let result = match cmd {
                CapacityCmd::Revolve { mesh: p, bins } => {
                    let m = mesh(&p)?;
                    let axis = estimate_axis(&m)?;
                    volume_of_revolution(&extract_profile(&m, &axis, bins)?)?
                }
                CapacityCmd::Inner { mesh: p, cap_rim } => {
                    let m = mesh(&p)?;
                    let m = if cap_rim { cap_open_rim(&m) } else { m };
                    capacity_inner_mesh(&m)?
                }
                CapacityCmd::Offset { mesh: p, thickness } => capacity_offset(&mesh(&p)?, thickness)?,
                CapacityCmd::MassDensity { mesh: p, mass, density } => {
                    capacity_mass_density(&mesh(&p)?, mass, density)?
                }
            };
            print(&result)
        }
        Command::Ct(cmd) => match cmd {
            CtCmd::Porosity { header, threshold } => {
                let grid = load_voxels(&header).with_context(|| format!("reading {}", header.display()))?;
                print(&porosity_stats(&grid, threshold))
            }
            CtCmd::Capacity {
                header,
                threshold,
                cap_plane,
            } => {
                let grid = load_voxels(&header).with_context(|| format!("reading {}", header.display()))?;
                let plane = cap_plane.as_deref().map(parse_plane).transpose()?;
                print(&cavity_capacity(&grid, threshold, plane)?)
            }
        },
        Command::Register {
            a,
            b,
            scale,
            inlier_fraction,
            distances,
        } => {
            let params = RegistrationParams {
                estimate_scale: scale,
                inlier_fraction,
                ..Default::default()
            };
            let mut r = register_similarity(&mesh(&a)?, &mesh(&b)?, &params)?;
            if !distances {
                r.distance_map.clear();
            }
            print(&r)
        }
        Command::Series { dir, threshold } => {
            let objects = mesh_files(&dir)?;
            let params = SeriesParams {
                shape_threshold: threshold,
                ..Default::default()
            };
            print(&detect_series(&objects, &params)?)
        }
        Command::Segment(cmd) => match cmd {
            SegmentCmd::Egbis {
                image,
                k,
                sigma,
                min_size,
                out,
            } => {
                let img = load_image(&image)?;
                let labels = egbis_segment(&img, &EgbisParams { k, sigma, min_size })?;
                segmentation(&labels, out.as_deref())
            }
            SegmentCmd::Morph {
                image,
                close_radius,
                min_area,
                out,
            } => {
                let img = load_image(&image)?;
                let labels = morph_segment(&img, &MorphParams { close_radius, min_area });
                segmentation(&labels, out.as_deref())
            }
        },
        Command::Descr { kind, image } => {
            let img = load_image(&image).with_context(|| format!("reading {}", image.display()))?;
            let index = DescriptorIndex::from_images(&[("query".into(), img)], &[kind], &IndexParams::default())?;
            match index.entries.first() {
                Some(e) => print(&e.descriptor),
                None => bail!("{}", index.warnings.join("; ")),
            }
        }
        Command::Index(cmd) => match cmd {
            IndexCmd::Build { catalog, out, kinds } => {
                let catalog = Catalog::load(&catalog)?;
                let index = build_index(&catalog.records, &catalog.base_dir, &kinds, &IndexParams::default())?;
                index.save(&out)?;
                print(&index.manifest())
            }
            IndexCmd::Query {
                index,
                kind,
                k,
                image,
                sketch,
                id,
            } => {
                let index = DescriptorIndex::load(&index)?;
                let result = if let Some(p) = image {
                    index.query(&Query::Image(&load_image(&p)?), kind, k)?
                } else if let Some(p) = sketch {
                    let bytes = std::fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
                    let q: SketchQuery = serde_json::from_slice(&bytes)?;
                    index.query(&Query::Sketch(&q), kind, k)?
                } else if let Some(id) = id {
                    index.query_id(&id, kind, k)?
                } else {
                    bail!("one of --image, --sketch or --id is required");
                };
                print(&result)
            }
        },
        Command::Serve(args) => {
            let config = ServiceConfig {
                port: args.port,
                catalog: args.catalog,
                index: args.index,
                static_dir: args.static_dir,
                cache_dir: args.cache_dir,
            };
            config.validate()?;
            tokio::runtime::Runtime::new()?.block_on(service::serve(config))
        }
    }
}

/// Parses the process arguments and runs; returns the exit code.
pub fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

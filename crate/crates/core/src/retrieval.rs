//! Descriptor index, ranked queries and ranking evaluation.
//!
//! Every query is an exhaustive scan: the query descriptor is compared with
//! each indexed descriptor of the requested kind, results are sorted by
//! ascending distance and ties go to the smaller object id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Point2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::CatalogRecord;
use crate::imaging::{
    self, fill_polygon, hog, scd, scd_distance, shape_context, shape_context_set_cost, silhouette, Contour,
    HogDescriptor, HogParams, Image, ImagingError, ScdParams, ShapeContextParams, ShapeContextSet,
    SilhouetteDescriptor, DEFAULT_CONTOUR_POINTS,
};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("catalog has no records")]
    EmptyCatalog,
    #[error("no descriptor kinds requested")]
    NoKinds,
    #[error("index holds no {0} descriptors")]
    KindMissing(DescriptorKind),
    #[error("degenerate sketch: {0}")]
    DegenerateSketch(String),
    #[error("truth does not cover the result: {0}")]
    TruthMismatch(String),
    #[error("unknown object id `{0}`")]
    UnknownId(String),
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = RetrievalError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Hog,
    Scd,
    Sc,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 3] = [Self::Hog, Self::Scd, Self::Sc];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hog => "hog",
            Self::Scd => "scd",
            Self::Sc => "sc",
        }
    }

    fn code(self) -> u8 {
        match self {
            Self::Hog => 0,
            Self::Scd => 1,
            Self::Sc => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == c)
    }
}

impl std::fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DescriptorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hog" => Ok(Self::Hog),
            "scd" => Ok(Self::Scd),
            "sc" => Ok(Self::Sc),
            other => Err(format!("unknown descriptor kind `{other}` (hog, scd, sc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    pub hog: HogParams,
    pub scd: ScdParams,
    pub sc: ShapeContextParams,
    /// Points traced along a silhouette before the SCD and SC resampling.
    pub contour_points: usize,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            hog: HogParams::default(),
            scd: ScdParams::default(),
            sc: ShapeContextParams::default(),
            contour_points: DEFAULT_CONTOUR_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Descriptor {
    Hog(HogDescriptor),
    Scd(SilhouetteDescriptor),
    Sc(ShapeContextSet),
}

impl Descriptor {
    pub fn kind(&self) -> DescriptorKind {
        match self {
            Self::Hog(_) => DescriptorKind::Hog,
            Self::Scd(_) => DescriptorKind::Scd,
            Self::Sc(_) => DescriptorKind::Sc,
        }
    }

    /// Metric of the kind: Euclidean for HOG, the shift and reflection
    /// minimized L1 for SCD, mean matched χ² for Shape Context.
    ///
    /// # Panics
    /// When the two descriptors have different kinds.
    pub fn distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Hog(a), Self::Hog(b)) => a.distance(b),
            (Self::Scd(a), Self::Scd(b)) => scd_distance(a, b),
            (Self::Sc(a), Self::Sc(b)) => shape_context_set_cost(a, b),
            _ => panic!("distance between {} and {} descriptors", self.kind(), other.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub object_id: String,
    pub descriptor: Descriptor,
}

/// Immutable once built. Entries are sorted by kind, then object id.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorIndex {
    pub params: IndexParams,
    pub kinds: BTreeSet<DescriptorKind>,
    pub entries: Vec<IndexEntry>,
    /// Objects that could not be described, one line each.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub kind: DescriptorKind,
    pub results: Vec<Hit>,
}

impl RankedResult {
    pub fn ids(&self) -> Vec<&str> {
        self.results.iter().map(|h| h.id.as_str()).collect()
    }
}

/// Freehand strokes in canvas pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchQuery {
    pub polylines: Vec<Vec<[f64; 2]>>,
    pub canvas: Canvas,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
}

pub enum Query<'a> {
    Image(&'a Image),
    Sketch(&'a SketchQuery),
    Contour(&'a Contour),
}

fn describe_image(img: &Image, kind: DescriptorKind, params: &IndexParams) -> Result<Descriptor> {
    Ok(match kind {
        DescriptorKind::Hog => Descriptor::Hog(hog(img, &params.hog)),
        DescriptorKind::Scd => Descriptor::Scd(scd(&silhouette(img, params.contour_points)?, &params.scd)?),
        DescriptorKind::Sc => Descriptor::Sc(shape_context(&silhouette(img, params.contour_points)?, &params.sc)?),
    })
}

fn describe_contour(c: &Contour, kind: DescriptorKind, params: &IndexParams) -> Result<Descriptor> {
    Ok(match kind {
        DescriptorKind::Hog => Descriptor::Hog(hog(&contour_image(c, params.hog.canonical_size)?, &params.hog)),
        DescriptorKind::Scd => Descriptor::Scd(scd(c, &params.scd)?),
        DescriptorKind::Sc => Descriptor::Sc(shape_context(c, &params.sc)?),
    })
}

/// Filled contour, dark on white, framed like a rasterized sketch.
fn contour_image(c: &Contour, size: usize) -> Result<Image> {
    let (lo, hi) = bounds(c.points.iter());
    let extent = (hi - lo).max();
    if !(extent > 0.0) {
        return Err(RetrievalError::DegenerateSketch("contour has no extent".into()));
    }
    let scale = size as f64 / (extent * (1.0 + 2.0 * SKETCH_MARGIN));
    let center = nalgebra::center(&lo, &hi);
    let half = size as f64 / 2.0;
    let poly: Vec<Point2<f64>> = c
        .points
        .iter()
        .map(|p| Point2::new((p.x - center.x) * scale + half, (p.y - center.y) * scale + half))
        .collect();
    let mut img = Image::filled_gray(size, size, 1.0);
    fill_polygon(&mut img, &poly, 0.0);
    Ok(img)
}

fn bounds<'a>(pts: impl Iterator<Item = &'a Point2<f64>>) -> (Point2<f64>, Point2<f64>) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

impl DescriptorIndex {
    /// Describes in-memory images. Objects whose description fails for a
    /// kind are skipped for that kind and listed in `warnings`.
    pub fn from_images(
        images: &[(String, Image)],
        kinds: &[DescriptorKind],
        params: &IndexParams,
    ) -> Result<Self> {
        if images.is_empty() {
            return Err(RetrievalError::EmptyCatalog);
        }
        if kinds.is_empty() {
            return Err(RetrievalError::NoKinds);
        }
        let kinds: BTreeSet<DescriptorKind> = kinds.iter().copied().collect();
        let jobs: Vec<(usize, DescriptorKind)> =
            kinds.iter().flat_map(|&k| (0..images.len()).map(move |i| (i, k))).collect();
        let described: Vec<_> = jobs
            .par_iter()
            .map(|&(i, kind)| (i, kind, describe_image(&images[i].1, kind, params)))
            .collect();
        let mut entries = Vec::new();
        let mut warnings = Vec::new();
        for (i, kind, res) in described {
            match res {
                Ok(descriptor) => entries.push(IndexEntry {
                    object_id: images[i].0.clone(),
                    descriptor,
                }),
                Err(e) => warnings.push(format!("{}: {kind} skipped: {e}", images[i].0)),
            }
        }
        Self::assemble(*params, kinds, entries, warnings)
    }

    fn assemble(
        params: IndexParams,
        kinds: BTreeSet<DescriptorKind>,
        mut entries: Vec<IndexEntry>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        entries.sort_by(|a, b| {
            (a.descriptor.kind(), &a.object_id).cmp(&(b.descriptor.kind(), &b.object_id))
        });
        if let Some(w) = entries.windows(2).find(|w| {
            w[0].descriptor.kind() == w[1].descriptor.kind() && w[0].object_id == w[1].object_id
        }) {
            return Err(RetrievalError::Corrupt(format!(
                "object `{}` indexed twice for {}",
                w[0].object_id,
                w[0].descriptor.kind()
            )));
        }
        Ok(Self {
            params,
            kinds,
            entries,
            warnings,
        })
    }

    pub fn entries_of(&self, kind: DescriptorKind) -> &[IndexEntry] {
        let start = self.entries.partition_point(|e| e.descriptor.kind() < kind);
        let end = self.entries.partition_point(|e| e.descriptor.kind() <= kind);
        &self.entries[start..end]
    }

    pub fn get(&self, id: &str, kind: DescriptorKind) -> Option<&Descriptor> {
        let entries = self.entries_of(kind);
        entries
            .binary_search_by(|e| e.object_id.as_str().cmp(id))
            .ok()
            .map(|i| &entries[i].descriptor)
    }

    /// Distinct object ids with at least one descriptor, sorted.
    pub fn object_ids(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.iter().map(|e| &e.object_id).collect();
        set.into_iter().cloned().collect()
    }

    pub fn describe(&self, q: &Query<'_>, kind: DescriptorKind) -> Result<Descriptor> {
        match q {
            Query::Image(img) => describe_image(img, kind, &self.params),
            Query::Sketch(s) => describe_image(&rasterize_sketch(s, self.params.hog.canonical_size)?, kind, &self.params),
            Query::Contour(c) => describe_contour(c, kind, &self.params),
        }
    }

    pub fn query(&self, q: &Query<'_>, kind: DescriptorKind, k: usize) -> Result<RankedResult> {
        if self.entries_of(kind).is_empty() {
            return Err(RetrievalError::KindMissing(kind));
        }
        let d = self.describe(q, kind)?;
        self.rank(&d, k)
    }

    /// Ranks against the stored descriptor of an indexed object.
    pub fn query_id(&self, id: &str, kind: DescriptorKind, k: usize) -> Result<RankedResult> {
        if self.entries_of(kind).is_empty() {
            return Err(RetrievalError::KindMissing(kind));
        }
        let d = self.get(id, kind).ok_or_else(|| RetrievalError::UnknownId(id.to_string()))?;
        self.rank(d, k)
    }

    pub fn rank(&self, descriptor: &Descriptor, k: usize) -> Result<RankedResult> {
        self.rank_by(descriptor, k, |d| d)
    }

    /// Ranks by `transform(distance)`.
    pub fn rank_by(&self, descriptor: &Descriptor, k: usize, transform: impl Fn(f64) -> f64 + Sync) -> Result<RankedResult> {
        let kind = descriptor.kind();
        let entries = self.entries_of(kind);
        if entries.is_empty() {
            return Err(RetrievalError::KindMissing(kind));
        }
        let mut results: Vec<Hit> = entries
            .par_iter()
            .map(|e| Hit {
                id: e.object_id.clone(),
                score: transform(descriptor.distance(&e.descriptor)),
            })
            .collect();
        results.sort_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.id.cmp(&b.id)));
        results.truncate(k);
        Ok(RankedResult { kind, results })
    }

    /// Symmetric matrix of distances between all objects of `kind`, in
    /// entry order. The entry with the smaller id is always the left
    /// argument.
    pub fn distance_matrix(&self, kind: DescriptorKind) -> Result<(Vec<String>, Vec<f64>)> {
        let entries = self.entries_of(kind);
        if entries.is_empty() {
            return Err(RetrievalError::KindMissing(kind));
        }
        let n = entries.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let dists: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| entries[i].descriptor.distance(&entries[j].descriptor))
            .collect();
        let mut m = vec![0.0; n * n];
        for (&(i, j), d) in pairs.iter().zip(dists) {
            m[i * n + j] = d;
            m[j * n + i] = d;
        }
        Ok((entries.iter().map(|e| e.object_id.clone()).collect(), m))
    }
}

/// Describes the first image of every record. Relative image paths are
/// resolved against `base_dir`. Records without a readable image are
/// skipped with a warning.
pub fn build_index(
    records: &[CatalogRecord],
    base_dir: &Path,
    kinds: &[DescriptorKind],
    params: &IndexParams,
) -> Result<DescriptorIndex> {
    if records.is_empty() {
        return Err(RetrievalError::EmptyCatalog);
    }
    if kinds.is_empty() {
        return Err(RetrievalError::NoKinds);
    }
    let mut warnings = Vec::new();
    let mut images = Vec::new();
    for r in records {
        let Some(rel) = r.image_paths.first() else {
            warnings.push(format!("{}: no image", r.id));
            continue;
        };
        let path = base_dir.join(rel);
        match imaging::load_image(&path) {
            Ok(img) => images.push((r.id.clone(), img)),
            Err(e) => {
                log::warn!("{}: cannot read {}: {e}", r.id, path.display());
                warnings.push(format!("{}: cannot read {}: {e}", r.id, path.display()));
            }
        }
    }
    if images.is_empty() {
        let kinds = kinds.iter().copied().collect();
        return DescriptorIndex::assemble(*params, kinds, Vec::new(), warnings);
    }
    let mut index = DescriptorIndex::from_images(&images, kinds, params)?;
    warnings.append(&mut index.warnings);
    index.warnings = warnings;
    Ok(index)
}

/// Sketch framing margin on each side, relative to the larger side of the
/// inked bounding box.
const SKETCH_MARGIN: f64 = 0.1;

/// Scan-converts the strokes at 1 px (dark on white). A polyline whose
/// endpoints lie within 2% of the canvas diagonal is closed and its
/// interior filled. The inked region, padded by 10% of its larger side,
/// is then letterboxed into a `size × size` frame.
pub fn rasterize_sketch(q: &SketchQuery, size: usize) -> Result<Image> {
    let Canvas { width, height } = q.canvas;
    if width == 0 || height == 0 || size == 0 {
        return Err(RetrievalError::DegenerateSketch("empty canvas".into()));
    }
    if q.polylines.is_empty() {
        return Err(RetrievalError::DegenerateSketch("no strokes".into()));
    }
    let mut lines = Vec::with_capacity(q.polylines.len());
    for (i, line) in q.polylines.iter().enumerate() {
        if line.len() < 2 {
            return Err(RetrievalError::DegenerateSketch(format!("stroke {i} has fewer than 2 points")));
        }
        if line.iter().flatten().any(|v| !v.is_finite()) {
            return Err(RetrievalError::DegenerateSketch(format!("stroke {i} has a non-finite point")));
        }
        lines.push(line.iter().map(|p| Point2::new(p[0], p[1])).collect::<Vec<_>>());
    }
    let (lo, hi) = bounds(lines.iter().flatten());
    if (hi - lo).max() <= 0.0 {
        return Err(RetrievalError::DegenerateSketch("all points coincide".into()));
    }
    let diag = ((width * width + height * height) as f64).sqrt();
    let mut img = Image::filled_gray(width, height, 1.0);
    for line in &lines {
        let closed = (line[0] - line[line.len() - 1]).norm() <= 0.02 * diag;
        if closed && line.len() >= 3 {
            fill_polygon(&mut img, line, 0.0);
        }
        let mut segs: Vec<(Point2<f64>, Point2<f64>)> = line.windows(2).map(|w| (w[0], w[1])).collect();
        if closed {
            segs.push((line[line.len() - 1], line[0]));
        }
        for (a, b) in segs {
            draw_segment(&mut img, a, b);
        }
    }
    let Some((x0, y0, x1, y1)) = ink_bounds(&img) else {
        return Err(RetrievalError::DegenerateSketch("strokes lie outside the canvas".into()));
    };
    let side = (x1 - x0 + 1).max(y1 - y0 + 1) as f64;
    let pad = (SKETCH_MARGIN * side).round() as usize;
    let (cw, ch) = (x1 - x0 + 1 + 2 * pad, y1 - y0 + 1 + 2 * pad);
    let mut crop = Image::filled_gray(cw, ch, 1.0);
    for y in y0..=y1 {
        for x in x0..=x1 {
            crop.set_gray(x - x0 + pad, y - y0 + pad, img.gray(x, y));
        }
    }
    Ok(crop.letterbox_gray(size))
}

/// Sets every pixel the segment passes within half a pixel of, along its
/// major direction.
fn draw_segment(img: &mut Image, a: Point2<f64>, b: Point2<f64>) {
    let steps = ((b - a).abs().max() * 2.0).ceil().max(1.0) as usize;
    for s in 0..=steps {
        let p = a + (b - a) * (s as f64 / steps as f64);
        let (x, y) = (p.x.round(), p.y.round());
        if x >= 0.0 && y >= 0.0 && (x as usize) < img.width && (y as usize) < img.height {
            img.set_gray(x as usize, y as usize, 0.0);
        }
    }
}

fn ink_bounds(img: &Image) -> Option<(usize, usize, usize, usize)> {
    let mut b: Option<(usize, usize, usize, usize)> = None;
    for y in 0..img.height {
        for x in 0..img.width {
            if img.gray(x, y) < 0.5 {
                b = Some(match b {
                    None => (x, y, x, y),
                    Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                });
            }
        }
    }
    b
}

/// Ground truth for a ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    /// Relevance label for every ranked id.
    Labels(BTreeMap<String, bool>),
    /// An expert ranking, best first, containing every ranked id.
    ExpertOrder(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    /// `(k, precision@k)` for k = 5, 10, 20.
    pub precision: Vec<(usize, f64)>,
    /// Rank correlation with the expert order; `None` for labels or fewer
    /// than two results.
    pub spearman: Option<f64>,
}

impl RankingMetrics {
    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.precision.iter().find(|p| p.0 == k).map(|p| p.1)
    }
}

pub const PRECISION_CUTOFFS: [usize; 3] = [5, 10, 20];

/// Precision@k counts relevant ids among the first k results and divides
/// by k. Against an expert order the relevant set at cutoff k is the
/// expert's top k. Spearman compares the result order with the expert
/// order restricted to the ranked ids.
pub fn evaluate_ranking(result: &RankedResult, truth: &Truth) -> Result<RankingMetrics> {
    let ids = result.ids();
    let mut seen = BTreeSet::new();
    if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
        return Err(RetrievalError::TruthMismatch(format!("`{dup}` ranked twice")));
    }
    match truth {
        Truth::Labels(labels) => {
            if let Some(missing) = ids.iter().find(|id| !labels.contains_key(**id)) {
                return Err(RetrievalError::TruthMismatch(format!("no label for `{missing}`")));
            }
            let precision = PRECISION_CUTOFFS
                .iter()
                .map(|&k| {
                    let hits = ids.iter().take(k).filter(|id| labels[**id]).count();
                    (k, hits as f64 / k as f64)
                })
                .collect();
            Ok(RankingMetrics {
                precision,
                spearman: None,
            })
        }
        Truth::ExpertOrder(order) => {
            let pos: HashMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            if pos.len() != order.len() {
                return Err(RetrievalError::TruthMismatch("expert order repeats an id".into()));
            }
            if let Some(missing) = ids.iter().find(|id| !pos.contains_key(**id)) {
                return Err(RetrievalError::TruthMismatch(format!("`{missing}` not in expert order")));
            }
            let precision = PRECISION_CUTOFFS
                .iter()
                .map(|&k| {
                    let hits = ids.iter().take(k).filter(|id| pos[**id] < k).count();
                    (k, hits as f64 / k as f64)
                })
                .collect();
            let n = ids.len();
            let spearman = (n >= 2).then(|| {
                let mut expert: Vec<usize> = (0..n).collect();
                expert.sort_by_key(|&i| pos[ids[i]]);
                let mut expert_rank = vec![0usize; n];
                for (r, &i) in expert.iter().enumerate() {
                    expert_rank[i] = r;
                }
                let d2: f64 = (0..n).map(|i| (i as f64 - expert_rank[i] as f64).powi(2)).sum();
                let n = n as f64;
                1.0 - 6.0 * d2 / (n * (n * n - 1.0))
            });
            Ok(RankingMetrics { precision, spearman })
        }
    }
}

pub const INDEX_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"VSLBIDX\0";

/// JSON sidecar describing a binary index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format_version: u32,
    pub kinds: Vec<DescriptorKind>,
    pub params: IndexParams,
    pub object_ids: Vec<String>,
    pub entry_count: usize,
    pub warnings: Vec<String>,
}

impl DescriptorIndex {
    pub fn manifest(&self) -> IndexManifest {
        IndexManifest {
            format_version: INDEX_FORMAT_VERSION,
            kinds: self.kinds.iter().copied().collect(),
            params: self.params,
            object_ids: self.object_ids(),
            entry_count: self.entries.len(),
            warnings: self.warnings.clone(),
        }
    }

    /// Writes the binary index to `path` and its manifest next to it with
    /// a `.json` extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut out)?;
        out.flush()?;
        let json = serde_json::to_vec_pretty(&self.manifest()).expect("manifest serializes");
        std::fs::write(manifest_path(path), json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let manifest: IndexManifest = serde_json::from_slice(&std::fs::read(manifest_path(path))?)
            .map_err(|e| RetrievalError::Corrupt(format!("manifest: {e}")))?;
        if manifest.format_version != INDEX_FORMAT_VERSION {
            return Err(RetrievalError::Corrupt(format!(
                "manifest version {} (expected {INDEX_FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
        let index = Self::read_binary(&mut input, manifest.params, manifest.warnings.clone())?;
        if index.entries.len() != manifest.entry_count
            || index.object_ids() != manifest.object_ids
            || index.kinds.iter().copied().collect::<Vec<_>>() != manifest.kinds
        {
            return Err(RetrievalError::Corrupt("manifest does not match the binary index".into()));
        }
        Ok(index)
    }

    /// Little-endian layout: magic, version, kind set, entry count, then
    /// per entry its kind code, id, and payload (dimensions then `f64`s).
    pub fn write_binary(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&INDEX_FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&[self.kinds.len() as u8])?;
        for k in &self.kinds {
            out.write_all(&[k.code()])?;
        }
        out.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        for e in &self.entries {
            out.write_all(&[e.descriptor.kind().code()])?;
            write_u64(out, e.object_id.len() as u64)?;
            out.write_all(e.object_id.as_bytes())?;
            let (rows, cols, values): (usize, usize, Vec<f64>) = match &e.descriptor {
                Descriptor::Hog(d) => (1, d.values.len(), d.values.clone()),
                Descriptor::Scd(d) => (d.scales, d.n, d.values.clone()),
                Descriptor::Sc(d) => (
                    d.histograms.len(),
                    d.histograms.first().map_or(0, Vec::len),
                    d.histograms.concat(),
                ),
            };
            write_u64(out, rows as u64)?;
            write_u64(out, cols as u64)?;
            for v in values {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(input: &mut impl Read, params: IndexParams, warnings: Vec<String>) -> Result<Self> {
        let corrupt = |m: &str| RetrievalError::Corrupt(m.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut v = [0u8; 4];
        input.read_exact(&mut v)?;
        let version = u32::from_le_bytes(v);
        if version != INDEX_FORMAT_VERSION {
            return Err(RetrievalError::Corrupt(format!("binary version {version}")));
        }
        let nk = read_u8(input)?;
        let mut kinds = BTreeSet::new();
        for _ in 0..nk {
            kinds.insert(DescriptorKind::from_code(read_u8(input)?).ok_or_else(|| corrupt("bad kind"))?);
        }
        let n = read_u64(input)?;
        let mut entries = Vec::new();
        for _ in 0..n {
            let kind = DescriptorKind::from_code(read_u8(input)?).ok_or_else(|| corrupt("bad kind"))?;
            let len = read_u64(input)? as usize;
            if len > 1 << 20 {
                return Err(corrupt("object id too long"));
            }
            let mut id = vec![0u8; len];
            input.read_exact(&mut id)?;
            let object_id = String::from_utf8(id).map_err(|_| corrupt("object id is not UTF-8"))?;
            let rows = read_u64(input)? as usize;
            let cols = read_u64(input)? as usize;
            let count = rows.checked_mul(cols).filter(|&c| c <= 1 << 28).ok_or_else(|| corrupt("payload too large"))?;
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                let mut b = [0u8; 8];
                input.read_exact(&mut b)?;
                values.push(f64::from_le_bytes(b));
            }
            let descriptor = match kind {
                DescriptorKind::Hog => Descriptor::Hog(HogDescriptor {
                    params: params.hog,
                    values,
                }),
                DescriptorKind::Scd => Descriptor::Scd(SilhouetteDescriptor {
                    n: cols,
                    scales: rows,
                    values,
                }),
                DescriptorKind::Sc => Descriptor::Sc(ShapeContextSet {
                    params: params.sc,
                    histograms: if cols == 0 {
                        vec![Vec::new(); rows]
                    } else {
                        values.chunks(cols).map(<[f64]>::to_vec).collect()
                    },
                }),
            };
            entries.push(IndexEntry { object_id, descriptor });
        }
        Self::assemble(params, kinds, entries, warnings)
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_u64(out: &mut impl Write, v: u64) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn read_u8(input: &mut impl Read) -> std::io::Result<u8> {
    let mut b = [0u8; 1];
    input.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u64(input: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

//! Object catalog, shape-similarity graph and linked selections across the
//! map, timeline and graph views.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieval::{DescriptorIndex, DescriptorKind, RetrievalError};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog is not a JSON array: {0}")]
    NotAnArray(String),
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
    #[error("duplicate id `{id}` (records {first} and {second})")]
    DuplicateId { id: String, first: usize, second: usize },
    #[error("unknown object id `{0}`")]
    UnknownId(String),
    #[error("invalid selector: {0}")]
    InvalidSelector(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

pub type Result<T, E = CatalogError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Findspot {
    pub lat: f64,
    pub lon: f64,
    pub place: String,
}

/// Years are signed integers, negative for BC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRecord {
    pub id: String,
    pub name: String,
    pub collection: String,
    pub shape_class: String,
    pub date_from: i32,
    pub date_to: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub findspot: Option<Findspot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fabric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_g_per_ml: Option<f64>,
    #[serde(default)]
    pub image_paths: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voxel_path: Option<PathBuf>,
}

impl CatalogRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id is empty".into());
        }
        if self.date_from > self.date_to {
            return Err(format!("date_from {} is after date_to {}", self.date_from, self.date_to));
        }
        if let Some(f) = &self.findspot {
            if !(-90.0..=90.0).contains(&f.lat) {
                return Err(format!("latitude {} outside [-90, 90]", f.lat));
            }
            if !(-180.0..=180.0).contains(&f.lon) {
                return Err(format!("longitude {} outside [-180, 180]", f.lon));
            }
        }
        for (name, v) in [("mass_g", self.mass_g), ("density_g_per_ml", self.density_g_per_ml)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("{name} must be positive, got {v}"));
                }
            }
        }
        Ok(())
    }

    pub fn overlaps(&self, from: i32, to: i32) -> bool {
        self.date_from <= to && from <= self.date_to
    }
}

/// Parses and validates a catalog. Nothing is returned unless every record
/// is valid.
pub fn parse_catalog(json: &[u8]) -> Result<Vec<CatalogRecord>> {
    let value: serde_json::Value = serde_json::from_slice(json).map_err(|e| CatalogError::NotAnArray(e.to_string()))?;
    let serde_json::Value::Array(items) = value else {
        return Err(CatalogError::NotAnArray("top-level value is not an array".into()));
    };
    let mut records = Vec::with_capacity(items.len());
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (index, item) in items.into_iter().enumerate() {
        let record: CatalogRecord =
            serde_json::from_value(item).map_err(|e| CatalogError::Record {
                index,
                message: e.to_string(),
            })?;
        record.validate().map_err(|message| CatalogError::Record { index, message })?;
        if let Some(&first) = seen.get(&record.id) {
            return Err(CatalogError::DuplicateId {
                id: record.id,
                first,
                second: index,
            });
        }
        seen.insert(record.id.clone(), index);
        records.push(record);
    }
    Ok(records)
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Vec<CatalogRecord>> {
    parse_catalog(&std::fs::read(path)?)
}

pub fn write_catalog(records: &[CatalogRecord], path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_vec_pretty(records).expect("records serialize");
    std::fs::write(path, json)?;
    Ok(())
}

/// Records plus the directory their relative media paths refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub records: Vec<CatalogRecord>,
    pub base_dir: PathBuf,
    by_id: BTreeMap<String, usize>,
}

impl Catalog {
    pub fn new(records: Vec<CatalogRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|message| CatalogError::Record { index: i, message })?;
            if let Some(first) = by_id.insert(r.id.clone(), i) {
                return Err(CatalogError::DuplicateId {
                    id: r.id.clone(),
                    first,
                    second: i,
                });
            }
        }
        Ok(Self {
            records,
            base_dir: base_dir.into(),
            by_id,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(ingest(path)?, base)
    }

    pub fn get(&self, id: &str) -> Option<&CatalogRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.by_id.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

/// Undirected; every edge is stored once with `a < b`, edges sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    pub kind: DescriptorKind,
    pub k: usize,
    pub nodes: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

impl SimilarityGraph {
    pub fn neighbors(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut adj: BTreeMap<&str, BTreeSet<&str>> = self.nodes.iter().map(|n| (n.as_str(), BTreeSet::new())).collect();
        for e in &self.edges {
            adj.entry(&e.a).or_default().insert(&e.b);
            adj.entry(&e.b).or_default().insert(&e.a);
        }
        adj
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.edges.iter().any(|e| e.a == a && e.b == b)
    }
}

/// Every object links to its `k` nearest others (ties by id); the directed
/// links are merged into an undirected edge set. `k` is clamped to `n − 1`.
pub fn build_similarity_graph(index: &DescriptorIndex, kind: DescriptorKind, k: usize) -> Result<SimilarityGraph> {
    let (ids, dist) = index.distance_matrix(kind)?;
    let n = ids.len();
    let k = k.min(n.saturating_sub(1));
    let mut edges = BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&x, &y| dist[i * n + x].total_cmp(&dist[i * n + y]).then(ids[x].cmp(&ids[y])));
        for &j in others.iter().take(k) {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    Ok(SimilarityGraph {
        kind,
        k,
        nodes: ids.clone(),
        edges: edges
            .into_iter()
            .map(|(i, j)| GraphEdge {
                a: ids[i].clone(),
                b: ids[j].clone(),
                weight: dist[i * n + j],
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Selector {
    Ids { ids: Vec<String> },
    /// Records whose dating interval overlaps `[from, to]`.
    DateInterval { from: i32, to: i32 },
    /// Inclusive; `min_lon > max_lon` wraps across the antimeridian.
    GeoBbox {
        min_lat: f64,
        min_lon: f64,
        max_lat: f64,
        max_lon: f64,
    },
    GraphHops { node: String, hops: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub id: String,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub place: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineInterval {
    pub id: String,
    pub from: i32,
    pub to: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub selected: bool,
    /// Not selected but one hop from a selected node.
    pub context: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNeighborhood {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// Records without a findspot appear in `map` with null coordinates so
/// all three views carry the same ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedSelection {
    pub selected_ids: Vec<String>,
    pub map: Vec<MapPoint>,
    pub timeline: Vec<TimelineInterval>,
    pub graph: GraphNeighborhood,
}

pub fn resolve_selector(catalog: &Catalog, graph: &SimilarityGraph, selector: &Selector) -> Result<BTreeSet<String>> {
    let records = &catalog.records;
    Ok(match selector {
        Selector::Ids { ids } => {
            for id in ids {
                if !catalog.contains(id) {
                    return Err(CatalogError::UnknownId(id.clone()));
                }
            }
            ids.iter().cloned().collect()
        }
        Selector::DateInterval { from, to } => {
            if from > to {
                return Err(CatalogError::InvalidSelector(format!("from {from} is after to {to}")));
            }
            records.iter().filter(|r| r.overlaps(*from, *to)).map(|r| r.id.clone()).collect()
        }
        &Selector::GeoBbox {
            min_lat,
            min_lon,
            max_lat,
            max_lon,
        } => {
            let ok = [min_lat, max_lat].iter().all(|v| (-90.0..=90.0).contains(v))
                && [min_lon, max_lon].iter().all(|v| (-180.0..=180.0).contains(v))
                && min_lat <= max_lat;
            if !ok {
                return Err(CatalogError::InvalidSelector("bbox outside the globe or inverted".into()));
            }
            records
                .iter()
                .filter(|r| {
                    r.findspot.as_ref().is_some_and(|f| {
                        let lon_in = if min_lon <= max_lon {
                            (min_lon..=max_lon).contains(&f.lon)
                        } else {
                            f.lon >= min_lon || f.lon <= max_lon
                        };
                        (min_lat..=max_lat).contains(&f.lat) && lon_in
                    })
                })
                .map(|r| r.id.clone())
                .collect()
        }
        Selector::GraphHops { node, hops } => {
            let adj = graph.neighbors();
            if !adj.contains_key(node.as_str()) {
                return Err(CatalogError::UnknownId(node.clone()));
            }
            let mut seen = BTreeSet::from([node.as_str()]);
            let mut queue = VecDeque::from([(node.as_str(), 0usize)]);
            while let Some((v, d)) = queue.pop_front() {
                if d == *hops {
                    continue;
                }
                for &w in &adj[v] {
                    if seen.insert(w) {
                        queue.push_back((w, d + 1));
                    }
                }
            }
            seen.into_iter().map(str::to_string).collect()
        }
    })
}

/// Resolves `selector` and builds the three view payloads over the same
/// id set. The graph payload adds unselected one-hop neighbors as context.
pub fn linked_selection(catalog: &Catalog, graph: &SimilarityGraph, selector: &Selector) -> Result<LinkedSelection> {
    let selected = resolve_selector(catalog, graph, selector)?;
    let records: Vec<&CatalogRecord> = selected
        .iter()
        .map(|id| catalog.get(id).ok_or_else(|| CatalogError::UnknownId(id.clone())))
        .collect::<Result<_>>()?;
    let map = records
        .iter()
        .map(|r| MapPoint {
            id: r.id.clone(),
            lat: r.findspot.as_ref().map(|f| f.lat),
            lon: r.findspot.as_ref().map(|f| f.lon),
            place: r.findspot.as_ref().map(|f| f.place.clone()),
        })
        .collect();
    let timeline = records
        .iter()
        .map(|r| TimelineInterval {
            id: r.id.clone(),
            from: r.date_from,
            to: r.date_to,
        })
        .collect();
    let adj = graph.neighbors();
    let mut shown: BTreeMap<&str, bool> = selected.iter().map(|id| (id.as_str(), true)).collect();
    for id in &selected {
        for &w in adj.get(id.as_str()).into_iter().flatten() {
            shown.entry(w).or_insert(false);
        }
    }
    let nodes = shown
        .iter()
        .map(|(&id, &sel)| GraphNode {
            id: id.to_string(),
            selected: sel,
            context: !sel,
        })
        .collect();
    let edges = graph
        .edges
        .iter()
        .filter(|e| {
            let (a, b) = (shown.get(e.a.as_str()), shown.get(e.b.as_str()));
            matches!((a, b), (Some(_), Some(_))) && (a == Some(&true) || b == Some(&true))
        })
        .cloned()
        .collect();
    Ok(LinkedSelection {
        selected_ids: selected.into_iter().collect(),
        map,
        timeline,
        graph: GraphNeighborhood { nodes, edges },
    })
}

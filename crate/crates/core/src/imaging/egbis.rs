//! Efficient graph-based segmentation (Felzenszwalb–Huttenlocher).

use serde::{Deserialize, Serialize};

use super::{gaussian_blur, Image, ImagingError, LabelMap, Result};
use crate::util::DisjointSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgbisParams {
    /// Scale of observation; larger values favor larger segments.
    pub k: f64,
    /// Gaussian pre-smoothing; 0 disables it.
    pub sigma: f64,
    /// Segments below this many pixels are merged into a neighbor.
    pub min_size: usize,
}

impl Default for EgbisParams {
    fn default() -> Self {
        Self {
            k: 300.0 / 255.0,
            sigma: 0.8,
            min_size: 20,
        }
    }
}

/// Grid edge between pixel indices `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgbisEdge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

/// One merge of the main pass, with the component state just before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeEvent {
    pub w: f64,
    pub int_a: f64,
    pub size_a: usize,
    pub int_b: f64,
    pub size_b: usize,
}

/// 8-neighbor edges sorted by `(weight, a, b)`. Weights are Euclidean
/// color distances.
pub(crate) fn grid_edges(img: &Image) -> Vec<EgbisEdge> {
    let (w, h) = (img.width, img.height);
    let c = img.channels.count();
    let dist = |p: usize, q: usize| -> f64 {
        (0..c)
            .map(|ch| {
                let d = img.data[p * c + ch] as f64 - img.data[q * c + ch] as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut edges = Vec::with_capacity(4 * w * h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let mut push = |q: usize| {
                edges.push(EgbisEdge {
                    a: p.min(q),
                    b: p.max(q),
                    w: dist(p, q),
                })
            };
            if x + 1 < w {
                push(p + 1);
            }
            if y + 1 < h {
                if x > 0 {
                    push(p + w - 1);
                }
                push(p + w);
                if x + 1 < w {
                    push(p + w + 1);
                }
            }
        }
    }
    edges.sort_by(|e, f| e.w.total_cmp(&f.w).then(e.a.cmp(&f.a)).then(e.b.cmp(&f.b)));
    edges
}

pub fn egbis_segment(img: &Image, params: &EgbisParams) -> Result<LabelMap> {
    egbis_segment_traced(img, params).map(|(map, _)| map)
}

/// Segmentation plus the merge log of the main pass, which allows the
/// merge predicate to be replayed.
pub fn egbis_segment_traced(img: &Image, params: &EgbisParams) -> Result<(LabelMap, Vec<MergeEvent>)> {
    if !(params.k > 0.0 && params.k.is_finite()) {
        return Err(ImagingError::InvalidArgument(format!("k must be positive, got {}", params.k)));
    }
    let smooth = gaussian_blur(img, params.sigma);
    let edges = grid_edges(&smooth);
    let n = img.len();
    let mut sets = DisjointSet::new(n);
    let mut internal = vec![0.0f64; n];
    let mut log = Vec::new();
    for e in &edges {
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra == rb {
            continue;
        }
        let (sa, sb) = (sets.set_size(ra), sets.set_size(rb));
        let ta = internal[ra] + params.k / sa as f64;
        let tb = internal[rb] + params.k / sb as f64;
        if e.w <= ta.min(tb) {
            log.push(MergeEvent {
                w: e.w,
                int_a: internal[ra],
                size_a: sa,
                int_b: internal[rb],
                size_b: sb,
            });
            let root = sets.union(ra, rb).expect("distinct roots");
            internal[root] = e.w;
        }
    }
    for e in &edges {
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra != rb && (sets.set_size(ra) < params.min_size || sets.set_size(rb) < params.min_size) {
            sets.union(ra, rb);
        }
    }
    Ok((dense_labels(&mut sets, img.width, img.height), log))
}

fn dense_labels(sets: &mut DisjointSet, width: usize, height: usize) -> LabelMap {
    let n = width * height;
    let mut ids = vec![u32::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut next = 0u32;
    for p in 0..n {
        let r = sets.find(p);
        if ids[r] == u32::MAX {
            ids[r] = next;
            next += 1;
        }
        labels.push(ids[r]);
    }
    LabelMap {
        width,
        height,
        labels,
        count: next,
        background: None,
    }
}

use serde::{Deserialize, Serialize};

use super::BinaryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Material,
    Air,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face neighbors.
    Six,
    /// Face, edge and corner neighbors.
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Self::Six),
            26 => Some(Self::TwentySix),
            _ => None,
        }
    }

    pub(crate) fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Self::Six => manhattan == 1,
                        Self::TwentySix => manhattan > 0,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseComponent {
    /// Label value in [`Labeling::labels`], starting at 1.
    pub label: u32,
    pub voxel_count: usize,
    /// Lowest voxel index, i.e. the scan-order seed.
    pub first_voxel: usize,
    pub touches_boundary: bool,
}

/// Connected components of one phase. Label 0 marks voxels of the other
/// phase; components are numbered 1.. in scan order of their first voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub labels: Vec<u32>,
    pub components: Vec<PhaseComponent>,
}

/// Visits neighbors of `index` under `offsets`, honoring grid bounds.
pub(crate) fn for_each_neighbor(
    dims: [usize; 3],
    index: usize,
    offsets: &[[i64; 3]],
    mut f: impl FnMut(usize),
) {
    let [nx, ny, nz] = dims;
    let x = (index % nx) as i64;
    let y = ((index / nx) % ny) as i64;
    let z = (index / (nx * ny)) as i64;
    for o in offsets {
        let (qx, qy, qz) = (x + o[0], y + o[1], z + o[2]);
        if qx < 0 || qy < 0 || qz < 0 || qx >= nx as i64 || qy >= ny as i64 || qz >= nz as i64 {
            continue;
        }
        f(qx as usize + nx * (qy as usize + ny * qz as usize));
    }
}

pub fn label_components(grid: &BinaryGrid, phase: Phase, connectivity: Connectivity) -> Labeling {
    let want = phase == Phase::Material;
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; grid.len()];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..grid.len() {
        if grid.bits[seed] != want || labels[seed] != 0 {
            continue;
        }
        let label = components.len() as u32 + 1;
        labels[seed] = label;
        stack.push(seed);
        let mut count = 0;
        let mut touches = false;
        while let Some(v) = stack.pop() {
            count += 1;
            touches |= grid.on_boundary(v);
            for_each_neighbor(grid.dims, v, &offsets, |q| {
                if grid.bits[q] == want && labels[q] == 0 {
                    labels[q] = label;
                    stack.push(q);
                }
            });
        }
        components.push(PhaseComponent {
            label,
            voxel_count: count,
            first_voxel: seed,
            touches_boundary: touches,
        });
    }
    Labeling { labels, components }
}

//! Raw voxel volumes with a JSON sidecar header.
//!
//! `scan.json` holds `{"dims": [nx, ny, nz], "spacing_mm": [sx, sy, sz],
//! "dtype": "u8" | "u16" | "f32", "order": "x-fastest"}` and the
//! little-endian samples live next to it in `scan.raw`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Result, VoxelError, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoxelDtype {
    U8,
    U16,
    F32,
}

impl VoxelDtype {
    fn size(self) -> usize {
        match self {
            Self::U8 => 1,
            Self::U16 => 2,
            Self::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelHeader {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub dtype: VoxelDtype,
    pub order: String,
}

fn sidecar_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("raw"))
}

/// Loads a volume given either the `.json` header or the `.raw` blob path.
pub fn load_voxels(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    let (header_path, raw_path) = sidecar_paths(path.as_ref());
    let header: VoxelHeader = serde_json::from_slice(&fs::read(&header_path)?)
        .map_err(|e| VoxelError::Header(e.to_string()))?;
    let bytes = fs::read(&raw_path)?;
    read_voxels(&header, &bytes)
}

pub fn read_voxels(header: &VoxelHeader, bytes: &[u8]) -> Result<VoxelGrid> {
    if header.order != "x-fastest" {
        return Err(VoxelError::Header(format!(
            "unsupported order `{}`",
            header.order
        )));
    }
    let count: usize = header.dims.iter().product();
    let expected = count * header.dtype.size();
    if bytes.len() != expected {
        return Err(VoxelError::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let values: Vec<f32> = match header.dtype {
        VoxelDtype::U8 => bytes.iter().map(|&b| b as f32).collect(),
        VoxelDtype::U16 => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as f32)
            .collect(),
        VoxelDtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    };
    VoxelGrid::new(header.dims, header.spacing_mm, values)
}

/// Writes `<path>.json` and `<path>.raw`. Values are converted to `dtype`
/// with rounding and saturation for the integer types.
pub fn write_voxels(path: impl AsRef<Path>, grid: &VoxelGrid, dtype: VoxelDtype) -> Result<()> {
    let (header_path, raw_path) = sidecar_paths(path.as_ref());
    let header = VoxelHeader {
        dims: grid.dims,
        spacing_mm: grid.spacing,
        dtype,
        order: "x-fastest".into(),
    };
    let json = serde_json::to_vec_pretty(&header).map_err(|e| VoxelError::Header(e.to_string()))?;
    fs::write(header_path, json)?;
    let mut bytes = Vec::with_capacity(grid.len() * dtype.size());
    for &v in &grid.values {
        match dtype {
            VoxelDtype::U8 => bytes.push(v.round().clamp(0.0, 255.0) as u8),
            VoxelDtype::U16 => {
                bytes.extend_from_slice(&(v.round().clamp(0.0, 65535.0) as u16).to_le_bytes())
            }
            VoxelDtype::F32 => bytes.extend_from_slice(&v.to_le_bytes()),
        }
    }
    fs::write(raw_path, bytes)?;
    Ok(())
}

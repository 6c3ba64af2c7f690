//! CT-style voxel analysis: thresholding, connected components, void
//! (porosity) statistics and the cavity "phantom body" of a vessel.
//!
//! Voxel `(i, j, k)` sits at `(i·sx, j·sy, k·sz)` mm. Values are stored
//! x-fastest: index `i + nx·(j + ny·k)`.

mod io;
mod label;
mod porosity;

pub use io::{load_voxels, read_voxels, write_voxels, VoxelDtype, VoxelHeader};
pub use label::{label_components, Connectivity, Labeling, Phase, PhaseComponent};
pub use porosity::{cavity_capacity, porosity_stats, CapPlane, PorosityReport, VoidComponent};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VoxelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid voxel header: {0}")]
    Header(String),
    #[error("voxel data has {actual} bytes, header implies {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no interior air remains after sealing; the grid has no cavity")]
    NoCavity,
}

pub type Result<T, E = VoxelError> = std::result::Result<T, E>;

/// Scalar lattice with physical spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    /// mm per voxel along x, y, z.
    pub spacing: [f64; 3],
    pub values: Vec<f32>,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], values: Vec<f32>) -> Result<Self> {
        validate_shape(dims, spacing, values.len())?;
        Ok(Self {
            dims,
            spacing,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// Material (`true`) / air (`false`) lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryGrid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub bits: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], bits: Vec<bool>) -> Result<Self> {
        validate_shape(dims, spacing, bits.len())?;
        Ok(Self {
            dims,
            spacing,
            bits,
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Physical position (mm) of a voxel.
    pub fn position(&self, index: usize) -> [f64; 3] {
        let c = self.coords(index);
        [
            c[0] as f64 * self.spacing[0],
            c[1] as f64 * self.spacing[1],
            c[2] as f64 * self.spacing[2],
        ]
    }

    pub fn on_boundary(&self, index: usize) -> bool {
        let c = self.coords(index);
        (0..3).any(|a| c[a] == 0 || c[a] + 1 == self.dims[a])
    }
}

fn validate_shape(dims: [usize; 3], spacing: [f64; 3], count: usize) -> Result<()> {
    if dims.iter().any(|&d| d == 0) {
        return Err(VoxelError::InvalidArgument(format!("dims must be positive: {dims:?}")));
    }
    if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(VoxelError::InvalidArgument(format!(
            "spacing must be positive: {spacing:?}"
        )));
    }
    let expected = dims[0] * dims[1] * dims[2];
    if count != expected {
        return Err(VoxelError::InvalidArgument(format!(
            "{count} values for dims {dims:?} (expected {expected})"
        )));
    }
    Ok(())
}

/// Material where `value ≥ threshold`.
pub fn binarize(grid: &VoxelGrid, threshold: f32) -> BinaryGrid {
    BinaryGrid {
        dims: grid.dims,
        spacing: grid.spacing,
        bits: grid.values.iter().map(|&v| v >= threshold).collect(),
    }
}

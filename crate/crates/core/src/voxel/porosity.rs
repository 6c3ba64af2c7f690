use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use super::label::for_each_neighbor;
use super::{binarize, label_components, Connectivity, Phase, Result, VoxelError, VoxelGrid};
use crate::capacity::{CapacityMethod, CapacityResult};
use crate::mesh::MM3_PER_ML;

/// An enclosed air pore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoidComponent {
    pub label: u32,
    pub voxel_count: usize,
    pub volume_mm3: f64,
    /// mm.
    pub centroid: [f64; 3],
    /// Unit principal directions, longest first.
    pub principal_axes: [[f64; 3]; 3],
    /// Covariance eigenvalues (mm²), descending. Each voxel contributes
    /// its full cube extent, so single-voxel-thick pores stay finite.
    pub eigenvalues: [f64; 3],
    /// Length ratio of the longest to the shortest principal extent,
    /// `sqrt(λ1 / λ3)`; 10 for a straight 10×1×1 pore.
    pub elongation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityReport {
    /// Void voxels over envelope voxels.
    pub porosity_fraction: f64,
    pub components: Vec<VoidComponent>,
    /// Material plus enclosed air.
    pub envelope_voxels: usize,
    pub void_voxels: usize,
}

/// Pores are the air components (26-connected) that do not reach the grid
/// boundary. A sealed vessel's own cavity counts as one; analyze fragments
/// or cropped sub-volumes when that is not wanted.
pub fn porosity_stats(grid: &VoxelGrid, threshold: f32) -> PorosityReport {
    let bin = binarize(grid, threshold);
    let air = label_components(&bin, Phase::Air, Connectivity::TwentySix);
    let exterior: usize = air
        .components
        .iter()
        .filter(|c| c.touches_boundary)
        .map(|c| c.voxel_count)
        .sum();
    let envelope_voxels = bin.len() - exterior;

    let voids: Vec<&super::PhaseComponent> =
        air.components.iter().filter(|c| !c.touches_boundary).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); air.components.len() + 1];
    for (i, &l) in air.labels.iter().enumerate() {
        if l != 0 {
            members[l as usize].push(i);
        }
    }
    let voxel_volume = grid.voxel_volume_mm3();
    let components: Vec<VoidComponent> = voids
        .iter()
        .map(|c| {
            let pts: Vec<Vector3<f64>> = members[c.label as usize]
                .iter()
                .map(|&i| Vector3::from(bin.position(i)))
                .collect();
            let n = pts.len() as f64;
            let mean = pts.iter().sum::<Vector3<f64>>() / n;
            let mut cov = pts.iter().fold(Matrix3::zeros(), |acc, p| {
                let d = p - mean;
                acc + d * d.transpose()
            }) / n;
            // uniform distribution inside each voxel cube
            for a in 0..3 {
                cov[(a, a)] += grid.spacing[a] * grid.spacing[a] / 12.0;
            }
            let eig = SymmetricEigen::new(cov);
            let mut order = [0usize, 1, 2];
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let eigenvalues = order.map(|k| eig.eigenvalues[k]);
            let principal_axes = order.map(|k| {
                let v = eig.eigenvectors.column(k);
                let s = if v[v.iamax()] < 0.0 { -1.0 } else { 1.0 };
                [s * v[0], s * v[1], s * v[2]]
            });
            VoidComponent {
                label: c.label,
                voxel_count: c.voxel_count,
                volume_mm3: c.voxel_count as f64 * voxel_volume,
                centroid: [mean.x, mean.y, mean.z],
                principal_axes,
                eigenvalues,
                elongation: (eigenvalues[0] / eigenvalues[2]).sqrt(),
            }
        })
        .collect();
    let void_voxels: usize = components.iter().map(|c| c.voxel_count).sum();
    PorosityReport {
        porosity_fraction: if envelope_voxels == 0 {
            0.0
        } else {
            void_voxels as f64 / envelope_voxels as f64
        },
        components,
        envelope_voxels,
        void_voxels,
    }
}

/// Plane `a·x + b·y + c·z + d = 0` in mm; points with a non-positive value
/// are on the sealed (vessel) side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CapPlane {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    fn closed_side(&self, p: [f64; 3]) -> bool {
        self.a * p[0] + self.b * p[1] + self.c * p[2] + self.d <= 0.0
    }
}

/// Volume of the interior air ("phantom body") of a vessel.
///
/// Air reachable from the grid boundary is exterior. With a cap plane the
/// exterior flood fill may not step between the two sides of the plane, so
/// an open mouth is virtually sealed at the plane. The largest remaining
/// air component is the phantom body; smaller enclosed components (pores)
/// are reported in the notes but not counted.
pub fn cavity_capacity(
    grid: &VoxelGrid,
    threshold: f32,
    cap: Option<CapPlane>,
) -> Result<CapacityResult> {
    let bin = binarize(grid, threshold);
    let offsets = Connectivity::TwentySix.offsets();
    let side: Option<Vec<bool>> =
        cap.map(|plane| (0..bin.len()).map(|i| plane.closed_side(bin.position(i))).collect());

    let mut exterior = vec![false; bin.len()];
    let mut stack: Vec<usize> = (0..bin.len())
        .filter(|&i| !bin.bits[i] && bin.on_boundary(i))
        .collect();
    for &i in &stack {
        exterior[i] = true;
    }
    while let Some(v) = stack.pop() {
        for_each_neighbor(bin.dims, v, &offsets, |q| {
            if bin.bits[q] || exterior[q] {
                return;
            }
            if let Some(side) = &side {
                if side[q] != side[v] {
                    return;
                }
            }
            exterior[q] = true;
            stack.push(q);
        });
    }

    // interior air: treat exterior as material and label what is left
    let mut interior = bin.clone();
    for i in 0..interior.len() {
        interior.bits[i] = bin.bits[i] || exterior[i];
    }
    let pockets = label_components(&interior, Phase::Air, Connectivity::TwentySix);
    let Some(body) = pockets.components.iter().max_by(|a, b| {
        a.voxel_count
            .cmp(&b.voxel_count)
            .then(b.first_voxel.cmp(&a.first_voxel))
    }) else {
        return Err(VoxelError::NoCavity);
    };
    let voxel_volume = grid.voxel_volume_mm3();
    let others: usize = pockets
        .components
        .iter()
        .filter(|c| c.label != body.label)
        .map(|c| c.voxel_count)
        .sum();
    let mut note = format!(
        "phantom body of {} voxels at {:.4} mm³ each, threshold {threshold}",
        body.voxel_count, voxel_volume
    );
    if cap.is_some() {
        note.push_str("; mouth sealed at cap plane");
    }
    if others > 0 {
        note.push_str(&format!(
            "; {} smaller enclosed pockets ({:.3} ml) excluded",
            pockets.components.len() - 1,
            others as f64 * voxel_volume / MM3_PER_ML
        ));
    }
    Ok(CapacityResult {
        method: CapacityMethod::Voxel,
        volume_ml: body.voxel_count as f64 * voxel_volume / MM3_PER_ML,
        uncertainty_note: note,
    })
}

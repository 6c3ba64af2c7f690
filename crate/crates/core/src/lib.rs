//! Kernels of the vaselab pottery workbench: triangle meshes, capacity,
//! surface flattening, registration, voxel analysis, image descriptors,
//! retrieval and the object catalog.
//!
//! Geometry is in millimeters; volumes are reported in milliliters.

pub mod capacity;
pub mod catalog;
pub mod flatten;
pub mod imaging;
pub mod mesh;
pub mod registration;
pub mod retrieval;
pub mod synth;
pub mod util;
pub mod voxel;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/flattening.md")]
    mod flattening {}
    #[doc = include_str!("../../../book/src/registration.md")]
    mod registration {}
    #[doc = include_str!("../../../book/src/voxels.md")]
    mod voxels {}
    #[doc = include_str!("../../../book/src/imaging.md")]
    mod imaging {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/catalog.md")]
    mod catalog {}
}

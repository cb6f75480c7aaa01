//! Evidential semantic voxel mapping.
//!
//! Per-point class evidence is turned into subjective-logic opinions,
//! discounted by a sparse spatial kernel and fused per voxel with Dempster's
//! rule. Each cell ends up with a class label and a vacuity that says how much
//! the map actually knows about it. A kernel-count baseline, file formats, a
//! synthetic scene generator and evaluation metrics round out the crate.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! name the double-precision types the file formats and tools use.

pub mod baseline;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod fusion;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod scalar;
pub mod scan;
pub mod synthetic;
pub mod voxmap;

pub use error::{Error, Result};
pub use evidence::UncertaintyMeasure;
pub use scalar::Scalar;
pub use voxmap::{CellIndex, IntegrationStats};

pub type ClassEvidenceF64 = evidence::ClassEvidence<f64>;
pub type DirichletParamsF64 = evidence::DirichletParams<f64>;
pub type BeliefAssignmentF64 = evidence::BeliefAssignment<f64>;
pub type KernelParamsF64 = kernel::KernelParams<f64>;
pub type MapConfigF64 = voxmap::MapConfig<f64>;
pub type CellStateF64 = voxmap::CellState<f64>;
pub type VoxelMapF64 = voxmap::VoxelMap<f64>;
pub type SbkiMapF64 = baseline::SbkiMap<f64>;
pub type ScanFrameF64 = scan::ScanFrame<f64>;

pub type ClassEvidenceF32 = evidence::ClassEvidence<f32>;
pub type BeliefAssignmentF32 = evidence::BeliefAssignment<f32>;
pub type KernelParamsF32 = kernel::KernelParams<f32>;
pub type MapConfigF32 = voxmap::MapConfig<f32>;
pub type VoxelMapF32 = voxmap::VoxelMap<f32>;
pub type SbkiMapF32 = baseline::SbkiMap<f32>;
pub type ScanFrameF32 = scan::ScanFrame<f32>;

//! Linear-reduction suite: proper orthogonal decomposition, QR-pivot
//! sensor selection with least-squares reconstruction, latent-mode
//! normalization, and dynamic mode decomposition — plus the dataset wiring
//! for hypernetwork sparse sensing.

mod dmd;
mod modes;
mod pod;
mod qdeim;
mod sensing;

pub use dmd::{dmd, DmdResult};
pub use modes::{mode_norm_constants, nif_modes_normalize, NormalizedModes};
pub use pod::{pod, PodResult, SvdReduction};
pub use qdeim::{deim_reconstruct, qdeim_select, QdeimSelection};
pub use sensing::{nif_sparse_sensing_build, snapshot_matrix, SnapshotView};

pub use dmd::dmd_mode_field;

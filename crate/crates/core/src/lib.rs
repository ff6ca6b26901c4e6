//! Verification toolkit for the universal lower bound on topological
//! entanglement entropy.
//!
//! Two engines carry the numerics: an exact bit-packed stabilizer engine
//! (`stab`) for toric-code reference states and Clifford circuits, and a
//! dense labeled-tensor engine (`dense`) for Petz recovery maps, canonical
//! Markov chains, and everything a mixture makes non-stabilizer. The
//! `lattice` and `circuits` modules supply the geometry and the shallow
//! circuits; `markov` implements the quantum-Markov-chain machinery and
//! `tee` the end-to-end bound experiments.

pub mod circuits;
pub mod dense;
pub mod gf2;
pub mod lattice;
pub mod markov;
pub mod pauli;
pub mod stab;
pub mod tee;

pub use circuits::{invert, light_cone, restrict_outside_light_cone, Circuit, Gate, GateKind};
pub use dense::{petz_map, DensityMatrix, Factor, QuantumChannel};
pub use lattice::{
    build_annulus_partition, chain_partition, is_chain_like, AnnulusPartition, ArcSpec,
    ChainPartition, Lattice, Region, Topology,
};
pub use pauli::PauliString;
pub use stab::{toric_code_ground_state, Anyon, StabilizerState};
pub use tee::{ExperimentRecord, ReferenceDescriptor};

//! Engineered-reservoir dynamics of a driven two-level ion coupled to a lossy
//! cavity mode: dense quantum-state primitives, a Lindblad engine, rotating
//! frames, the ion–cavity model, phase extraction and the auxiliary-level
//! interferometer.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod frames;
pub mod integrate;
pub mod interferometry;
pub mod lindblad;
pub mod linalg;
pub mod model;
pub mod phase;

pub use error::{Error, Result};
pub use integrate::{IntegrationStats, RefinementOptions};
pub use lindblad::{
    evolve, evolve_ket, evolve_with, liouvillian_matrix, residual, steady_state, AffineGenerator, Convention,
    LindbladTerm, MasterEquation, Sampler, SteadyState, Trajectory,
};
pub use linalg::{
    bloch_vector, expm_hermitian_generator, fidelity, fock_annihilation, kron, ComplexMatrix, DensityMatrix, KetState,
    C64,
};
pub use model::{Branch, ModelParams};

//! Quantum-state primitives for marginal reconstruction.
//!
//! - [`CMatrix`]: dense complex matrices, row-major.
//! - [`partial_trace`] and its adjoint [`add_embedded`], with qubit 1 as the
//!   most significant bit of the computational-basis index.
//! - Random states ([`haar_pure_state`], [`random_density_matrix`]),
//!   [`fidelity`], [`polar_decompose`], [`psd_project`].
//! - [`marginals`]: marginal sets and the marginal imposition operator.

pub mod encoding;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod marginals;
pub mod matrix;
pub mod state;
pub mod subsystem;

pub use encoding::TwoChannelTensor;
pub use error::{Error, Result};
pub use fidelity::fidelity;
pub use linalg::{eigh, eigvalsh, hermitize, polar_decompose, psd_project, renormalize, svd, Eigh, Polar, Svd};
pub use marginals::{
    all_k_marginals, check_overlap_consistency, marginals_of, mio_apply, mio_compose, negative_eigenvalue_profile,
    ConsistencyMode, ConsistencyReport, CorruptedState, Marginal, MarginalSet, NegativeEigenProfile,
};
pub use matrix::{qubits_for_dim, CMatrix};
pub use num_complex::Complex64;
pub use state::{haar_pure_state, random_density_matrix, random_density_matrix_with_rank, DensityMatrix};
pub use subsystem::{add_embedded, embed_identity, k_subsets, partial_trace, SubsystemLabel};

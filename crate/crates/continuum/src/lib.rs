//! Disorder-free continuum models of the monitored chain: the quantum
//! Ashkin-Teller Hamiltonians of forced measurements (`H1`) and of two
//! replicas (`H2`), their staggered XXZ and spinless-fermion forms, and the
//! short-time identities that produce them.

pub mod deep;
pub mod error;
pub mod hamiltonian;
pub mod ops;
pub mod phases;
pub mod replica;
pub mod spectrum;
pub mod symmetry;
pub mod tfim;
pub mod xxz;

pub use deep::{deep_phase_values, DeepPhaseRow};
pub use error::{ContinuumError, Result};
pub use hamiltonian::{build_hamiltonian, Coupling, HamiltonianKind, HamiltonianSpec};
pub use replica::replica2_gate_identity_residual;
pub use spectrum::{spectral_match, Sector};
pub use symmetry::u1_charge_residual;
pub use tfim::{tfim_comparison, TfimComparison};
pub use xxz::{xxz_params_from_circuit, CircuitKind, XxzParams};

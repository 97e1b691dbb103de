//! Classical statistical-mechanics side of the monitored chain.
//!
//! Each measurement record `m` defines a two-species Ashkin-Teller model with
//! complex couplings whose partition function equals the Born weight of `m`.
//! The crate evaluates these partition functions exactly (brute force and
//! transfer matrix), builds the Kramers-Wannier dual weights, the loop
//! expansions of a single copy and the random-bond Ising reductions.

pub mod couplings;
pub mod duality;
pub mod error;
pub mod lattice;
pub mod loops;
pub mod partition;
pub mod rbim;

pub use couplings::{couplings_for, couplings_from_params, couplings_with_unitaries, CouplingSet};
pub use error::{Result, StatMechError};
pub use lattice::{DisorderRealization, Lattice};
pub use partition::{brute_force_partition, nishimori_residual, transfer_matrix_partition, Boundaries, Partition};

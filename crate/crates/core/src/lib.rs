//! Simulation core for the monitored Z2 repetition-code chain.
//!
//! The density matrix is vectorized as `|ρ⟩⟩` and evolved either exactly
//! ([`dense`]) or as a matrix-product state ([`mps`]). Both engines share the
//! step schedule and random stream in [`trajectory`].

pub mod dense;
pub mod error;
pub mod identities;
pub mod kernels;
pub mod model;
pub mod mps;
pub mod observables;
pub mod trajectory;

pub use error::{Error, Result};

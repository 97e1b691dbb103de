//! Staggered XXZ parameters of the disorder-free circuits and the local
//! images of doubled-space operators on the XXZ chain.
//!
//! Doubled site `i` becomes the chain pair `(2i, 2i+1)` and bond `(i, i+1)`
//! becomes `(2i+1, 2i+2)`:
//! `X → σˣσˣ`, `X' → σʸσʸ`, `ZZ → σʸσʸ`, `Z'Z' → σˣσˣ`.

use serde::{Deserialize, Serialize};

use crate::error::{ContinuumError, Result};

/// Couplings `(J, Δ1, Δ2, K)` of the staggered XXZ chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XxzParams {
    pub j: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub k: f64,
}

impl XxzParams {
    /// `(Δ1/J, Δ2/J, K/J)`.
    pub fn ratios(&self) -> (f64, f64, f64) {
        (self.delta1 / self.j, self.delta2 / self.j, self.k / self.j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    Forced,
    Replica2,
}

/// XXZ couplings equivalent to `H1` (forced) or `H2` (replica2). The scale
/// is fixed so that the spectra coincide: the odd-site bonds carry `J + Δ1`
/// and `K + Δ2`, the even-site bonds `J − Δ1` and `K − Δ2`.
pub fn xxz_params_from_circuit(kind: CircuitKind, lambda_x: f64, lambda_zz: f64, q_x: f64, q_zz: f64) -> Result<XxzParams> {
    if !(lambda_x + lambda_zz > 0.0) {
        return Err(ContinuumError::DegenerateDenominator);
    }
    let (hx, hzz, ix, izz) = match kind {
        CircuitKind::Forced => (lambda_x, lambda_zz, q_x, q_zz),
        CircuitKind::Replica2 => {
            let (a, b) = (lambda_x * lambda_x, lambda_zz * lambda_zz);
            (a, b, a + q_x, b + q_zz)
        }
    };
    Ok(XxzParams { j: (hx + hzz) / 2.0, delta1: (hx - hzz) / 2.0, delta2: (ix - izz) / 2.0, k: (ix + izz) / 2.0 })
}

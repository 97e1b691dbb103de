//! Ground-state signatures of the staggered XXZ chain in its zero-magnetization
//! sector: the lowest gap, the bond dimerization and the Néel correlation.

use num_complex::Complex64 as C64;
use repcode::kernels::Pauli;
use serde::{Deserialize, Serialize};

use crate::error::{ContinuumError, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianKind, HamiltonianSpec};
use crate::ops::{eigensystem, PauliString};
use crate::spectrum::{sector_basis, Sector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Singlets on the bonds starting at even sites.
    Dimer1,
    IsingAfm,
    /// Singlets on the bonds starting at odd sites.
    Dimer2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundStateSignature {
    pub gap: f64,
    /// Mean `⟨σ·σ⟩` on bonds starting at odd sites minus that on even ones.
    pub dimerization: f64,
    /// `(−1)^{n−3}⟨σᶻ_1 σᶻ_{n−2}⟩`, skipping the edge sites.
    pub neel: f64,
}

impl GroundStateSignature {
    pub fn region(&self) -> Region {
        if self.neel > 0.5 {
            Region::IsingAfm
        } else if self.dimerization > 0.0 {
            Region::Dimer1
        } else {
            Region::Dimer2
        }
    }
}

fn expectation(v: &[C64], p: &PauliString) -> f64 {
    v.iter()
        .enumerate()
        .map(|(s, a)| {
            let (r, ph) = p.apply(s);
            v[r].conj() * ph * a
        })
        .sum::<C64>()
        .re
}

pub fn ground_state_signature(spec: &HamiltonianSpec) -> Result<GroundStateSignature> {
    if spec.kind != HamiltonianKind::StaggeredXxz {
        return Err(ContinuumError::Unsupported("signatures of non-XXZ kinds"));
    }
    let n = spec.n_qubits();
    if n < 4 {
        return Err(ContinuumError::OutOfRange("L"));
    }
    let h = build_hamiltonian(spec)?;
    let basis = sector_basis(spec, Sector::Magnetization(0))?;
    let (ev, vecs) = eigensystem(&basis.restrict(&h))?;
    let gs = basis.lift(|c| vecs[[c, 0]]);
    let bond = |b: usize| -> f64 {
        [Pauli::X, Pauli::Y, Pauli::Z]
            .iter()
            .map(|&p| expectation(&gs, &PauliString::new(n, &[(b, p), (b + 1, p)])))
            .sum()
    };
    let mean = |parity: usize| -> f64 {
        let bonds: Vec<usize> = (0..n - 1).filter(|b| b % 2 == parity).collect();
        bonds.iter().map(|&b| bond(b)).sum::<f64>() / bonds.len() as f64
    };
    let bulk = expectation(&gs, &PauliString::new(n, &[(1, Pauli::Z), (n - 2, Pauli::Z)]));
    Ok(GroundStateSignature {
        gap: ev[1] - ev[0],
        dimerization: mean(1) - mean(0),
        neel: if n % 2 == 0 { -bulk } else { bulk },
    })
}

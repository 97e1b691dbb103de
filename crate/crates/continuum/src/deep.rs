//! Paradigmatic doubled states deep in each phase and their correlators.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use repcode::dense::DoubledState;
use repcode::kernels::Pauli;
use repcode::model::{Boundary, InitialState};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeepPhaseRow {
    pub phase: u8,
    /// `⟨⟨1|Z_iZ_j|ρ⟩⟩`.
    pub strong_zz: f64,
    /// `⟨⟨ρ|Z_iZ_jZ'_iZ'_j|ρ⟩⟩ / ⟨⟨ρ|ρ⟩⟩`.
    pub renyi2_zz: f64,
    pub purity: f64,
}

/// GHZ (phase 1), maximally mixed (phase 2) and `|+⟩^L` (phase 3).
pub fn deep_phase_states(l: usize) -> Result<[DoubledState; 3]> {
    let ghz = DoubledState::init(InitialState::GhzPlus, l, Boundary::Open)?;
    let mixed = DoubledState::init(InitialState::MaximallyMixed, l, Boundary::Open)?;
    let dim = 1usize << l;
    let plus = Array2::from_elem((dim, dim), C64::from(1.0 / dim as f64));
    let product = DoubledState::from_density_matrix(&plus, l, false, Boundary::Open)?;
    Ok([ghz, mixed, product])
}

pub fn deep_phase_table(l: usize, i: usize, j: usize) -> Result<Vec<DeepPhaseRow>> {
    let ops = [(i, Pauli::Z), (j, Pauli::Z)];
    deep_phase_states(l)?
        .iter()
        .zip(1u8..)
        .map(|(st, phase)| {
            Ok(DeepPhaseRow {
                phase,
                strong_zz: st.strong_expectation(&ops)?,
                renyi2_zz: st.renyi2_expectation(&ops)?,
                purity: st.purity()?,
            })
        })
        .collect()
}

/// The table at `L = 4` for the end-to-end pair.
pub fn deep_phase_values() -> Result<Vec<DeepPhaseRow>> {
    deep_phase_table(4, 0, 3)
}

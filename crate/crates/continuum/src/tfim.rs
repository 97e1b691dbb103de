//! Two-replica Edwards-Anderson correlator in the continuum limit of the
//! `λ_x = 0` circuit, against the transverse-field Ising chain it reduces to.
//!
//! The trajectory side is exact: `Σ_m K_m ⊗ K_m` is applied step by step to
//! two copies of `|1⟩⟩`, which yields `Σ_m N_m² / Σ_m D_m²` with
//! `N_m = ⟨⟨1|Z_iZ_j U_m|1⟩⟩` and `D_m = ⟨⟨1|U_m|1⟩⟩`.

use std::collections::HashMap;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use repcode::dense::DoubledState;
use repcode::kernels::{kron, Basis, Pauli, StepKernels};
use repcode::model::{n_bonds, Boundary, InitialState};

use crate::error::{ContinuumError, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianSpec};
use crate::ops::{expm_hermitian, Matrix, PauliString};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TfimComparison {
    pub trajectory: f64,
    pub tfim: f64,
}

impl TfimComparison {
    pub fn relative_error(&self) -> f64 {
        (self.trajectory - self.tfim).abs() / self.tfim.abs()
    }
}

/// Nonzero entries of a matrix as `(row, col, value)`.
type Sparse = Vec<(usize, usize, C64)>;

fn sparse(m: &Matrix) -> Sparse {
    m.indexed_iter().filter(|(_, v)| v.norm() > 0.0).map(|((r, c), v)| (r, c, *v)).collect()
}

/// Applies a sparse kernel to the doubled sites at `positions`.
fn apply_sparse(st: &mut DoubledState, positions: &[usize], k: &Sparse) {
    let n = st.n_register();
    let w = positions.len();
    let shifts: Vec<usize> = positions.iter().map(|&p| 2 * (n - 1 - p)).collect();
    let mask: usize = shifts.iter().map(|&s| 3 << s).sum();
    let offset = |lp: usize| -> usize { (0..w).map(|j| (lp >> (2 * (w - 1 - j)) & 3) << shifts[j]).sum() };
    let mut rows: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
    for &(r, c, v) in k {
        rows.entry(offset(r)).or_default().push((offset(c), v));
    }
    let rows: Vec<(usize, Vec<(usize, C64)>)> = rows.into_iter().collect();
    let mut out = vec![C64::from(0.0); st.amplitudes.len()];
    for base in (0..st.amplitudes.len()).filter(|b| b & mask == 0) {
        for (ro, cols) in &rows {
            out[base + ro] = cols.iter().map(|&(co, v)| v * st.amplitudes[base + co]).sum();
        }
    }
    st.amplitudes = out;
}

fn summed_two_copy(k: &StepKernels) -> Sparse {
    sparse(&(kron(k.kernel(1), k.kernel(1)) + kron(k.kernel(-1), k.kernel(-1))))
}

/// Exact two-replica correlator `⟨Z_iZ_j⟩²` of the circuit with `λ_x = 0`,
/// X dephasing `δt·q_x`, ZZ strength `√δt·λ_zz/2` per step, run for
/// `round(τ/δt)` layers on an open chain from the maximally mixed state.
pub fn trajectory_ea_correlator(l: usize, lambda_zz: f64, q_x: f64, tau: f64, dt: f64, i: usize, j: usize) -> Result<f64> {
    if !(dt > 0.0 && tau > 0.0) {
        return Err(ContinuumError::OutOfRange("δt"));
    }
    let kx = summed_two_copy(&StepKernels::new(Basis::X, 0.0, dt * q_x, 0.0));
    let kzz = summed_two_copy(&StepKernels::new(Basis::Zz, dt.sqrt() * lambda_zz / 2.0, 0.0, 0.0));
    let mut st = DoubledState::init(InitialState::MaximallyMixed, 2 * l, Boundary::Open)?;
    let layers = (tau / dt).round() as usize;
    for _ in 0..layers {
        for s in 0..l {
            apply_sparse(&mut st, &[s, l + s], &kx);
        }
        for b in 0..n_bonds(l, Boundary::Open) {
            apply_sparse(&mut st, &[b, b + 1, l + b, l + b + 1], &kzz);
        }
        st.normalize()?;
    }
    Ok(st.strong_expectation(&[(i, Pauli::Z), (j, Pauli::Z), (l + i, Pauli::Z), (l + j, Pauli::Z)])?)
}

/// `⟨+|γᶻ_iγᶻ_j e^{−τH}|+⟩ / ⟨+|e^{−τH}|+⟩` for `H = −λ²Σγᶻγᶻ − 2q_xΣγˣ`.
pub fn tfim_ea_correlator(l: usize, lambda_zz: f64, q_x: f64, tau: f64, i: usize, j: usize) -> Result<f64> {
    let h = build_hamiltonian(&HamiltonianSpec::tfim(lambda_zz * lambda_zz, q_x, l, Boundary::Open))?;
    let prop = expm_hermitian(&h, -tau)?;
    let dim = h.nrows();
    let plus = Array1::from_elem(dim, C64::from(1.0 / (dim as f64).sqrt()));
    let evolved = prop.dot(&plus);
    let zz = PauliString::new(l, &[(i, Pauli::Z), (j, Pauli::Z)]).matrix();
    let num = plus.dot(&zz.dot(&evolved));
    let den = plus.dot(&evolved);
    Ok((num / den).re)
}

pub fn tfim_comparison(l: usize, lambda_zz: f64, q_x: f64, tau: f64, dt: f64, i: usize, j: usize) -> Result<TfimComparison> {
    Ok(TfimComparison {
        trajectory: trajectory_ea_correlator(l, lambda_zz, q_x, tau, dt, i, j)?,
        tfim: tfim_ea_correlator(l, lambda_zz, q_x, tau, i, j)?,
    })
}

//! Exact identities tying trajectory data to closed forms: the code-space
//! spectrum after a perfect readout layer, and the trajectory averages of
//! `I_c` and `S_R` on the classical-quantum state `Σ_m p_m ρ_m ⊗ |m⟩⟨m|`.

use ndarray::{s, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::{apply_perfect_zz_layer, code_space_matrix, entropy_bits, for_each_trajectory, shannon_bits, DoubledState};
use crate::error::{Error, Result};
use crate::model::SimParams;
use crate::observables::{coherent_information, code_spectrum_from_defects, defects_with_reference, reference_entropy, CoherentInfo};

/// Deviations of the defect closed forms from direct evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    /// Largest eigenvalue deviation, `QR` and `Q` spectra together.
    pub spectrum: f64,
    /// Largest deviation of `(S_R, I_c)` from the dense values.
    pub information: f64,
}

fn sorted_eigenvalues(m: &Array2<C64>) -> Result<Vec<f64>> {
    let herm = Array2::from_shape_fn(m.dim(), |(i, j)| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
    let mut ev = herm.eigvalsh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?.to_vec();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Applies a perfect ZZ layer to `st` (which must carry a reference) and
/// compares the closed-form code-space spectra and `(S_R, I_c)` with direct
/// diagonalization and with the dense observables.
pub fn closed_form_check(st: &DoubledState, seed: u64) -> Result<ClosedFormCheck> {
    if !st.has_reference {
        return Err(Error::NoReference);
    }
    let readout = apply_perfect_zz_layer(st, seed)?;
    let code = code_space_matrix(&readout.state, &readout.s_t)?;
    let d = defects_with_reference(&code)?;
    let (mut qr, mut q) = code_spectrum_from_defects(&d);
    qr.sort_by(|a, b| b.total_cmp(a));
    q.sort_by(|a, b| b.total_cmp(a));

    let ev_qr = sorted_eigenvalues(&code)?;
    // Basis order (s,↑), (s,↓), (−s,↑), (−s,↓): tracing the reference sums 2×2 blocks.
    let rho_q = Array2::from_shape_fn((2, 2), |(a, b)| code[[2 * a, 2 * b]] + code[[2 * a + 1, 2 * b + 1]]);
    let ev_q = sorted_eigenvalues(&rho_q)?;
    let mut spectrum: f64 = ev_qr[2..].iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (a, b) in qr.iter().zip(&ev_qr).chain(q.iter().zip(&ev_q)) {
        spectrum = spectrum.max((a - b).abs());
    }

    let s_r = shannon_bits(q);
    let i_c = s_r - shannon_bits(qr);
    let direct_s_r = reference_entropy(&readout.state)?;
    let direct_i_c = coherent_information(&readout.state, CoherentInfo::Exact)?;
    Ok(ClosedFormCheck { spectrum, information: (s_r - direct_s_r).abs().max((i_c - direct_i_c).abs()) })
}

/// Trajectory averages and their classical-quantum counterparts, in bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CqIdentities {
    /// `Σ_m p_m I_c(m)`.
    pub mean_i_c: f64,
    /// `S(ρ_QM) − S(ρ_QRM)`.
    pub cq_i_c: f64,
    /// `Σ_m p_m S_R(m)`.
    pub mean_s_r: f64,
    /// `S(ρ_R) − I(R;M)`.
    pub cq_s_r: f64,
}

impl CqIdentities {
    pub fn residual(&self) -> f64 {
        (self.mean_i_c - self.cq_i_c).abs().max((self.mean_s_r - self.cq_s_r).abs())
    }
}

fn block_diagonal(blocks: &[Array2<C64>]) -> Array2<C64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Array2::zeros((n, n));
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        out.slice_mut(s![at..at + k, at..at + k]).assign(b);
        at += k;
    }
    out
}

/// Enumerates every record of `p` and assembles the classical-quantum state
/// explicitly as a block-diagonal matrix over records.
pub fn cq_identities(p: &SimParams) -> Result<CqIdentities> {
    if !p.has_reference() {
        return Err(Error::NoReference);
    }
    let mut weights = Vec::new();
    let mut rho_qr = Vec::new();
    let mut rho_q = Vec::new();
    let mut rho_r = Vec::new();
    let (mut mean_i_c, mut mean_s_r) = (0.0, 0.0);
    for_each_trajectory(p, |_, st| {
        let w = st.trace().re;
        if w <= 0.0 {
            return Ok(());
        }
        let n = st.n_register();
        let all: Vec<usize> = (0..n).collect();
        let sys: Vec<usize> = (1..n).collect();
        rho_qr.push(st.reduced_matrix(&all));
        rho_q.push(st.reduced_matrix(&sys));
        rho_r.push(st.reduced_matrix(&[0]));
        mean_i_c += w * coherent_information(st, CoherentInfo::Exact)?;
        mean_s_r += w * reference_entropy(st)?;
        weights.push(w);
        Ok(())
    })?;
    let total: f64 = weights.iter().sum();
    let averaged_r = rho_r.iter().fold(Array2::zeros((2, 2)), |acc, r| acc + r);
    let s_m = shannon_bits(weights.iter().map(|w| w / total));
    let s_r = entropy_bits(&averaged_r)?;
    let s_rm = entropy_bits(&block_diagonal(&rho_r))?;
    Ok(CqIdentities {
        mean_i_c: mean_i_c / total,
        cq_i_c: entropy_bits(&block_diagonal(&rho_q))? - entropy_bits(&block_diagonal(&rho_qr))?,
        mean_s_r: mean_s_r / total,
        cq_s_r: s_r - (s_r + s_m - s_rm),
    })
}

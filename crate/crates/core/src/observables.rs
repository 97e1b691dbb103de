//! Order parameters, information diagnostics and trajectory averaging.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::{shannon_bits, DoubledState};
use crate::error::{Error, Result};
use crate::kernels::Pauli;
use crate::model::Boundary;

/// Value used in place of an infinite defect free energy.
pub const DEFECT_OVERFLOW: f64 = 1e308;

/// Per-trajectory observables. Entropies are in bits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub kappa_ea: Option<f64>,
    pub kappa_2: Option<f64>,
    pub d_ea: Option<f64>,
    pub d_2: Option<f64>,
    pub s_r: Option<f64>,
    pub i_c: Option<f64>,
    pub i_c_renyi2: Option<f64>,
    pub defect: Option<DefectFreeEnergies>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    KappaEa,
    Kappa2,
    DEa,
    D2,
    SR,
    IC,
    ICRenyi2,
}

impl Observable {
    pub const ALL: [Self; 7] = [Self::KappaEa, Self::Kappa2, Self::DEa, Self::D2, Self::SR, Self::IC, Self::ICRenyi2];

    pub fn name(self) -> &'static str {
        match self {
            Self::KappaEa => "kappa_ea",
            Self::Kappa2 => "kappa_2",
            Self::DEa => "d_ea",
            Self::D2 => "d_2",
            Self::SR => "s_r",
            Self::IC => "i_c",
            Self::ICRenyi2 => "i_c_renyi2",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl ObservableSet {
    pub fn get(&self, o: Observable) -> Option<f64> {
        match o {
            Observable::KappaEa => self.kappa_ea,
            Observable::Kappa2 => self.kappa_2,
            Observable::DEa => self.d_ea,
            Observable::D2 => self.d_2,
            Observable::SR => self.s_r,
            Observable::IC => self.i_c,
            Observable::ICRenyi2 => self.i_c_renyi2,
        }
    }
}

/// Free-energy costs of one and two boundary defects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectFreeEnergies {
    pub delta_f1: C64,
    pub delta_f2: f64,
}

/// Correlation data an engine must provide for the observables.
pub trait Measure {
    fn n_system(&self) -> usize;
    fn boundary(&self) -> Boundary;
    fn has_reference(&self) -> bool;
    /// `tr(ρ Z_i Z_j)/tr ρ` for all pairs.
    fn zz_correlators(&self) -> Result<Array2<f64>>;
    /// `tr(ρ Z_iZ_j ρ Z_iZ_j)/tr ρ²` for all pairs.
    fn renyi2_zz_correlators(&self) -> Result<Array2<f64>>;
    /// `tr(ρ X_S)/tr ρ` with `S` the string from `i` to `j`.
    fn x_string_correlators(&self) -> Result<Array2<f64>>;
    /// `tr(ρ X_S ρ X_S)/tr ρ²` with `S` the string from `i` to `j`.
    fn renyi2_x_string_correlators(&self) -> Result<Array2<f64>>;
    /// Sum of all entries of [`Measure::renyi2_zz_correlators`].
    fn renyi2_zz_sum(&self) -> Result<f64> {
        Ok(self.renyi2_zz_correlators()?.sum())
    }
    /// Sum of all entries of [`Measure::renyi2_x_string_correlators`].
    fn renyi2_x_string_sum(&self) -> Result<f64> {
        Ok(self.renyi2_x_string_correlators()?.sum())
    }
    /// Unit-trace reference density matrix.
    fn reference_matrix(&self) -> Result<[[C64; 2]; 2]>;
    /// `tr ρ² / (tr ρ)²` of the full register.
    fn purity(&self) -> Result<f64>;
    /// Same for the system with the reference traced out.
    fn system_purity(&self) -> Result<f64>;
    /// `S(ρ_Q) − S(ρ_QR)` in bits.
    fn exact_coherent_information(&self) -> Result<f64> {
        Err(Error::DenseOnly)
    }
}

/// Sites `k` of the disorder string `Π_{k=i}^{j−1} X_k`.
///
/// Open chains use the segment between `min(i,j)` and `max(i,j)`; periodic
/// chains wrap with increasing `k` mod `L`.
pub fn string_sites(i: usize, j: usize, l: usize, boundary: Boundary) -> Vec<usize> {
    match boundary {
        Boundary::Open => (i.min(j)..i.max(j)).collect(),
        Boundary::Periodic => {
            let len = (j + l - i) % l;
            (0..len).map(|d| (i + d) % l).collect()
        }
    }
}

pub fn edwards_anderson_susceptibility(st: &impl Measure) -> Result<f64> {
    let c = st.zz_correlators()?;
    Ok(c.iter().map(|v| v * v).sum::<f64>() / st.n_system() as f64)
}

pub fn renyi2_susceptibility(st: &impl Measure) -> Result<f64> {
    Ok(st.renyi2_zz_sum()? / st.n_system() as f64)
}

/// `D_EA`. The strong string expectation enters squared, matching the
/// squared correlators of `κ_EA` that it is dual to.
pub fn disorder_susceptibility_ea(st: &impl Measure) -> Result<f64> {
    let d = st.x_string_correlators()?;
    Ok(d.iter().map(|v| v * v).sum::<f64>() / st.n_system() as f64)
}

pub fn disorder_susceptibility_renyi2(st: &impl Measure) -> Result<f64> {
    Ok(st.renyi2_x_string_sum()? / st.n_system() as f64)
}

/// `(D_EA, D_2)`.
pub fn disorder_susceptibilities(st: &impl Measure) -> Result<(f64, f64)> {
    Ok((disorder_susceptibility_ea(st)?, disorder_susceptibility_renyi2(st)?))
}

/// Eigenvalues of a 2×2 Hermitian matrix.
pub fn eigenvalues_2x2(m: &[[C64; 2]; 2]) -> [f64; 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = 0.5 * (m[0][1] + m[1][0].conj());
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mid + rad, mid - rad]
}

pub fn reference_entropy(st: &impl Measure) -> Result<f64> {
    if !st.has_reference() {
        return Err(Error::NoReference);
    }
    Ok(shannon_bits(eigenvalues_2x2(&st.reference_matrix()?)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoherentInfo {
    Exact,
    Renyi2,
}

pub fn coherent_information(st: &impl Measure, variant: CoherentInfo) -> Result<f64> {
    if !st.has_reference() {
        return Err(Error::NoReference);
    }
    match variant {
        CoherentInfo::Exact => st.exact_coherent_information(),
        CoherentInfo::Renyi2 => {
            let pq = st.system_purity()?;
            let pqr = st.purity()?;
            Ok(-pq.log2() + pqr.log2())
        }
    }
}

/// All observables available for the state.
pub fn measure_all(st: &impl Measure, exact_ic: bool) -> Result<ObservableSet> {
    let mut wanted = vec![Observable::KappaEa, Observable::Kappa2, Observable::DEa, Observable::D2];
    if st.has_reference() {
        wanted.extend([Observable::SR, Observable::ICRenyi2]);
        if exact_ic {
            wanted.push(Observable::IC);
        }
    }
    measure(st, &wanted)
}

/// Only the requested observables; the rest stay `None`.
pub fn measure(st: &impl Measure, wanted: &[Observable]) -> Result<ObservableSet> {
    let mut out = ObservableSet::default();
    for &o in wanted {
        let v = match o {
            Observable::KappaEa => edwards_anderson_susceptibility(st)?,
            Observable::Kappa2 => renyi2_susceptibility(st)?,
            Observable::DEa => disorder_susceptibility_ea(st)?,
            Observable::D2 => disorder_susceptibility_renyi2(st)?,
            Observable::SR => reference_entropy(st)?,
            Observable::IC => coherent_information(st, CoherentInfo::Exact)?,
            Observable::ICRenyi2 => coherent_information(st, CoherentInfo::Renyi2)?,
        };
        let slot = match o {
            Observable::KappaEa => &mut out.kappa_ea,
            Observable::Kappa2 => &mut out.kappa_2,
            Observable::DEa => &mut out.d_ea,
            Observable::D2 => &mut out.d_2,
            Observable::SR => &mut out.s_r,
            Observable::IC => &mut out.i_c,
            Observable::ICRenyi2 => &mut out.i_c_renyi2,
        };
        *slot = Some(v);
    }
    Ok(out)
}

fn neg_log_or_overflow(z: C64) -> C64 {
    if z.norm() == 0.0 {
        C64::new(DEFECT_OVERFLOW, 0.0)
    } else {
        -z.ln()
    }
}

/// Defect free energies from a 2×2 code-space matrix, relabeled so that `ρ_00 ≥ ρ_11`.
pub fn defect_free_energies(code: &Array2<C64>) -> Result<DefectFreeEnergies> {
    if code.dim() != (2, 2) {
        return Err(Error::LengthMismatch(code.nrows(), 2));
    }
    let (mut r00, mut r11, mut r10) = (code[[0, 0]].re, code[[1, 1]].re, code[[1, 0]]);
    if r00 < r11 {
        std::mem::swap(&mut r00, &mut r11);
        r10 = code[[0, 1]];
    }
    if !(r00 > 0.0) {
        return Err(Error::ZeroDiagonal);
    }
    let delta_f1 = neg_log_or_overflow(r10 / r00);
    let delta_f2 = neg_log_or_overflow(C64::from(r11.max(0.0) / r00)).re;
    Ok(DefectFreeEnergies { delta_f1, delta_f2 })
}

/// Defect free energies of the reference-augmented 4×4 code matrix, read from
/// its block with the reference in `|↑⟩` on both copies.
pub fn defects_with_reference(code4: &Array2<C64>) -> Result<DefectFreeEnergies> {
    if code4.dim() != (4, 4) {
        return Err(Error::LengthMismatch(code4.nrows(), 4));
    }
    let idx = [0, 2];
    let block = Array2::from_shape_fn((2, 2), |(a, b)| code4[[idx[a], idx[b]]]);
    defect_free_energies(&block)
}

fn exp_neg(f: C64) -> C64 {
    if f.re >= DEFECT_OVERFLOW {
        C64::from(0.0)
    } else {
        (-f).exp()
    }
}

/// Closed-form spectra `(λ±^{QR}, λ±^{Q})` of the code-space state.
pub fn code_spectrum_from_defects(d: &DefectFreeEnergies) -> ([f64; 2], [f64; 2]) {
    let e1 = exp_neg(d.delta_f1);
    let e2 = exp_neg(C64::from(d.delta_f2)).re;
    let a = (1.0 - e2) / (1.0 + e2);
    let b = 2.0 * e1.norm() / (1.0 + e2);
    let r = (a * a + b * b).sqrt();
    let qr = [0.5 * (1.0 + r), 0.5 * (1.0 - r)];
    let x = (e1 + e1.conj()).re / (1.0 + e2);
    let q = [0.5 * (1.0 + x), 0.5 * (1.0 - x)];
    (qr, q)
}

/// `(S_R, I_c)` in bits from the defect free energies.
pub fn info_from_defects(d: &DefectFreeEnergies) -> (f64, f64) {
    let (qr, q) = code_spectrum_from_defects(d);
    let s_r = shannon_bits(q);
    (s_r, s_r - shannon_bits(qr))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

pub enum AverageMode<'a> {
    /// Born weights summing to one.
    Exhaustive(&'a [f64]),
    /// Born-sampled trajectories, equally weighted.
    Sampled,
}

/// Mean and standard error of every observable present in all items.
pub fn average_over_trajectories(items: &[ObservableSet], mode: AverageMode) -> Result<BTreeMap<Observable, Stat>> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = BTreeMap::new();
    for o in Observable::ALL {
        let vals: Option<Vec<f64>> = items.iter().map(|it| it.get(o)).collect();
        let Some(vals) = vals else { continue };
        let stat = match mode {
            AverageMode::Exhaustive(w) => {
                if w.len() != vals.len() {
                    return Err(Error::LengthMismatch(w.len(), vals.len()));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > 1e-8 {
                    return Err(Error::BadWeights(total));
                }
                Stat { mean: w.iter().zip(&vals).map(|(a, b)| a * b).sum(), stderr: 0.0 }
            }
            AverageMode::Sampled => sample_stat(&vals),
        };
        out.insert(o, stat);
    }
    Ok(out)
}

pub fn sample_stat(vals: &[f64]) -> Stat {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return Stat { mean, stderr: 0.0 };
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Stat { mean, stderr: (var / n).sqrt() }
}

impl Measure for DoubledState {
    fn n_system(&self) -> usize {
        self.l
    }

    fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn has_reference(&self) -> bool {
        self.has_reference
    }

    fn zz_correlators(&self) -> Result<Array2<f64>> {
        let l = self.l;
        let mut c = Array2::zeros((l, l));
        for i in 0..l {
            for j in 0..l {
                c[[i, j]] = if i == j { 1.0 } else { self.strong_expectation(&[(i, Pauli::Z), (j, Pauli::Z)])? };
            }
        }
        Ok(c)
    }

    fn renyi2_zz_correlators(&self) -> Result<Array2<f64>> {
        let l = self.l;
        let mut c = Array2::zeros((l, l));
        for i in 0..l {
            for j in 0..l {
                c[[i, j]] = if i == j { 1.0 } else { self.renyi2_expectation(&[(i, Pauli::Z), (j, Pauli::Z)])? };
            }
        }
        Ok(c)
    }

    fn x_string_correlators(&self) -> Result<Array2<f64>> {
        let l = self.l;
        let mut c = Array2::zeros((l, l));
        for i in 0..l {
            for j in 0..l {
                let ops: Vec<_> = string_sites(i, j, l, self.boundary).into_iter().map(|k| (k, Pauli::X)).collect();
                c[[i, j]] = self.strong_expectation(&ops)?;
            }
        }
        Ok(c)
    }

    fn renyi2_x_string_correlators(&self) -> Result<Array2<f64>> {
        let l = self.l;
        let mut c = Array2::zeros((l, l));
        for i in 0..l {
            for j in 0..l {
                let ops: Vec<_> = string_sites(i, j, l, self.boundary).into_iter().map(|k| (k, Pauli::X)).collect();
                c[[i, j]] = self.renyi2_expectation(&ops)?;
            }
        }
        Ok(c)
    }

    fn reference_matrix(&self) -> Result<[[C64; 2]; 2]> {
        DoubledState::reference_matrix(self)
    }

    fn purity(&self) -> Result<f64> {
        DoubledState::purity(self)
    }

    fn system_purity(&self) -> Result<f64> {
        self.subsystem_purity(&self.system_sites())
    }

    fn exact_coherent_information(&self) -> Result<f64> {
        if !self.has_reference {
            return Err(Error::NoReference);
        }
        Ok(self.entropy(&self.system_sites())? - self.entropy(&self.all_sites())?)
    }
}

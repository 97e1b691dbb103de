//! Sector-resolved spectra and spectral comparison.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use repcode::kernels::Pauli;
use serde::{Deserialize, Serialize};

use crate::error::{ContinuumError, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianKind, HamiltonianSpec};
use crate::ops::{eigenvalues, spin, Matrix, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Eigenvalues of the strong parities `X̄ = ΠX` (ket) and `X̄' = ΠX'` (bra),
    /// carried to the chain kinds through the doubled-to-chain map.
    StrongParity { ket: i8, bra: i8 },
    /// Fixed total `Σσᶻ` on the `2L`-site chain.
    Magnetization(i32),
}

/// Pauli strings representing `X̄` and `X̄'` in `spec`'s representation, with
/// the sign each picks up.
pub fn strong_parities(spec: &HamiltonianSpec) -> Result<[(PauliString, f64); 2]> {
    let l = spec.l;
    let n = spec.n_qubits();
    match spec.kind {
        HamiltonianKind::AshkinTellerH1 | HamiltonianKind::AshkinTellerH2 => Ok([
            (PauliString::uniform(n, (0..l).map(|i| 2 * i), Pauli::X), 1.0),
            (PauliString::uniform(n, (0..l).map(|i| 2 * i + 1), Pauli::X), 1.0),
        ]),
        HamiltonianKind::JwFermion => {
            Ok([(PauliString::uniform(n, 0..n, Pauli::X), 1.0), (PauliString::uniform(n, 0..n, Pauli::Y), 1.0)])
        }
        HamiltonianKind::StaggeredXxz => {
            // Conjugation by σᶻ on every second site.
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            Ok([(PauliString::uniform(n, 0..n, Pauli::X), sign), (PauliString::uniform(n, 0..n, Pauli::Y), sign)])
        }
        HamiltonianKind::TfimQ1 => Err(ContinuumError::Unsupported("strong parities of the single-species chain")),
    }
}

/// Orthonormal sector basis with sparse columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    pub dim: usize,
    pub columns: Vec<Vec<(usize, C64)>>,
}

impl SectorBasis {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// The basis as the columns of a `dim × r` matrix.
    pub fn to_dense(&self) -> Matrix {
        let mut basis = Array2::zeros((self.dim, self.len()));
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                basis[[r, c]] = v;
            }
        }
        basis
    }

    /// `V† H V`.
    pub fn restrict(&self, h: &Matrix) -> Matrix {
        Array2::from_shape_fn((self.len(), self.len()), |(a, b)| {
            let mut acc = C64::from(0.0);
            for &(r, va) in &self.columns[a] {
                for &(c, vb) in &self.columns[b] {
                    acc += va.conj() * h[[r, c]] * vb;
                }
            }
            acc
        })
    }

    /// `V x` for sector coordinates `x`.
    pub fn lift(&self, x: impl Fn(usize) -> C64) -> Vec<C64> {
        let mut out = vec![C64::from(0.0); self.dim];
        for (c, col) in self.columns.iter().enumerate() {
            let xc = x(c);
            for &(r, v) in col {
                out[r] += v * xc;
            }
        }
        out
    }
}

/// Orthonormal basis of `sector`.
pub fn sector_basis(spec: &HamiltonianSpec, sector: Sector) -> Result<SectorBasis> {
    let n = spec.n_qubits();
    let dim = 1usize << n;
    let mut columns: Vec<BTreeMap<usize, C64>> = Vec::new();
    match sector {
        Sector::Magnetization(m) => {
            if spec.kind.is_doubled() || spec.kind == HamiltonianKind::TfimQ1 {
                return Err(ContinuumError::Unsupported("magnetization sectors of spin kinds"));
            }
            for s in 0..dim {
                let total: i32 = (0..n).map(|k| spin(s, n, k)).sum();
                if total == m {
                    columns.push(BTreeMap::from([(s, C64::from(1.0))]));
                }
            }
        }
        Sector::StrongParity { ket, bra } => {
            let [(pk, sk), (pb, sb)] = strong_parities(spec)?;
            let (ek, eb) = (f64::from(ket) * sk, f64::from(bra) * sb);
            for s in 0..dim {
                // (1 + ek·P_k)(1 + eb·P_b)|s⟩ / 4
                let mut v: BTreeMap<usize, C64> = BTreeMap::new();
                let (s1, p1) = pk.apply(s);
                let (s2, p2) = pb.apply(s);
                let (s3, p3) = pb.apply(s1);
                for (t, c) in [(s, C64::from(1.0)), (s1, p1 * ek), (s2, p2 * eb), (s3, p1 * p3 * ek * eb)] {
                    *v.entry(t).or_default() += c * 0.25;
                }
                if *v.keys().next().unwrap() != s {
                    continue;
                }
                let norm = v.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    v.values_mut().for_each(|c| *c /= norm);
                    columns.push(v);
                }
            }
        }
    }
    let columns = columns.into_iter().map(|c| c.into_iter().filter(|(_, v)| v.norm() > 0.0).collect()).collect();
    Ok(SectorBasis { dim, columns })
}

/// Ascending spectrum of `spec`, optionally within a sector.
pub fn spectrum(spec: &HamiltonianSpec, sector: Option<Sector>) -> Result<Vec<f64>> {
    let h = build_hamiltonian(spec)?;
    if !spec.is_hermitian() {
        return Err(ContinuumError::Unsupported("spectra of non-Hermitian forms"));
    }
    match sector {
        None => eigenvalues(&h),
        Some(s) => eigenvalues(&sector_basis(spec, s)?.restrict(&h)),
    }
}

/// Largest deviation between the sorted spectra of two models.
pub fn spectral_match(a: &HamiltonianSpec, b: &HamiltonianSpec, sector: Option<Sector>) -> Result<f64> {
    let ea = spectrum(a, sector)?;
    let eb = spectrum(b, sector)?;
    if ea.len() != eb.len() {
        return Err(ContinuumError::DimensionMismatch(ea.len(), eb.len()));
    }
    Ok(ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

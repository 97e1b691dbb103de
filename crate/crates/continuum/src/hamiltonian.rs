//! Hamiltonian specifications and dense assembly.
//!
//! Doubled kinds act on `2L` qubits with ket site `i` at qubit `2i` and its
//! bra partner at `2i + 1`, the layout of the simulation core's `|ρ⟩⟩`.
//! The XXZ and fermion kinds act on a chain of `2L` sites.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use repcode::kernels::Pauli;
use repcode::model::{n_bonds, Boundary};
use serde::{Deserialize, Serialize};

use crate::error::{ContinuumError, Result};
use crate::ops::{add_pauli, bit, hermiticity_error, Matrix, Monomial};
use crate::xxz::XxzParams;

/// Largest `L` for the kinds on `2L` qubits.
pub const MAX_L: usize = 6;
/// Largest chain for the single-species transverse-field Ising kind.
pub const MAX_TFIM_L: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    AshkinTellerH1,
    AshkinTellerH2,
    StaggeredXxz,
    JwFermion,
    TfimQ1,
}

impl HamiltonianKind {
    /// Required and optional coupling names.
    pub fn coupling_names(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Self::AshkinTellerH1 | Self::AshkinTellerH2 => (&["lambda_x", "lambda_zz", "q_x", "q_zz"], &[]),
            Self::StaggeredXxz => (&["j", "delta1", "delta2", "k"], &[]),
            Self::JwFermion => (&["j_n", "k_n"], &["theta_n"]),
            Self::TfimQ1 => (&["j_zz", "q_x"], &[]),
        }
    }

    pub fn is_doubled(self) -> bool {
        matches!(self, Self::AshkinTellerH1 | Self::AshkinTellerH2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Scalar(f64),
    Array(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub couplings: BTreeMap<String, Coupling>,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

fn scalars(pairs: &[(&str, f64)]) -> BTreeMap<String, Coupling> {
    pairs.iter().map(|&(k, v)| (k.to_string(), Coupling::Scalar(v))).collect()
}

impl HamiltonianSpec {
    /// `H1` (forced measurements) or `H2` (two replicas).
    pub fn ashkin_teller(
        kind: HamiltonianKind,
        lambda_x: f64,
        lambda_zz: f64,
        q_x: f64,
        q_zz: f64,
        l: usize,
        boundary: Boundary,
    ) -> Self {
        let couplings = scalars(&[("lambda_x", lambda_x), ("lambda_zz", lambda_zz), ("q_x", q_x), ("q_zz", q_zz)]);
        Self { kind, couplings, l, boundary }
    }

    pub fn h1(lambda_x: f64, lambda_zz: f64, q_x: f64, q_zz: f64, l: usize, boundary: Boundary) -> Self {
        Self::ashkin_teller(HamiltonianKind::AshkinTellerH1, lambda_x, lambda_zz, q_x, q_zz, l, boundary)
    }

    pub fn h2(lambda_x: f64, lambda_zz: f64, q_x: f64, q_zz: f64, l: usize, boundary: Boundary) -> Self {
        Self::ashkin_teller(HamiltonianKind::AshkinTellerH2, lambda_x, lambda_zz, q_x, q_zz, l, boundary)
    }

    pub fn xxz(p: XxzParams, l: usize, boundary: Boundary) -> Self {
        let couplings = scalars(&[("j", p.j), ("delta1", p.delta1), ("delta2", p.delta2), ("k", p.k)]);
        Self { kind: HamiltonianKind::StaggeredXxz, couplings, l, boundary }
    }

    /// Fermion chain on `2L` open sites with one value per bond.
    pub fn fermion(j_n: Vec<f64>, k_n: Vec<f64>, theta_n: Option<Vec<f64>>, l: usize) -> Self {
        let mut couplings = BTreeMap::new();
        couplings.insert("j_n".to_string(), Coupling::Array(j_n));
        couplings.insert("k_n".to_string(), Coupling::Array(k_n));
        if let Some(t) = theta_n {
            couplings.insert("theta_n".to_string(), Coupling::Array(t));
        }
        Self { kind: HamiltonianKind::JwFermion, couplings, l, boundary: Boundary::Open }
    }

    /// Fermion form of the forced-measurement model: X-derived values on
    /// bonds `(2i, 2i+1)` and ZZ-derived values on bonds `(2i+1, 2i+2)`.
    pub fn forced_fermion(
        lambda_x: f64,
        lambda_zz: f64,
        q_x: f64,
        q_zz: f64,
        theta: Option<(f64, f64)>,
        l: usize,
    ) -> Self {
        let stagger = |a: f64, b: f64| (0..2 * l - 1).map(|n| if n % 2 == 0 { a } else { b }).collect::<Vec<_>>();
        Self::fermion(
            stagger(lambda_x, lambda_zz),
            stagger(q_x, q_zz),
            theta.map(|(tx, tzz)| stagger(tx, tzz)),
            l,
        )
    }

    pub fn tfim(j_zz: f64, q_x: f64, l: usize, boundary: Boundary) -> Self {
        Self { kind: HamiltonianKind::TfimQ1, couplings: scalars(&[("j_zz", j_zz), ("q_x", q_x)]), l, boundary }
    }

    pub fn n_qubits(&self) -> usize {
        match self.kind {
            HamiltonianKind::TfimQ1 => self.l,
            _ => 2 * self.l,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    /// Whether the assembled matrix is expected to be Hermitian.
    pub fn is_hermitian(&self) -> bool {
        match self.couplings.get("theta_n") {
            Some(Coupling::Array(t)) => t.iter().all(|&v| v == 0.0),
            _ => true,
        }
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        match self.couplings.get(name) {
            Some(Coupling::Scalar(v)) => Ok(*v),
            Some(Coupling::Array(_)) => Err(ContinuumError::CouplingShape(name.into())),
            None => Err(ContinuumError::MissingCoupling(name.into())),
        }
    }

    pub fn array(&self, name: &str) -> Result<Option<&[f64]>> {
        match self.couplings.get(name) {
            Some(Coupling::Array(v)) if v.len() == 2 * self.l - 1 => Ok(Some(v)),
            Some(_) => Err(ContinuumError::CouplingShape(name.into())),
            None => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(ContinuumError::OutOfRange("L"));
        }
        let limit = if self.kind == HamiltonianKind::TfimQ1 { MAX_TFIM_L } else { MAX_L };
        if self.l > limit {
            return Err(ContinuumError::MemoryBudget(self.n_qubits()));
        }
        if self.boundary == Boundary::Periodic {
            if self.kind == HamiltonianKind::JwFermion {
                return Err(ContinuumError::Unsupported("periodic fermion chains"));
            }
            if self.l < 3 && self.kind != HamiltonianKind::StaggeredXxz {
                return Err(ContinuumError::OutOfRange("L"));
            }
        }
        let (required, optional) = self.kind.coupling_names();
        if let Some(bad) = self.couplings.keys().find(|k| !required.contains(&k.as_str()) && !optional.contains(&k.as_str())) {
            return Err(ContinuumError::UnknownCoupling(bad.clone()));
        }
        if let Some(missing) = required.iter().find(|k| !self.couplings.contains_key(**k)) {
            return Err(ContinuumError::MissingCoupling(missing.to_string()));
        }
        Ok(())
    }
}

/// Doubled-space Ashkin-Teller Hamiltonian
/// `−Σ[a(X + X') + b(ZZ + Z'Z') + c XX' + d ZZZ'Z']`.
fn ashkin_teller(a: f64, b: f64, c: f64, d: f64, l: usize, boundary: Boundary) -> Matrix {
    let n = 2 * l;
    let dim = 1 << n;
    let mut h = Matrix::zeros((dim, dim));
    let (ket, bra) = (|i: usize| 2 * i, |i: usize| 2 * i + 1);
    for i in 0..l {
        add_pauli(&mut h, n, -a, &[(ket(i), Pauli::X)]);
        add_pauli(&mut h, n, -a, &[(bra(i), Pauli::X)]);
        add_pauli(&mut h, n, -c, &[(ket(i), Pauli::X), (bra(i), Pauli::X)]);
    }
    for bnd in 0..n_bonds(l, boundary) {
        let (i, j) = (bnd, (bnd + 1) % l);
        add_pauli(&mut h, n, -b, &[(ket(i), Pauli::Z), (ket(j), Pauli::Z)]);
        add_pauli(&mut h, n, -b, &[(bra(i), Pauli::Z), (bra(j), Pauli::Z)]);
        add_pauli(
            &mut h,
            n,
            -d,
            &[(ket(i), Pauli::Z), (ket(j), Pauli::Z), (bra(i), Pauli::Z), (bra(j), Pauli::Z)],
        );
    }
    h
}

/// `Σ_j [(J − (−1)^j Δ1)(σˣσˣ + σʸσʸ) + (K − (−1)^j Δ2) σᶻσᶻ]` with `j`
/// counted from 1 along the `2L`-site chain.
fn staggered_xxz(p: XxzParams, l: usize, boundary: Boundary) -> Matrix {
    let n = 2 * l;
    let dim = 1 << n;
    let mut h = Matrix::zeros((dim, dim));
    for b in 0..n_bonds(n, boundary) {
        let (i, j) = (b, (b + 1) % n);
        let stagger = if b % 2 == 0 { 1.0 } else { -1.0 };
        let hop = p.j + stagger * p.delta1;
        let zz = p.k + stagger * p.delta2;
        add_pauli(&mut h, n, hop, &[(i, Pauli::X), (j, Pauli::X)]);
        add_pauli(&mut h, n, hop, &[(i, Pauli::Y), (j, Pauli::Y)]);
        add_pauli(&mut h, n, zz, &[(i, Pauli::Z), (j, Pauli::Z)]);
    }
    h
}

/// Annihilator `a_k = σ⁻_k Π_{j<k}(−σᶻ_j)` on an `n`-site chain, with an
/// occupied site being spin up.
pub fn annihilator(n: usize, k: usize) -> Monomial {
    let entries = (0..1usize << n)
        .map(|s| {
            if s & bit(n, k) != 0 {
                return None;
            }
            let ups_before = (0..k).filter(|&j| s & bit(n, j) == 0).count();
            let sign = if ups_before % 2 == 0 { 1.0 } else { -1.0 };
            Some((s | bit(n, k), C64::from(sign)))
        })
        .collect();
    Monomial { entries }
}

/// `−2Σ J_n(a†_n a_{n+1} + h.c.) + Σ K_n(2n_n − 1)(2n_{n+1} − 1) − iΣ θ_n(a_n a_{n+1} + h.c.)`.
fn fermion(j_n: &[f64], k_n: &[f64], theta_n: Option<&[f64]>, l: usize) -> Matrix {
    let n = 2 * l;
    let dim = 1 << n;
    let a: Vec<Monomial> = (0..n).map(|k| annihilator(n, k)).collect();
    let ad: Vec<Monomial> = a.iter().map(Monomial::adjoint).collect();
    let charge: Vec<Monomial> = (0..n)
        .map(|k| {
            let num = ad[k].mul(&a[k]);
            Monomial::diagonal(dim, |s| num.entries[s].map_or(C64::from(-1.0), |(_, v)| 2.0 * v - 1.0))
        })
        .collect();
    let mut h = Matrix::zeros((dim, dim));
    for b in 0..n - 1 {
        let hop = ad[b].mul(&a[b + 1]);
        hop.add_to(&mut h, C64::from(-2.0 * j_n[b]));
        hop.adjoint().add_to(&mut h, C64::from(-2.0 * j_n[b]));
        charge[b].mul(&charge[b + 1]).add_to(&mut h, C64::from(k_n[b]));
        if let Some(theta) = theta_n {
            let c = C64::new(0.0, -theta[b]);
            let pair = a[b].mul(&a[b + 1]);
            pair.add_to(&mut h, c);
            pair.adjoint().add_to(&mut h, c);
        }
    }
    h
}

fn tfim(j_zz: f64, q_x: f64, l: usize, boundary: Boundary) -> Matrix {
    let dim = 1 << l;
    let mut h = Matrix::zeros((dim, dim));
    for i in 0..l {
        add_pauli(&mut h, l, -2.0 * q_x, &[(i, Pauli::X)]);
    }
    for b in 0..n_bonds(l, boundary) {
        add_pauli(&mut h, l, -j_zz, &[(b, Pauli::Z), ((b + 1) % l, Pauli::Z)]);
    }
    h
}

/// Assembles the dense matrix of `spec`.
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<Matrix> {
    spec.validate()?;
    let (l, bc) = (spec.l, spec.boundary);
    let h = match spec.kind {
        HamiltonianKind::AshkinTellerH1 | HamiltonianKind::AshkinTellerH2 => {
            let lx = spec.scalar("lambda_x")?;
            let lzz = spec.scalar("lambda_zz")?;
            let qx = spec.scalar("q_x")?;
            let qzz = spec.scalar("q_zz")?;
            if spec.kind == HamiltonianKind::AshkinTellerH1 {
                ashkin_teller(lx, lzz, qx, qzz, l, bc)
            } else {
                let (lx2, lzz2) = (lx * lx, lzz * lzz);
                ashkin_teller(lx2, lzz2, lx2 + qx, lzz2 + qzz, l, bc)
            }
        }
        HamiltonianKind::StaggeredXxz => {
            let p = XxzParams {
                j: spec.scalar("j")?,
                delta1: spec.scalar("delta1")?,
                delta2: spec.scalar("delta2")?,
                k: spec.scalar("k")?,
            };
            staggered_xxz(p, l, bc)
        }
        HamiltonianKind::JwFermion => {
            let missing = |name: &str| ContinuumError::MissingCoupling(name.into());
            let j_n = spec.array("j_n")?.ok_or_else(|| missing("j_n"))?;
            let k_n = spec.array("k_n")?.ok_or_else(|| missing("k_n"))?;
            fermion(j_n, k_n, spec.array("theta_n")?, l)
        }
        HamiltonianKind::TfimQ1 => tfim(spec.scalar("j_zz")?, spec.scalar("q_x")?, l, bc),
    };
    if spec.is_hermitian() {
        let err = hermiticity_error(&h);
        if err > 1e-12 {
            return Err(ContinuumError::NotHermitian(err));
        }
    }
    Ok(h)
}

//! Matrix-product representation of `|ρ⟩⟩` with local dimension 4.
//!
//! The chain holds the reference qubit (if any) at position 0, followed by
//! the system qubits. Each site is stored in the orthonormal Pauli basis
//! `a ∈ {I, X, Y, Z}`, where the coefficients `tr(σ_a ρ)/√2` of a Hermitian
//! `ρ` are real; kernels given in the `p = 2s + s'` basis are rotated on entry
//! and [`DoubledMps::to_dense_amplitudes`] rotates back. Tensors are
//! `(left bond, a, right bond)`.
//!
//! The state is kept in mixed canonical form around `center`; trace
//! environments used for Born probabilities are cached and invalidated as
//! tensors change.

use std::io::{Read, Write};

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use ndarray_linalg::{JobSvd, QR, SVD, SVDDC};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, Pauli, StepKernels, ONE, ZERO};
use crate::model::{n_bonds, Boundary, InitialState, SimParams, Step, TrajectoryRecord};
use crate::observables::{string_sites, Measure};
use crate::trajectory::{self, Engine, RunOptions, Stage};

/// Largest discarded weight tolerated in a single gate.
pub const MAX_GATE_DISCARD: f64 = 1e-3;

/// Relative squared singular value below which a bond direction is dropped
/// even at zero cutoff.
const NUMERICAL_ZERO: f64 = 1e-28;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Trace functional in the Pauli basis.
const TRACE_P: [f64; 4] = [SQRT2, 0.0, 0.0, 0.0];

/// Action of `O ⊗ O*` on Pauli coefficients for `O = Z` and `O = X`.
const Z_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
const X_SIGNS: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub chi_max: usize,
    /// Discarded weight threshold, relative to the squared norm of the bond.
    pub svd_cutoff: f64,
    pub renormalize_after_gate: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { chi_max: 128, svd_cutoff: 1e-10, renormalize_after_gate: true }
    }
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, svd_cutoff: f64) -> Result<Self> {
        Self { chi_max, svd_cutoff, renormalize_after_gate: true }.validate()
    }

    pub fn validate(self) -> Result<Self> {
        if self.chi_max < 2 {
            return Err(Error::OutOfRange("chi_max"));
        }
        if !(0.0..=1e-4).contains(&self.svd_cutoff) {
            return Err(Error::OutOfRange("svd_cutoff"));
        }
        Ok(self)
    }
}

/// Unitary change of basis `c_a = Σ_p V[a, p] ρ_p`.
fn pauli_basis() -> Array2<C64> {
    let mut v = Array2::zeros((4, 4));
    for (a, o) in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
        for (p, z) in o.trace_vector().into_iter().enumerate() {
            v[[a, p]] = z / SQRT2;
        }
    }
    v
}

fn basis_for(n_sites: usize) -> Array2<C64> {
    let v = pauli_basis();
    if n_sites == 1 {
        v
    } else {
        kernels::kron(&v, &v)
    }
}

/// Kernel in the Pauli basis. Hermiticity-preserving kernels are real.
pub fn kernel_to_pauli(k: &Array2<C64>) -> Array2<f64> {
    let w = basis_for(if k.nrows() == 4 { 1 } else { 2 });
    let wd = w.t().mapv(|z| z.conj());
    w.dot(k).dot(&wd).mapv(|z| z.re)
}

/// Row functional in the Pauli basis.
pub fn row_to_pauli(r: &[C64]) -> Vec<f64> {
    let w = basis_for(if r.len() == 4 { 1 } else { 2 });
    let r = Array1::from(r.to_vec());
    r.dot(&w.t().mapv(|z| z.conj())).iter().map(|z| z.re).collect()
}

/// Parity of a Pauli basis element under conjugation by `ΠX`: `Y` and `Z` are odd.
fn pauli_parity(a: usize) -> u8 {
    u8::from(a == 2 || a == 3)
}

/// Bond labels of the GHZ construction below.
const GHZ_LABELS: [u8; 4] = [0, 1, 0, 1];

/// `ρ = ½ Σ_{s,s'} |s…s⟩⟨s'…s'|` with a real bond of dimension 4.
///
/// Bond states 0 and 1 track the parity of the number of `Z` factors in the
/// diagonal part `2^{-n} Σ_{even #Z} Z…`. States 2 and 3 carry the product of
/// `|↑⟩⟨↓| = (X + iY)/2` as a complex number encoded in a real 2×2 block; its
/// real part, doubled, accounts for both coherences.
fn ghz_tensors(n: usize) -> Vec<Array3<f64>> {
    let h = 1.0 / SQRT2;
    let mut w = Array3::zeros((4, 4, 4));
    w[[0, 0, 0]] = h;
    w[[0, 3, 1]] = h;
    w[[1, 0, 1]] = h;
    w[[1, 3, 0]] = h;
    for b in 2..4 {
        w[[b, 1, b]] = h;
    }
    w[[2, 2, 3]] = h;
    w[[3, 2, 2]] = -h;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut t = w.clone();
        if k == 0 {
            let left = [0.5, 0.0, 1.0, 0.0];
            t = Array3::from_shape_fn((1, 4, 4), |(_, a, y)| (0..4).map(|x| left[x] * w[[x, a, y]]).sum());
        }
        if k == n - 1 {
            let right = [2.0, 0.0, 1.0, 0.0];
            let dl = t.dim().0;
            t = Array3::from_shape_fn((dl, 4, 1), |(x, a, _)| (0..4).map(|y| t[[x, a, y]] * right[y]).sum());
        }
        out.push(t);
    }
    out
}

/// Commutation sign of `σ_b` with each basis element.
fn conjugation_signs(b: Pauli) -> [f64; 4] {
    let bi = b as usize;
    std::array::from_fn(|a| if a == 0 || bi == 0 || a == bi { 1.0 } else { -1.0 })
}

#[derive(Clone, Copy, Debug)]
struct Restore {
    /// Original positions of the bond.
    bond: (usize, usize),
    left: usize,
    reversed: bool,
    from: usize,
    to: usize,
}

#[derive(Clone, Debug)]
pub struct DoubledMps {
    tensors: Vec<Array3<f64>>,
    center: usize,
    pub log_weight: f64,
    pub policy: TruncationPolicy,
    l: usize,
    has_reference: bool,
    boundary: Boundary,
    /// Sum of discarded weights over all gates.
    pub discarded_weight: f64,
    /// Largest discarded weight of a single gate.
    pub max_gate_discard: f64,
    lenv: Vec<Array1<f64>>,
    lvalid: usize,
    renv: Vec<Array1<f64>>,
    rvalid: usize,
    pending: Option<Restore>,
    /// Whether every tensor is block diagonal in the `ΠX` parity.
    graded: bool,
    /// Parity label of each bond index; bond `k` sits left of position `k`.
    labels: Vec<Vec<u8>>,
}

fn linalg_err(e: ndarray_linalg::error::LinalgError) -> Error {
    Error::Linalg(e.to_string())
}

/// `Σ_a w_a A[:, a, :]`.
fn weighted_slice(a: &Array3<f64>, w: &[f64]) -> Array2<f64> {
    let (l, _, r) = a.dim();
    let mut m = Array2::zeros((l, r));
    for (p, &wp) in w.iter().enumerate() {
        if wp != 0.0 {
            m.scaled_add(wp, &a.index_axis(Axis(1), p));
        }
    }
    m
}

fn left_step(v: &Array1<f64>, a: &Array3<f64>, w: &[f64]) -> Array1<f64> {
    v.dot(&weighted_slice(a, w))
}

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn transposed(a: &ArrayView2<f64>) -> Array2<f64> {
    a.t().as_standard_layout().into_owned()
}

/// Applies a `d×d` matrix to the physical leg of a `(χl, d, χr)` tensor.
fn apply_physical(k: &Array2<f64>, t: &Array3<f64>) -> Array3<f64> {
    let (dl, d, dr) = t.dim();
    let perm = t.view().permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
    let out = k.dot(&perm.into_shape_with_order((d, dl * dr)).unwrap());
    out.into_shape_with_order((d, dl, dr))
        .unwrap()
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .into_owned()
}

/// The four pieces `F_a = A_aᵀ E A_a` of a two-copy transfer step.
fn transfer_pieces(e: &Array2<f64>, a: &Array3<f64>) -> [Array2<f64>; 4] {
    std::array::from_fn(|p| {
        let ap = a.index_axis(Axis(1), p);
        ap.t().dot(&e.dot(&ap))
    })
}

fn combine(pieces: &[Array2<f64>; 4], signs: &[f64; 4]) -> Array2<f64> {
    let mut out = pieces[0].clone() * signs[0];
    for (f, &s) in pieces.iter().zip(signs).skip(1) {
        out.scaled_add(s, f);
    }
    out
}

fn transfer(e: &Array2<f64>, a: &Array3<f64>, signs: &[f64; 4]) -> Array2<f64> {
    combine(&transfer_pieces(e, a), signs)
}

fn add(a: Option<Array2<f64>>, b: Option<Array2<f64>>) -> Option<Array2<f64>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a + b),
        (a, None) => a,
        (None, b) => b,
    }
}

fn trace_of(m: &Array2<f64>) -> f64 {
    m.diag().sum()
}

/// Labels of the combined `(bond, a)` index.
fn row_parities(left: &[u8], graded: bool) -> Vec<u8> {
    left.iter().flat_map(|&x| (0..4).map(move |a| if graded { x ^ pauli_parity(a) } else { x })).collect()
}

/// Labels of the combined `(a, bond)` index.
fn col_parities(right: &[u8], graded: bool) -> Vec<u8> {
    (0..4).flat_map(|a| right.iter().map(move |&y| if graded { y ^ pauli_parity(a) } else { y })).collect()
}

fn sector(par: &[u8], sigma: u8) -> Vec<usize> {
    par.iter().enumerate().filter(|(_, &p)| p == sigma).map(|(i, _)| i).collect()
}

/// Factorizes a parity block-diagonal matrix as `m = L·R` sector by sector.
/// Returns `L`, `R` and the labels of the new inner index.
fn block_factor(
    m: &ArrayView2<f64>,
    rp: &[u8],
    cp: &[u8],
    f: impl Fn(Array2<f64>) -> (Array2<f64>, Array2<f64>),
) -> (Array2<f64>, Array2<f64>, Vec<u8>) {
    let mut parts = Vec::new();
    for sigma in 0..2 {
        let (rows, cols) = (sector(rp, sigma), sector(cp, sigma));
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let sub = m.select(Axis(0), &rows).select(Axis(1), &cols);
        let (l, r) = f(sub);
        parts.push((sigma, rows, cols, l, r));
    }
    let k: usize = parts.iter().map(|p| p.3.ncols()).sum();
    let mut lm = Array2::zeros((m.nrows(), k));
    let mut rm = Array2::zeros((k, m.ncols()));
    let mut labels = Vec::with_capacity(k);
    for (sigma, rows, cols, l, r) in parts {
        let off = labels.len();
        for (i, &row) in rows.iter().enumerate() {
            for j in 0..l.ncols() {
                lm[[row, off + j]] = l[[i, j]];
            }
        }
        for j in 0..r.nrows() {
            for (c, &col) in cols.iter().enumerate() {
                rm[[off + j, col]] = r[[j, c]];
            }
        }
        labels.extend(std::iter::repeat_n(sigma, l.ncols()));
    }
    (lm, rm, labels)
}

impl DoubledMps {
    pub fn n_positions(&self) -> usize {
        self.tensors.len()
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Site tensors in the Pauli basis.
    pub fn tensors(&self) -> &[Array3<f64>] {
        &self.tensors
    }

    pub fn has_reference(&self) -> bool {
        self.has_reference
    }

    /// Chain position of system qubit `i`.
    pub fn pos(&self, i: usize) -> usize {
        i + usize::from(self.has_reference)
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.dim().2).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn assemble(
        tensors: Vec<Array3<f64>>,
        l: usize,
        has_reference: bool,
        boundary: Boundary,
        policy: TruncationPolicy,
    ) -> Self {
        let n = tensors.len();
        let mut labels: Vec<Vec<u8>> = tensors.iter().map(|t| vec![0; t.dim().0]).collect();
        labels.push(vec![0]);
        Self {
            graded: false,
            labels,
            tensors,
            center: n - 1,
            log_weight: 0.0,
            policy,
            l,
            has_reference,
            boundary,
            discarded_weight: 0.0,
            max_gate_discard: 0.0,
            lenv: vec![Array1::ones(1); n],
            lvalid: 0,
            renv: vec![Array1::ones(1); n],
            rvalid: n - 1,
            pending: None,
        }
    }

    /// Exact initial states.
    pub fn build(kind: InitialState, l: usize, boundary: Boundary, policy: TruncationPolicy) -> Result<Self> {
        let policy = policy.validate()?;
        if l == 0 {
            return Err(Error::OutOfRange("L"));
        }
        let has_reference = kind.has_reference();
        let n = l + usize::from(has_reference);
        let v = pauli_basis();
        let product = |w: [f64; 4]| -> Vec<Array3<f64>> {
            let c: Vec<f64> = (0..4).map(|a| (0..4).map(|p| v[[a, p]] * w[p]).sum::<C64>().re).collect();
            (0..n).map(|_| Array3::from_shape_fn((1, 4, 1), |(_, a, _)| c[a])).collect()
        };
        let tensors = match kind {
            InitialState::AllUp | InitialState::AllUpWithReference => product([1.0, 0.0, 0.0, 0.0]),
            InitialState::MaximallyMixed => product([0.5, 0.0, 0.0, 0.5]),
            InitialState::GhzPlus | InitialState::GhzWithReference if n == 1 => product([0.5; 4]),
            InitialState::GhzPlus | InitialState::GhzWithReference => ghz_tensors(n),
        };
        let mut mps = Self::assemble(tensors, l, has_reference, boundary, policy);
        if n > 1 && matches!(kind, InitialState::GhzPlus | InitialState::GhzWithReference) {
            for k in 1..n {
                mps.labels[k] = GHZ_LABELS.to_vec();
            }
        }
        mps.graded = mps.check_grading();
        if !mps.graded {
            mps.ungrade();
        }
        mps.canonicalize(usize::from(has_reference));
        Ok(mps)
    }

    /// Whether the tensors respect the current bond labels.
    fn check_grading(&self) -> bool {
        self.tensors.iter().enumerate().all(|(k, t)| {
            t.indexed_iter().all(|((x, a, y), &v)| {
                v == 0.0 || self.labels[k][x] ^ pauli_parity(a) == self.labels[k + 1][y]
            })
        })
    }

    /// Drops the parity structure; all later factorizations are dense.
    fn ungrade(&mut self) {
        self.graded = false;
        for (k, t) in self.tensors.iter().enumerate() {
            self.labels[k] = vec![0; t.dim().0];
        }
        self.labels[self.tensors.len()] = vec![0];
    }

    /// Whether the state keeps parity block structure.
    pub fn is_graded(&self) -> bool {
        self.graded
    }

    /// Projects a Pauli-basis kernel onto its parity-conserving part, or
    /// ungrades the state if it has a sizable parity-changing part.
    fn grade_kernel(&mut self, kernel: &Array2<f64>) -> Array2<f64> {
        if !self.graded {
            return kernel.clone();
        }
        let par = |i: usize| if kernel.nrows() == 4 { pauli_parity(i) } else { pauli_parity(i / 4) ^ pauli_parity(i % 4) };
        let scale = kernel.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut out = kernel.clone();
        let mut breaks = false;
        for ((i, j), x) in out.indexed_iter_mut() {
            if par(i) != par(j) {
                breaks |= x.abs() > 1e-13 * scale;
                *x = 0.0;
            }
        }
        if breaks {
            self.ungrade();
            return kernel.clone();
        }
        out
    }

    /// Full canonicalization with the center at `target`, compressing exact zeros.
    pub fn canonicalize(&mut self, target: usize) {
        self.center = self.tensors.len() - 1;
        self.invalidate_all();
        while self.center > 0 {
            self.shift_left();
        }
        while self.center < target {
            self.shift_right();
        }
    }

    fn invalidate_all(&mut self) {
        self.lvalid = 0;
        self.rvalid = self.tensors.len() - 1;
    }

    fn invalidate(&mut self, k: usize) {
        self.lvalid = self.lvalid.min(k);
        self.rvalid = self.rvalid.max(k);
    }

    /// QR step moving the center one site to the right.
    fn shift_right(&mut self) {
        let c = self.center;
        let (dl, _, dr) = self.tensors[c].dim();
        let m = self.tensors[c].view().into_shape_with_order((dl * 4, dr)).unwrap();
        let rp = row_parities(&self.labels[c], self.graded);
        let (q, r, labels) = block_factor(&m, &rp, &self.labels[c + 1], |sub| sub.qr().expect("QR failed"));
        self.labels[c + 1] = labels;
        let k = q.ncols();
        self.tensors[c] = standard(q).into_shape_with_order((dl, 4, k)).unwrap();
        let (_, _, dr2) = self.tensors[c + 1].dim();
        let nm = self.tensors[c + 1].view().into_shape_with_order((dr, 4 * dr2)).unwrap();
        self.tensors[c + 1] = standard(r.dot(&nm)).into_shape_with_order((k, 4, dr2)).unwrap();
        self.invalidate(c);
        self.invalidate(c + 1);
        self.center += 1;
    }

    /// LQ step moving the center one site to the left.
    fn shift_left(&mut self) {
        let c = self.center;
        let (dl, _, dr) = self.tensors[c].dim();
        let m = self.tensors[c].view().into_shape_with_order((dl, 4 * dr)).unwrap();
        let cp = col_parities(&self.labels[c + 1], self.graded);
        let (l, q, labels) = block_factor(&m, &self.labels[c], &cp, |sub| {
            let (q, r) = transposed(&sub.view()).qr().expect("QR failed");
            (transposed(&r.view()), transposed(&q.view()))
        });
        self.labels[c] = labels;
        let k = q.nrows();
        self.tensors[c] = q.into_shape_with_order((k, 4, dr)).unwrap();
        let (dl0, _, _) = self.tensors[c - 1].dim();
        let pm = self.tensors[c - 1].view().into_shape_with_order((dl0 * 4, dl)).unwrap();
        self.tensors[c - 1] = standard(pm.dot(&l)).into_shape_with_order((dl0, 4, k)).unwrap();
        self.invalidate(c);
        self.invalidate(c - 1);
        self.center -= 1;
    }

    pub fn move_center(&mut self, target: usize) {
        while self.center < target {
            self.shift_right();
        }
        while self.center > target {
            self.shift_left();
        }
    }

    fn renormalize_center(&mut self) {
        if !self.policy.renormalize_after_gate {
            return;
        }
        let c = self.center;
        let norm = self.tensors[c].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            self.tensors[c].mapv_inplace(|x| x / norm);
            self.log_weight += norm.ln();
        }
    }

    fn apply_one_site_pauli(&mut self, k: usize, kernel: &Array2<f64>) {
        let kernel = self.grade_kernel(kernel);
        self.move_center(k);
        self.tensors[k] = apply_physical(&kernel, &self.tensors[k]);
        self.invalidate(k);
        self.renormalize_center();
    }

    /// Applies a 4×4 kernel (in the `p` basis) to the site at position `k`.
    pub fn apply_one_site(&mut self, k: usize, kernel: &Array2<C64>) -> Result<()> {
        if k >= self.tensors.len() {
            return Err(Error::InvalidSite(k));
        }
        if kernel.dim() != (4, 4) {
            return Err(Error::KernelShape(kernel.nrows()));
        }
        self.apply_one_site_pauli(k, &kernel_to_pauli(kernel));
        Ok(())
    }

    /// Applies a 16×16 kernel (in the `p` basis) to positions `(k, k+1)`,
    /// leaving the center at `new_center ∈ {k, k+1}`.
    pub fn apply_two_site(&mut self, k: usize, kernel: &Array2<C64>, new_center: usize) -> Result<()> {
        if k + 1 >= self.tensors.len() {
            return Err(Error::InvalidSite(k));
        }
        if kernel.dim() != (16, 16) {
            return Err(Error::KernelShape(kernel.nrows()));
        }
        self.apply_two_site_pauli(k, &kernel_to_pauli(kernel), new_center)
    }

    fn apply_two_site_pauli(&mut self, k: usize, kernel: &Array2<f64>, new_center: usize) -> Result<()> {
        let kernel = &self.grade_kernel(kernel);
        if self.center < k {
            self.move_center(k);
        } else if self.center > k + 1 {
            self.move_center(k + 1);
        }
        let (dl, _, dm) = self.tensors[k].dim();
        let (_, _, dr) = self.tensors[k + 1].dim();
        let a = self.tensors[k].view().into_shape_with_order((dl * 4, dm)).unwrap();
        let b = self.tensors[k + 1].view().into_shape_with_order((dm, 4 * dr)).unwrap();
        let theta = a.dot(&b).into_shape_with_order((dl, 16, dr)).unwrap();
        let theta = apply_physical(kernel, &theta).into_shape_with_order((dl * 4, 4 * dr)).unwrap();
        let rp = row_parities(&self.labels[k], self.graded);
        let cp = col_parities(&self.labels[k + 2], self.graded);
        let (mut u, sv, mut vt, labels, discarded) = truncated_svd(theta, &rp, &cp, &self.policy)?;
        self.labels[k + 1] = labels;
        self.discarded_weight += discarded;
        self.max_gate_discard = self.max_gate_discard.max(discarded);
        if discarded > MAX_GATE_DISCARD {
            return Err(Error::TruncationBlowup(discarded));
        }
        let r = sv.len();
        if new_center == k {
            for (mut col, &s) in u.axis_iter_mut(Axis(1)).zip(&sv) {
                col *= s;
            }
        } else {
            for (mut row, &s) in vt.axis_iter_mut(Axis(0)).zip(&sv) {
                row *= s;
            }
        }
        self.tensors[k] = u.into_shape_with_order((dl, 4, r)).unwrap();
        self.tensors[k + 1] = vt.into_shape_with_order((r, 4, dr)).unwrap();
        self.center = if new_center == k { k } else { k + 1 };
        self.invalidate(k);
        self.invalidate(k + 1);
        self.renormalize_center();
        Ok(())
    }

    /// Applies a 4×4 kernel at `site` or a 16×16 kernel at `(site, site+1)`.
    pub fn apply_local_channel(&mut self, site: usize, kernel: &Array2<C64>) -> Result<()> {
        match kernel.nrows() {
            4 => self.apply_one_site(site, kernel),
            16 => {
                let c = if self.center > site { site + 1 } else { site };
                self.apply_two_site(site, kernel, c)
            }
            n => Err(Error::KernelShape(n)),
        }
    }

    /// Moves the tensor at `from` to `to` through nearest-neighbour swaps; the
    /// center travels with it.
    fn move_site(&mut self, from: usize, to: usize) -> Result<()> {
        let swap = kernels::swap_kernel().mapv(|z| z.re);
        self.move_center(from);
        if to < from {
            for k in (to..from).rev() {
                self.apply_two_site_pauli(k, &swap, k)?;
            }
        } else {
            for k in from..to {
                self.apply_two_site_pauli(k, &swap, k + 1)?;
            }
        }
        Ok(())
    }

    fn lenv(&mut self, k: usize) -> Array1<f64> {
        while self.lvalid < k {
            let j = self.lvalid;
            self.lenv[j + 1] = left_step(&self.lenv[j], &self.tensors[j], &TRACE_P);
            self.lvalid += 1;
        }
        self.lenv[k].clone()
    }

    fn renv(&mut self, k: usize) -> Array1<f64> {
        while self.rvalid > k {
            let j = self.rvalid;
            self.renv[j - 1] = weighted_slice(&self.tensors[j], &TRACE_P).dot(&self.renv[j]);
            self.rvalid -= 1;
        }
        self.renv[k].clone()
    }

    /// Trace functional with a Pauli-basis row on one or two adjacent positions.
    fn local_weight(&mut self, k: usize, row: &[f64]) -> f64 {
        let lv = self.lenv(k);
        if row.len() == 4 {
            let rv = self.renv(k);
            return lv.dot(&weighted_slice(&self.tensors[k], row)).dot(&rv);
        }
        let rv = self.renv(k + 1);
        let left: Vec<Array1<f64>> = (0..4).map(|p| lv.dot(&self.tensors[k].index_axis(Axis(1), p))).collect();
        let right: Vec<Array1<f64>> = (0..4).map(|q| self.tensors[k + 1].index_axis(Axis(1), q).dot(&rv)).collect();
        let mut w = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                let r = row[4 * p + q];
                if r != 0.0 {
                    w += r * left[p].dot(&right[q]);
                }
            }
        }
        w
    }

    /// `⟨⟨I|ρ⟩⟩` without the log-weight factor.
    pub fn raw_trace(&mut self) -> f64 {
        let lv = self.lenv(0);
        let rv = self.renv(0);
        lv.dot(&weighted_slice(&self.tensors[0], &TRACE_P)).dot(&rv)
    }

    /// `⟨⟨I|ρ⟩⟩` including `exp(log_weight)`.
    pub fn identity_overlap(&mut self) -> f64 {
        self.raw_trace() * self.log_weight.exp()
    }

    /// Contraction with Pauli-basis vectors at the given positions and the
    /// trace everywhere else.
    fn functional(&self, vectors: &[(usize, [f64; 4])]) -> f64 {
        let mut v = Array1::ones(1);
        for (k, t) in self.tensors.iter().enumerate() {
            let w = vectors.iter().find(|(p, _)| *p == k).map(|(_, w)| w).unwrap_or(&TRACE_P);
            v = left_step(&v, t, w);
        }
        v[0]
    }

    fn pauli_vector(p: Pauli) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[p as usize] = SQRT2;
        v
    }

    fn nonzero_trace(&self) -> Result<f64> {
        let tr = self.functional(&[]);
        if tr == 0.0 || !tr.is_finite() {
            return Err(Error::ZeroTrace);
        }
        Ok(tr)
    }

    /// `tr(Oρ)/tr ρ` for a Pauli string on the ket copy.
    pub fn strong_expectation(&self, ops: &[(usize, Pauli)]) -> Result<f64> {
        let tr = self.nonzero_trace()?;
        let mut vecs = Vec::with_capacity(ops.len());
        for &(i, p) in ops {
            if i >= self.l {
                return Err(Error::InvalidSite(i));
            }
            vecs.push((self.pos(i), Self::pauli_vector(p)));
        }
        Ok(self.functional(&vecs) / tr)
    }

    /// `⟨⟨a|b⟩⟩` including both scales.
    pub fn state_overlap(a: &Self, b: &Self) -> Result<f64> {
        if a.tensors.len() != b.tensors.len() {
            return Err(Error::LengthMismatch(a.tensors.len(), b.tensors.len()));
        }
        let mut e = Array2::ones((1, 1));
        for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
            let mut next = Array2::zeros((ta.dim().2, tb.dim().2));
            for p in 0..4 {
                next += &ta.index_axis(Axis(1), p).t().dot(&e.dot(&tb.index_axis(Axis(1), p)));
            }
            e = next;
        }
        Ok(e[[0, 0]] * (a.log_weight + b.log_weight).exp())
    }

    /// `⟨⟨ρ|ρ⟩⟩` without scale.
    fn raw_self_overlap(&self) -> f64 {
        let mut e = Array2::ones((1, 1));
        for t in &self.tensors {
            e = transfer(&e, t, &[1.0; 4]);
        }
        e[[0, 0]]
    }

    /// `⟨⟨ρ|O⊗O*|ρ⟩⟩/⟨⟨ρ|ρ⟩⟩` for a Pauli string applied to both copies.
    pub fn renyi2_expectation(&self, ops: &[(usize, Pauli)]) -> Result<f64> {
        let mut signs = vec![[1.0; 4]; self.tensors.len()];
        for &(i, p) in ops {
            if i >= self.l {
                return Err(Error::InvalidSite(i));
            }
            let s = &mut signs[self.pos(i)];
            for (x, y) in s.iter_mut().zip(conjugation_signs(p)) {
                *x *= y;
            }
        }
        let mut e = Array2::ones((1, 1));
        let mut norm = Array2::ones((1, 1));
        for (t, s) in self.tensors.iter().zip(&signs) {
            e = transfer(&e, t, s);
            norm = transfer(&norm, t, &[1.0; 4]);
        }
        let n = norm[[0, 0]];
        if !(n > 0.0) {
            return Err(Error::ZeroPurity);
        }
        Ok(e[[0, 0]] / n)
    }

    /// `tr(ρ_A²)/(tr ρ)²` for the positions in `region`. Each copy is traced
    /// outside the region; inside, the two copies are paired.
    pub fn renyi2_subsystem_purity(&self, region: &[usize]) -> Result<f64> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if let Some(&bad) = region.iter().find(|&&k| k >= self.tensors.len()) {
            return Err(Error::InvalidSite(bad));
        }
        let mut e = Array2::ones((1, 1));
        for (k, t) in self.tensors.iter().enumerate() {
            e = if region.contains(&k) {
                transfer(&e, t, &[1.0; 4])
            } else {
                let a = t.index_axis(Axis(1), 0);
                a.t().dot(&e.dot(&a)) * 2.0
            };
        }
        let tr = self.nonzero_trace()?;
        Ok(e[[0, 0]] / (tr * tr))
    }

    /// Unit-trace reference density matrix.
    pub fn reference_matrix(&self) -> Result<[[C64; 2]; 2]> {
        if !self.has_reference {
            return Err(Error::NoReference);
        }
        let mut r = Array1::ones(1);
        for t in self.tensors[1..].iter().rev() {
            r = weighted_slice(t, &TRACE_P).dot(&r);
        }
        let g: Vec<f64> = (0..4).map(|a| self.tensors[0].index_axis(Axis(1), a).row(0).dot(&r)).collect();
        if g[0] == 0.0 {
            return Err(Error::ZeroTrace);
        }
        let mut m = [[ZERO; 2]; 2];
        for (a, o) in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
            let s = o.matrix();
            for (i, row) in m.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x += s[[i, j]] * (g[a] / (2.0 * g[0]));
                }
            }
        }
        Ok(m)
    }

    fn step_positions(&self, step: Step) -> Result<(usize, Option<usize>)> {
        match step {
            Step::X(i) if i < self.l => Ok((self.pos(i), None)),
            Step::Zz(b) if b < n_bonds(self.l, self.boundary) => Ok((self.pos(b), Some(self.pos((b + 1) % self.l)))),
            Step::X(i) | Step::Zz(i) => Err(Error::InvalidSite(i)),
        }
    }

    /// Brings the two positions of a bond next to each other. Returns the left
    /// position of the pair and whether the kernel order is reversed.
    fn bring_adjacent(&mut self, a: usize, b: usize) -> Result<(usize, bool)> {
        if let Some(r) = self.pending {
            if r.bond == (a, b) {
                return Ok((r.left, r.reversed));
            }
            self.restore()?;
        }
        if b == a + 1 {
            return Ok((a, false));
        }
        if a == b + 1 {
            return Ok((b, true));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let reversed = a == hi;
        let c = self.center;
        let (left, from, to) = if c.abs_diff(hi) <= c.abs_diff(lo) {
            self.move_site(hi, lo + 1)?;
            (lo, lo + 1, hi)
        } else {
            self.move_site(lo, hi - 1)?;
            (hi - 1, hi - 1, lo)
        };
        self.pending = Some(Restore { bond: (a, b), left, reversed, from, to });
        Ok((left, reversed))
    }

    fn restore(&mut self) -> Result<()> {
        if let Some(r) = self.pending.take() {
            self.move_site(r.from, r.to)?;
        }
        Ok(())
    }

    /// Serializes tensors, policy and bookkeeping in little-endian binary form.
    pub fn write_checkpoint(&self, w: &mut impl Write) -> Result<()> {
        let io = |e: std::io::Error| Error::Checkpoint(e.to_string());
        w.write_all(b"DMPS0003").map_err(io)?;
        let header = [
            self.l as u64,
            u64::from(self.has_reference),
            u64::from(self.boundary == Boundary::Periodic),
            self.policy.chi_max as u64,
            u64::from(self.policy.renormalize_after_gate),
            self.center as u64,
        ];
        for h in header {
            w.write_all(&h.to_le_bytes()).map_err(io)?;
        }
        for f in [self.policy.svd_cutoff, self.log_weight, self.discarded_weight, self.max_gate_discard] {
            w.write_all(&f.to_le_bytes()).map_err(io)?;
        }
        for t in &self.tensors {
            let (a, _, b) = t.dim();
            w.write_all(&(a as u64).to_le_bytes()).map_err(io)?;
            w.write_all(&(b as u64).to_le_bytes()).map_err(io)?;
            for x in t.iter() {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
        }
        w.write_all(&[u8::from(self.graded)]).map_err(io)?;
        for labels in &self.labels {
            w.write_all(labels).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_checkpoint(r: &mut impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Checkpoint(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != b"DMPS0003" {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut u = || -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(io)?;
            Ok(u64::from_le_bytes(b))
        };
        let l = u()? as usize;
        let has_reference = u()? != 0;
        let boundary = if u()? != 0 { Boundary::Periodic } else { Boundary::Open };
        let chi_max = u()? as usize;
        let renormalize_after_gate = u()? != 0;
        let center = u()? as usize;
        let svd_cutoff = f64::from_bits(u()?);
        let log_weight = f64::from_bits(u()?);
        let discarded_weight = f64::from_bits(u()?);
        let max_gate_discard = f64::from_bits(u()?);
        let n = l + usize::from(has_reference);
        if l == 0 || center >= n {
            return Err(Error::Checkpoint("inconsistent header".into()));
        }
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let a = u()? as usize;
            let b = u()? as usize;
            let data = (0..a * 4 * b).map(|_| u().map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
            tensors.push(Array3::from_shape_vec((a, 4, b), data).map_err(|e| Error::Checkpoint(e.to_string()))?);
        }
        let policy = TruncationPolicy { chi_max, svd_cutoff, renormalize_after_gate };
        let mut mps = Self::assemble(tensors, l, has_reference, boundary, policy);
        let mut flag = [0u8];
        r.read_exact(&mut flag).map_err(io)?;
        for labels in &mut mps.labels {
            r.read_exact(labels).map_err(io)?;
        }
        mps.graded = flag[0] != 0;
        if mps.graded && !mps.check_grading() {
            return Err(Error::Checkpoint("tensors violate parity labels".into()));
        }
        mps.center = center;
        mps.log_weight = log_weight;
        mps.discarded_weight = discarded_weight;
        mps.max_gate_discard = max_gate_discard;
        Ok(mps)
    }

    /// Largest deviation from the left/right isometry conditions around the center.
    pub fn canonical_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for (k, t) in self.tensors.iter().enumerate() {
            let (dl, _, dr) = t.dim();
            let g = if k < self.center {
                let m = t.view().into_shape_with_order((dl * 4, dr)).unwrap();
                m.t().dot(&m)
            } else if k > self.center {
                let m = t.view().into_shape_with_order((dl, 4 * dr)).unwrap();
                m.dot(&m.t())
            } else {
                continue;
            };
            let dev = g.indexed_iter().map(|((i, j), x)| (x - if i == j { 1.0 } else { 0.0 }).abs());
            err = err.max(dev.fold(0.0, f64::max));
        }
        err
    }

    /// Dense amplitudes in the `p` basis, ordered as in the dense engine.
    pub fn to_dense_amplitudes(&self) -> Vec<C64> {
        let vd = pauli_basis().t().mapv(|z| z.conj());
        let mut v = Array2::from_elem((1, 1), ONE);
        for t in &self.tensors {
            let (dl, _, dr) = t.dim();
            let rows = v.nrows();
            let tc = Array3::from_shape_fn((dl, 4, dr), |(x, p, y)| (0..4).map(|a| vd[[p, a]] * t[[x, a, y]]).sum::<C64>());
            let m = tc.into_shape_with_order((dl, 4 * dr)).unwrap();
            v = v.dot(&m).into_shape_with_order((rows * 4, dr)).unwrap();
        }
        let scale = self.log_weight.exp();
        v.iter().map(|z| z * scale).collect()
    }

    /// Copy with the center at position 0, so every other site is a right isometry.
    fn right_canonical(&self) -> Self {
        let mut c = self.clone();
        c.move_center(0);
        c
    }

    /// Left and right trace vectors: `lv[k]` contracts positions `< k`, `rv[k]` positions `≥ k`.
    fn trace_vectors(&self) -> (Vec<Array1<f64>>, Vec<Array1<f64>>) {
        let n = self.tensors.len();
        let mut lv = vec![Array1::ones(1); n + 1];
        let mut rv = vec![Array1::ones(1); n + 1];
        for k in 0..n {
            lv[k + 1] = left_step(&lv[k], &self.tensors[k], &TRACE_P);
        }
        for k in (0..n).rev() {
            rv[k] = weighted_slice(&self.tensors[k], &TRACE_P).dot(&rv[k + 1]);
        }
        (lv, rv)
    }
}

fn thin_svd(theta: Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    match theta.svddc(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
        _ => match theta.svd(true, true).map_err(linalg_err)? {
            (Some(u), s, Some(vt)) => {
                let k = s.len();
                Ok((u.slice_move(s![.., ..k]), s, vt.slice_move(s![..k, ..])))
            }
            _ => Err(Error::Linalg("SVD returned no vectors".into())),
        },
    }
}

type Truncated = (Array2<f64>, Vec<f64>, Array2<f64>, Vec<u8>, f64);

/// Thin SVD of a parity block-diagonal matrix with truncation by discarded
/// weight and bond cap. Also returns the labels of the kept singular vectors.
fn truncated_svd(theta: Array2<f64>, rp: &[u8], cp: &[u8], policy: &TruncationPolicy) -> Result<Truncated> {
    let mut blocks = Vec::new();
    for sigma in 0..2u8 {
        let (rows, cols) = (sector(rp, sigma), sector(cp, sigma));
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let sub = if rows.len() == rp.len() && cols.len() == cp.len() {
            theta.clone()
        } else {
            theta.select(Axis(0), &rows).select(Axis(1), &cols)
        };
        let (u, sv, vt) = thin_svd(sub)?;
        blocks.push((sigma, rows, cols, u, sv, vt));
    }
    let mut order: Vec<(f64, usize, usize)> =
        blocks.iter().enumerate().flat_map(|(b, blk)| blk.4.iter().enumerate().map(move |(i, &x)| (x, b, i))).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = order.iter().map(|x| x.0 * x.0).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroPurity);
    }
    let mut keep = order.len().min(policy.chi_max);
    let mut tail: f64 = order.iter().skip(keep).map(|x| x.0 * x.0).sum();
    while keep > 1 {
        let last = order[keep - 1].0 * order[keep - 1].0;
        if tail + last > policy.svd_cutoff.max(NUMERICAL_ZERO) * total {
            break;
        }
        tail += last;
        keep -= 1;
    }
    let mut u = Array2::zeros((rp.len(), keep));
    let mut vt = Array2::zeros((keep, cp.len()));
    let mut sv = Vec::with_capacity(keep);
    let mut labels = Vec::with_capacity(keep);
    for (j, &(x, b, i)) in order[..keep].iter().enumerate() {
        let (sigma, rows, cols, bu, _, bvt) = &blocks[b];
        for (r, &row) in rows.iter().enumerate() {
            u[[row, j]] = bu[[r, i]];
        }
        for (c, &col) in cols.iter().enumerate() {
            vt[[j, col]] = bvt[[i, c]];
        }
        sv.push(x);
        labels.push(*sigma);
    }
    Ok((u, sv, vt, labels, tail / total))
}

impl Engine for DoubledMps {
    fn outcome_weights(&mut self, step: Step, k: &StepKernels) -> Result<[f64; 2]> {
        let (a, b) = self.step_positions(step)?;
        match b {
            None => Ok([1i8, -1].map(|m| self.local_weight(a, &row_to_pauli(k.row(m).as_slice().unwrap())))),
            Some(b) => {
                let (left, reversed) = self.bring_adjacent(a, b)?;
                Ok([1i8, -1].map(|m| {
                    let row = k.row(m);
                    let row: Vec<C64> =
                        if reversed { (0..16).map(|i| row[(i % 4) * 4 + i / 4]).collect() } else { row.to_vec() };
                    self.local_weight(left, &row_to_pauli(&row))
                }))
            }
        }
    }

    fn apply_step(&mut self, step: Step, k: &StepKernels, m: i8) -> Result<()> {
        let (a, b) = self.step_positions(step)?;
        match b {
            None => self.apply_one_site(a, k.kernel(m)),
            Some(b) => {
                let (left, reversed) = self.bring_adjacent(a, b)?;
                let ker = if reversed {
                    let s = kernels::swap_kernel();
                    s.dot(k.kernel(m)).dot(&s)
                } else {
                    k.kernel(m).clone()
                };
                let c = if self.center > left { left + 1 } else { left };
                self.apply_two_site(left, &ker, c)?;
                self.restore()
            }
        }
    }
}

/// Runs one trajectory with the default sweep schedule.
pub fn run_trajectory_mps(p: &SimParams, seed: u64, policy: TruncationPolicy) -> Result<(DoubledMps, TrajectoryRecord)> {
    run_trajectory_mps_with(p, seed, policy, RunOptions::default(), |_, _| Ok(()))
}

pub fn run_trajectory_mps_with(
    p: &SimParams,
    seed: u64,
    policy: TruncationPolicy,
    opts: RunOptions,
    observe: impl FnMut(&mut DoubledMps, Stage) -> Result<()>,
) -> Result<(DoubledMps, TrajectoryRecord)> {
    let p = p.clone().validate()?;
    let mut mps = DoubledMps::build(p.initial_state, p.l, p.boundary, policy)?;
    let record = trajectory::drive(&mut mps, &p, seed, opts, observe)?;
    Ok((mps, TrajectoryRecord { record, seed, ..Default::default() }))
}

impl Measure for DoubledMps {
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
        let (lv, rv) = self.trace_vectors();
        let tr = self.nonzero_trace()?;
        let zv = Self::pauli_vector(Pauli::Z);
        let l = self.l;
        let mut c = Array2::from_elem((l, l), 1.0);
        for i in 0..l {
            let mut v = left_step(&lv[self.pos(i)], &self.tensors[self.pos(i)], &zv);
            for j in i + 1..l {
                let pj = self.pos(j);
                let val = left_step(&v, &self.tensors[pj], &zv).dot(&rv[pj + 1]) / tr;
                c[[i, j]] = val;
                c[[j, i]] = val;
                v = left_step(&v, &self.tensors[pj], &TRACE_P);
            }
        }
        Ok(c)
    }

    fn renyi2_zz_correlators(&self) -> Result<Array2<f64>> {
        let l = self.l;
        let mut c = Array2::from_elem((l, l), 1.0);
        for i in 0..l {
            for j in i + 1..l {
                let v = self.renyi2_expectation(&[(i, Pauli::Z), (j, Pauli::Z)])?;
                c[[i, j]] = v;
                c[[j, i]] = v;
            }
        }
        Ok(c)
    }

    fn x_string_correlators(&self) -> Result<Array2<f64>> {
        let (lv, rv) = self.trace_vectors();
        let tr = self.nonzero_trace()?;
        let xv = Self::pauli_vector(Pauli::X);
        let l = self.l;
        let mut c = Array2::from_elem((l, l), 1.0);
        for i in 0..l {
            let mut v = lv[self.pos(i)].clone();
            for k in i..l - 1 {
                v = left_step(&v, &self.tensors[self.pos(k)], &xv);
                let val = v.dot(&rv[self.pos(k + 1)]) / tr;
                c[[i, k + 1]] = val;
                if self.boundary == Boundary::Open {
                    c[[k + 1, i]] = val;
                }
            }
        }
        if self.boundary == Boundary::Periodic {
            for i in 0..l {
                for j in 0..i {
                    let vecs: Vec<_> = string_sites(i, j, l, self.boundary).iter().map(|&k| (self.pos(k), xv)).collect();
                    c[[i, j]] = self.functional(&vecs) / tr;
                }
            }
        }
        Ok(c)
    }

    fn renyi2_x_string_correlators(&self) -> Result<Array2<f64>> {
        let l = self.l;
        let mut c = Array2::from_elem((l, l), 1.0);
        for i in 0..l {
            for j in 0..l {
                if i != j {
                    let ops: Vec<_> = string_sites(i, j, l, self.boundary).into_iter().map(|k| (k, Pauli::X)).collect();
                    c[[i, j]] = self.renyi2_expectation(&ops)?;
                }
            }
        }
        Ok(c)
    }

    /// One left-to-right pass tracking "no Z placed yet" and "one Z placed".
    fn renyi2_zz_sum(&self) -> Result<f64> {
        let rc = self.right_canonical();
        let r = usize::from(self.has_reference);
        let mut e_n = Array2::ones((1, 1));
        let mut e_o: Option<Array2<f64>> = None;
        let mut acc = 0.0;
        for (k, t) in rc.tensors.iter().enumerate() {
            let n_pieces = transfer_pieces(&e_n, t);
            if k >= r {
                e_o = Some(match e_o {
                    Some(e) => {
                        let o_pieces = transfer_pieces(&e, t);
                        acc += trace_of(&combine(&o_pieces, &Z_SIGNS));
                        combine(&o_pieces, &[1.0; 4]) + combine(&n_pieces, &Z_SIGNS)
                    }
                    None => combine(&n_pieces, &Z_SIGNS),
                });
            }
            e_n = combine(&n_pieces, &[1.0; 4]);
        }
        let norm = trace_of(&e_n);
        if !(norm > 0.0) {
            return Err(Error::ZeroPurity);
        }
        Ok(self.l as f64 + 2.0 * acc / norm)
    }

    /// One left-to-right pass over string automata: for strings `[i, j−1]`
    /// the states are before, inside and closed; for wrapped strings
    /// `[i, L−1] ∪ [0, j−1]` they are prefix, gap and suffix.
    fn renyi2_x_string_sum(&self) -> Result<f64> {
        let rc = self.right_canonical();
        let r = usize::from(self.has_reference);
        let id = [1.0; 4];
        let pieces = |e: &Option<Array2<f64>>, t: &Array3<f64>| e.as_ref().map(|e| transfer_pieces(e, t));
        let apply = |p: &Option<[Array2<f64>; 4]>, s: &[f64; 4]| p.as_ref().map(|p| combine(p, s));
        let mut e_n = Array2::ones((1, 1));
        let (mut e_s, mut e_c) = (None, None);
        let (mut e_p, mut e_g, mut e_w) = (None, None, None);
        for (k, t) in rc.tensors.iter().enumerate() {
            let n = transfer_pieces(&e_n, t);
            if k >= r {
                let (n_x, n_id) = (combine(&n, &X_SIGNS), combine(&n, &id));
                if self.boundary == Boundary::Periodic {
                    if k == r {
                        e_p = Some(n_x.clone());
                        e_g = Some(n_id);
                    } else {
                        let (p, g, w) = (pieces(&e_p, t), pieces(&e_g, t), pieces(&e_w, t));
                        e_w = add(apply(&w, &X_SIGNS), apply(&g, &X_SIGNS));
                        e_g = add(apply(&g, &id), apply(&p, &id));
                        e_p = apply(&p, &X_SIGNS);
                    }
                }
                let (s, c) = (pieces(&e_s, t), pieces(&e_c, t));
                e_c = add(apply(&c, &id), apply(&s, &id));
                e_s = add(apply(&s, &X_SIGNS), Some(n_x));
            }
            e_n = combine(&n, &id);
        }
        let norm = trace_of(&e_n);
        if !(norm > 0.0) {
            return Err(Error::ZeroPurity);
        }
        let tr = |e: &Option<Array2<f64>>| e.as_ref().map_or(0.0, trace_of) / norm;
        let total = match self.boundary {
            Boundary::Open => 2.0 * tr(&e_c),
            Boundary::Periodic => tr(&e_c) + tr(&e_w),
        };
        Ok(self.l as f64 + total)
    }

    fn reference_matrix(&self) -> Result<[[C64; 2]; 2]> {
        DoubledMps::reference_matrix(self)
    }

    fn purity(&self) -> Result<f64> {
        let tr = self.nonzero_trace()?;
        Ok(self.raw_self_overlap() / (tr * tr))
    }

    fn system_purity(&self) -> Result<f64> {
        let region: Vec<usize> = (0..self.l).map(|i| self.pos(i)).collect();
        self.renyi2_subsystem_purity(&region)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_states_have_unit_bonds() {
        let mps = DoubledMps::build(InitialState::AllUp, 8, Boundary::Open, TruncationPolicy::default()).unwrap();
        assert!(mps.bond_dims().iter().all(|&d| d == 1));
        let mut mm = DoubledMps::build(InitialState::MaximallyMixed, 8, Boundary::Open, TruncationPolicy::default()).unwrap();
        assert!((mm.identity_overlap() - 1.0).abs() < 1e-12);
        assert!((mm.purity().unwrap() - 2f64.powi(-8)).abs() < 1e-14);
    }

    #[test]
    fn ghz_bond_dimension_and_correlator() {
        let mut mps = DoubledMps::build(InitialState::GhzPlus, 8, Boundary::Open, TruncationPolicy::default()).unwrap();
        assert!((mps.identity_overlap() - 1.0).abs() < 1e-12);
        assert!((mps.strong_expectation(&[(0, Pauli::Z), (7, Pauli::Z)]).unwrap() - 1.0).abs() < 1e-12);
        let string: Vec<_> = (0..8).map(|i| (i, Pauli::X)).collect();
        assert!((mps.strong_expectation(&string).unwrap() - 1.0).abs() < 1e-12);
        assert!(mps.max_bond() <= 4);
        assert!(mps.canonical_error() < 1e-12);
    }

    #[test]
    fn pauli_basis_is_unitary_and_kernels_real() {
        let v = pauli_basis();
        let g = v.dot(&v.t().mapv(|z| z.conj()));
        assert!(g.indexed_iter().all(|((i, j), z)| (z - if i == j { ONE } else { ZERO }).norm() < 1e-15));
        let k = StepKernels::new(kernels::Basis::Zz, 0.4, 0.2, 0.3);
        let w = basis_for(2);
        let full = w.dot(k.kernel(-1)).dot(&w.t().mapv(|z| z.conj()));
        assert!(full.iter().all(|z| z.im.abs() < 1e-14));
    }

    #[test]
    fn parity_breaking_channel_ungrades() {
        let policy = TruncationPolicy::new(64, 0.0).unwrap();
        let mut mps = DoubledMps::build(InitialState::GhzWithReference, 5, Boundary::Open, policy).unwrap();
        assert!(mps.is_graded());
        let k = StepKernels::new(kernels::Basis::Zz, 0.4, 0.2, 0.3);
        mps.apply_two_site(2, k.kernel(1), 3).unwrap();
        assert!(mps.is_graded());
        let up = (kernels::identity(2) + kernels::Pauli::Z.matrix()) * C64::from(0.5);
        let kick = kernels::doubled(&up);
        mps.apply_one_site(1, &kick).unwrap();
        assert!(!mps.is_graded());
        mps.apply_two_site(3, k.kernel(-1), 3).unwrap();
        assert!(mps.canonical_error() < 1e-12);
        let ungraded = DoubledMps::build(InitialState::AllUp, 4, Boundary::Open, policy).unwrap();
        assert!(!ungraded.is_graded());
    }

    #[test]
    fn policy_bounds() {
        assert!(TruncationPolicy::new(1, 1e-10).is_err());
        assert!(TruncationPolicy::new(4, 1e-3).is_err());
        assert!(TruncationPolicy::new(4, 0.0).is_ok());
    }
}

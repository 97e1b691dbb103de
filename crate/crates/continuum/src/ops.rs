//! Dense operators on qubit registers. Qubit 0 is the most significant bit
//! and a set bit is spin down, as in the simulation core.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use repcode::kernels::Pauli;

use crate::error::{ContinuumError, Result};

pub type Matrix = Array2<C64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn bit(n: usize, k: usize) -> usize {
    1 << (n - 1 - k)
}

/// Spin of qubit `k` in basis state `s`: `+1` up, `−1` down.
pub fn spin(s: usize, n: usize, k: usize) -> i32 {
    if s & bit(n, k) == 0 {
        1
    } else {
        -1
    }
}

/// A product of Paulis on distinct qubits of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub n: usize,
    x_mask: usize,
    z_mask: usize,
    n_y: u32,
}

impl PauliString {
    pub fn new(n: usize, ops: &[(usize, Pauli)]) -> Self {
        let (mut x_mask, mut z_mask, mut n_y) = (0, 0, 0);
        for &(k, p) in ops {
            let b = bit(n, k);
            match p {
                Pauli::I => {}
                Pauli::X => x_mask ^= b,
                Pauli::Z => z_mask ^= b,
                Pauli::Y => {
                    x_mask ^= b;
                    z_mask ^= b;
                    n_y += 1;
                }
            }
        }
        Self { n, x_mask, z_mask, n_y }
    }

    /// The same Pauli on every qubit in `qubits`.
    pub fn uniform(n: usize, qubits: impl IntoIterator<Item = usize>, p: Pauli) -> Self {
        let ops: Vec<_> = qubits.into_iter().map(|k| (k, p)).collect();
        Self::new(n, &ops)
    }

    /// `P|s⟩ = phase |s'⟩`, using `Y = iXZ` on each qubit.
    pub fn apply(&self, s: usize) -> (usize, C64) {
        let mut phase = I.powu(self.n_y);
        if (s & self.z_mask).count_ones() % 2 == 1 {
            phase = -phase;
        }
        (s ^ self.x_mask, phase)
    }

    pub fn add_to(&self, h: &mut Matrix, c: C64) {
        for s in 0..1usize << self.n {
            let (r, ph) = self.apply(s);
            h[[r, s]] += c * ph;
        }
    }

    pub fn matrix(&self) -> Matrix {
        let mut h = Matrix::zeros((1 << self.n, 1 << self.n));
        self.add_to(&mut h, ONE);
        h
    }
}

/// Adds `c` times a Pauli string to `h`.
pub fn add_pauli(h: &mut Matrix, n: usize, c: f64, ops: &[(usize, Pauli)]) {
    PauliString::new(n, ops).add_to(h, C64::from(c));
}

/// Partial signed permutation: each column maps to at most one row.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub entries: Vec<Option<(usize, C64)>>,
}

impl Monomial {
    pub fn identity(dim: usize) -> Self {
        Self { entries: (0..dim).map(|s| Some((s, ONE))).collect() }
    }

    pub fn diagonal(dim: usize, f: impl Fn(usize) -> C64) -> Self {
        Self { entries: (0..dim).map(|s| Some((s, f(s)))).collect() }
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let entries = rhs
            .entries
            .iter()
            .map(|e| e.and_then(|(r, v)| self.entries[r].map(|(r2, v2)| (r2, v * v2))))
            .collect();
        Self { entries }
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = vec![None; self.entries.len()];
        for (c, e) in self.entries.iter().enumerate() {
            if let Some((r, v)) = e {
                entries[*r] = Some((c, v.conj()));
            }
        }
        Self { entries }
    }

    pub fn add_to(&self, h: &mut Matrix, c: C64) {
        for (col, e) in self.entries.iter().enumerate() {
            if let Some((r, v)) = e {
                h[[*r, col]] += c * v;
            }
        }
    }
}

/// Embeds an operator acting on `qubits` (first listed most significant).
pub fn embed(n: usize, qubits: &[usize], op: &Matrix) -> Matrix {
    let w = qubits.len();
    let dim = 1usize << n;
    let bits: Vec<usize> = qubits.iter().map(|&k| bit(n, k)).collect();
    let mask: usize = bits.iter().sum();
    let place = |local: usize| -> usize {
        (0..w).filter(|&j| local >> (w - 1 - j) & 1 == 1).map(|j| bits[j]).sum()
    };
    let offsets: Vec<usize> = (0..1usize << w).map(place).collect();
    let mut out = Matrix::zeros((dim, dim));
    for s in 0..dim {
        let base = s & !mask;
        let local_in = offsets.iter().position(|&o| o == s & mask).unwrap_or(0);
        for (local_out, &o) in offsets.iter().enumerate() {
            let v = op[[local_out, local_in]];
            if v != ZERO {
                out[[base | o, s]] += v;
            }
        }
    }
    out
}

/// Largest entry of `H − H†`.
pub fn hermiticity_error(h: &Matrix) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[[i, j]] - h[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn frobenius(a: &Matrix) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of `[a, b]`.
pub fn commutator_norm(a: &Matrix, b: &Matrix) -> f64 {
    frobenius(&(a.dot(b) - b.dot(a)))
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues(h: &Matrix) -> Result<Vec<f64>> {
    let err = hermiticity_error(h);
    if err > 1e-10 {
        return Err(ContinuumError::NotHermitian(err));
    }
    let (ev, _) = h.eigh(UPLO::Lower).map_err(|e| ContinuumError::Linalg(e.to_string()))?;
    Ok(ev.to_vec())
}

/// Ascending eigenvalues and the matching eigenvectors as columns.
pub fn eigensystem(h: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let (ev, v) = h.eigh(UPLO::Lower).map_err(|e| ContinuumError::Linalg(e.to_string()))?;
    Ok((ev.to_vec(), v))
}

/// `exp(t·h)` for Hermitian `h`.
pub fn expm_hermitian(h: &Matrix, t: f64) -> Result<Matrix> {
    let (ev, v) = eigensystem(h)?;
    let scaled = Matrix::from_shape_fn(v.dim(), |(i, k)| v[[i, k]] * (t * ev[k]).exp());
    Ok(scaled.dot(&v.t().mapv(|z| z.conj())))
}

/// Scale `s` minimizing `‖s·a − b‖` and the resulting Frobenius residual.
pub fn best_scale_residual(a: &Matrix, b: &Matrix) -> f64 {
    let ab: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let aa: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let s = ab / aa;
    frobenius(&(a.mapv(|x| x * s) - b))
}

//! Doubled-space kernels of the circuit elements.
//!
//! A doubled site carries the local index `p = 2s + s'` (ket `s`, bra `s'`,
//! `0` = spin up), so an operator `A` acts on `|ρ⟩⟩` as `A ⊗ A*`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::model::SimParams;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Which operator a step acts with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    X,
    Zz,
}

impl Basis {
    pub fn n_sites(self) -> usize {
        match self {
            Self::X => 1,
            Self::Zz => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Array2<C64> {
        let m = match self {
            Self::I => [[ONE, ZERO], [ZERO, ONE]],
            Self::X => [[ZERO, ONE], [ONE, ZERO]],
            Self::Y => [[ZERO, -I], [I, ZERO]],
            Self::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        Array2::from_shape_fn((2, 2), |(a, b)| m[a][b])
    }

    /// Row vector `v` with `tr(Oρ) = Σ_p v_p ρ_p` on one doubled site.
    pub fn trace_vector(self) -> [C64; 4] {
        let m = self.matrix();
        let mut v = [ZERO; 4];
        for s in 0..2 {
            for sp in 0..2 {
                v[2 * s + sp] = m[[sp, s]];
            }
        }
        v
    }

    /// Local doubled operator `O ⊗ O*`.
    pub fn doubled(self) -> Array2<C64> {
        doubled(&self.matrix())
    }
}

/// Trace functional on one doubled site.
pub const TRACE: [C64; 4] = [ONE, ZERO, ZERO, ONE];

pub fn identity(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

/// Doubled kernel `A ⊗ A*` of an operator on `n` qubits, reordered so that
/// each doubled site is a contiguous `(s, s')` pair with site 0 most significant.
pub fn doubled(a: &Array2<C64>) -> Array2<C64> {
    let dim = a.nrows();
    let n = dim.trailing_zeros() as usize;
    let split = |p: usize| {
        let (mut s, mut sp) = (0, 0);
        for k in 0..n {
            let local = p >> (2 * (n - 1 - k)) & 3;
            s = s << 1 | local >> 1;
            sp = sp << 1 | local & 1;
        }
        (s, sp)
    };
    Array2::from_shape_fn((dim * dim, dim * dim), |(p, q)| {
        let (s, sp) = split(p);
        let (r, rp) = split(q);
        a[[s, r]] * a[[sp, rp]].conj()
    })
}

/// Qubit operator measured by a step: `X` or `Z⊗Z`.
pub fn measured_operator(basis: Basis) -> Array2<C64> {
    match basis {
        Basis::X => Pauli::X.matrix(),
        Basis::Zz => kron(&Pauli::Z.matrix(), &Pauli::Z.matrix()),
    }
}

/// Kraus-normalized weak projector `(1 + mλO)/√(2(1+λ²))`.
pub fn weak_projector(basis: Basis, lambda: f64, m: i8) -> Array2<C64> {
    let o = measured_operator(basis);
    let norm = (2.0 * (1.0 + lambda * lambda)).sqrt();
    (identity(o.nrows()) + o * C64::from(f64::from(m) * lambda)) / C64::from(norm)
}

/// `ρ → (1−q)ρ + q OρO` in doubled form.
pub fn dephasing_kernel(basis: Basis, q: f64) -> Array2<C64> {
    let o = doubled(&measured_operator(basis));
    identity(o.nrows()) * C64::from(1.0 - q) + o * C64::from(q)
}

/// `ρ → UρU†` with `U = e^{iθO}`.
pub fn rotation_kernel(basis: Basis, theta: f64) -> Array2<C64> {
    doubled(&rotation(basis, theta))
}

pub fn rotation(basis: Basis, theta: f64) -> Array2<C64> {
    let o = measured_operator(basis);
    identity(o.nrows()) * C64::from(theta.cos()) + o * (I * theta.sin())
}

pub fn projector_kernel(basis: Basis, lambda: f64, m: i8) -> Array2<C64> {
    doubled(&weak_projector(basis, lambda, m))
}

/// Contracted trace functional of a 1- or 2-site kernel: `r = tᵀK`.
pub fn trace_row(k: &Array2<C64>) -> Array1<C64> {
    let n = k.nrows();
    let sites = if n == 4 { 1 } else { 2 };
    let t = trace_functional(sites);
    t.dot(k)
}

/// `⟨⟨I|` on `n` doubled sites.
pub fn trace_functional(n: usize) -> Array1<C64> {
    let dim = 1 << (2 * n);
    Array1::from_shape_fn(dim, |p| {
        let mut v = ONE;
        for k in 0..n {
            v *= TRACE[p >> (2 * k) & 3];
        }
        v
    })
}

/// Fused kernels of one step: rotation, weak measurement with outcome `m`, dephasing.
#[derive(Clone, Debug)]
pub struct StepKernels {
    pub basis: Basis,
    /// Index 0 for outcome +1, 1 for −1.
    pub fused: [Array2<C64>; 2],
    /// Trace functional of each fused kernel.
    pub rows: [Array1<C64>; 2],
}

impl StepKernels {
    pub fn new(basis: Basis, lambda: f64, q: f64, theta: f64) -> Self {
        let u = rotation_kernel(basis, theta);
        let n = dephasing_kernel(basis, q);
        let fused = [1i8, -1].map(|m| n.dot(&projector_kernel(basis, lambda, m)).dot(&u));
        let rows = [trace_row(&fused[0]), trace_row(&fused[1])];
        Self { basis, fused, rows }
    }

    pub fn for_params(p: &SimParams) -> [Self; 2] {
        [
            Self::new(Basis::X, p.lambda_x, p.q_x, p.theta_x),
            Self::new(Basis::Zz, p.lambda_zz, p.q_zz, p.theta_zz),
        ]
    }

    pub fn kernel(&self, m: i8) -> &Array2<C64> {
        &self.fused[usize::from(m < 0)]
    }

    pub fn row(&self, m: i8) -> &Array1<C64> {
        &self.rows[usize::from(m < 0)]
    }
}

/// Two-site swap in doubled form.
pub fn swap_kernel() -> Array2<C64> {
    Array2::from_shape_fn((16, 16), |(p, q)| if p == (q % 4) * 4 + q / 4 { ONE } else { ZERO })
}

/// Projector onto outcome `m` of a perfect `Z_iZ_j` measurement.
pub fn perfect_zz_kernel(m: i8) -> Array2<C64> {
    projector_kernel(Basis::Zz, 1.0, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Array2<C64>, b: &Array2<C64>, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn povm_completeness() {
        for basis in [Basis::X, Basis::Zz] {
            for lambda in [0.0, 0.3, 1.0] {
                let p = weak_projector(basis, lambda, 1);
                let m = weak_projector(basis, lambda, -1);
                let sum = p.dot(&p) + m.dot(&m);
                assert!(close(&sum, &identity(sum.nrows()), 1e-14));
            }
        }
    }

    #[test]
    fn doubled_kernel_matches_matrix_sandwich() {
        let a = Array2::from_shape_fn((2, 2), |(i, j)| C64::new(i as f64 + 0.3, j as f64 - 0.7));
        let rho = Array2::from_shape_fn((2, 2), |(i, j)| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let out = a.dot(&rho).dot(&a.t().mapv(|z| z.conj()));
        let k = doubled(&a);
        let v = Array1::from_iter(rho.iter().copied());
        let w = k.dot(&v);
        for s in 0..2 {
            for sp in 0..2 {
                assert!((w[2 * s + sp] - out[[s, sp]]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn trace_vectors() {
        assert_eq!(Pauli::Z.trace_vector(), [ONE, ZERO, ZERO, -ONE]);
        assert_eq!(Pauli::X.trace_vector(), [ZERO, ONE, ONE, ZERO]);
        assert_eq!(Pauli::I.trace_vector(), TRACE);
    }

    #[test]
    fn dephasing_is_trace_preserving() {
        for basis in [Basis::X, Basis::Zz] {
            let k = dephasing_kernel(basis, 0.3);
            let r = trace_row(&k);
            let t = trace_functional(basis.n_sites());
            assert!((r - t).iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn swap_exchanges_sites() {
        let s = swap_kernel();
        assert!(close(&s.dot(&s), &identity(16), 1e-15));
        assert_eq!(s[[1 * 4 + 2, 2 * 4 + 1]], ONE);
    }
}

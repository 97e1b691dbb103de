//! Symmetry residuals: the U(1) charge `Q = Σσᶻ` of the chain picture, the
//! strong parities of the doubled picture and the SU(2) point of the XXZ chain.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use repcode::kernels::{kron, Basis, Pauli, StepKernels};
use repcode::model::SimParams;

use crate::error::{ContinuumError, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianSpec};
use crate::ops::{add_pauli, commutator_norm, frobenius, spin, Matrix, PauliString};
use crate::spectrum::strong_parities;

fn pauli_pair(a: Pauli, b: Pauli) -> Matrix {
    kron(&a.matrix(), &b.matrix())
}

/// Image on a chain pair of a doubled-space kernel in the measured-operator
/// algebra spanned by `{1, O} ⊗ {1, O'}`, with `O = X` on one site or
/// `O = ZZ` on a bond.
pub fn chain_image(kernel: &Matrix, basis: Basis) -> Result<Matrix> {
    let one = |n: usize| Array2::<C64>::eye(1 << n);
    let (ket, bra, images) = match basis {
        Basis::X => (
            kron(&Pauli::X.matrix(), &one(1)),
            kron(&one(1), &Pauli::X.matrix()),
            [pauli_pair(Pauli::X, Pauli::X), pauli_pair(Pauli::Y, Pauli::Y)],
        ),
        Basis::Zz => {
            let z = Pauli::Z.matrix();
            let i2 = one(1);
            (
                kron(&kron(&z, &i2), &kron(&z, &i2)),
                kron(&kron(&i2, &z), &kron(&i2, &z)),
                [pauli_pair(Pauli::Y, Pauli::Y), pauli_pair(Pauli::X, Pauli::X)],
            )
        }
    };
    let dim = kernel.nrows();
    if dim != 1 << (2 * basis.n_sites()) || kernel.ncols() != dim {
        return Err(ContinuumError::DimensionMismatch(dim, 1 << (2 * basis.n_sites())));
    }
    let both = ket.dot(&bra);
    let comps = [one(dim.trailing_zeros() as usize), ket, bra, both];
    let coeffs: Vec<C64> = comps
        .iter()
        .map(|c| c.iter().zip(kernel).map(|(a, b)| a.conj() * b).sum::<C64>() / dim as f64)
        .collect();
    let rebuilt = comps.iter().zip(&coeffs).fold(Matrix::zeros((dim, dim)), |acc, (c, &k)| acc + c.mapv(|v| v * k));
    let residual = frobenius(&(rebuilt - kernel));
    if residual > 1e-10 {
        return Err(ContinuumError::OutsideAlgebra(residual));
    }
    let [img_ket, img_bra] = images;
    let img_both = -pauli_pair(Pauli::Z, Pauli::Z);
    Ok(Array2::eye(4).mapv(|v: C64| v * coeffs[0])
        + img_ket.mapv(|v| v * coeffs[1])
        + img_bra.mapv(|v| v * coeffs[2])
        + img_both.mapv(|v| v * coeffs[3]))
}

/// `Σσᶻ` on `n` qubits.
pub fn charge(n: usize) -> Matrix {
    Array2::from_shape_fn((1 << n, 1 << n), |(r, c)| {
        if r == c {
            C64::from(f64::from((0..n).map(|k| spin(r, n, k)).sum::<i32>()))
        } else {
            C64::from(0.0)
        }
    })
}

/// `‖[G, Q]‖` maximized over every fused step kernel of `p` carried to the
/// chain. Each image acts on two neighbouring chain sites, so the local
/// charge suffices.
pub fn u1_charge_residual(p: &SimParams) -> Result<f64> {
    let q = charge(2);
    let mut worst: f64 = 0.0;
    for k in StepKernels::for_params(p) {
        for m in [1, -1] {
            let img = chain_image(k.kernel(m), k.basis)?;
            worst = worst.max(commutator_norm(&img, &q));
        }
    }
    Ok(worst)
}

/// `‖[H, Q]‖` for an operator on an `n`-site chain.
pub fn charge_residual(h: &Matrix, n: usize) -> f64 {
    commutator_norm(h, &charge(n))
}

/// Largest `‖[H, X̄]‖`, `‖[H, X̄']‖` of a spec.
pub fn strong_symmetry_residual(spec: &HamiltonianSpec) -> Result<f64> {
    let h = build_hamiltonian(spec)?;
    let [(a, _), (b, _)] = strong_parities(spec)?;
    Ok(commutator_norm(&h, &a.matrix()).max(commutator_norm(&h, &b.matrix())))
}

/// Total spin `S² = (Σ σ/2)²` on `n` sites.
pub fn total_spin_squared(n: usize) -> Matrix {
    let dim = 1 << n;
    let mut s2 = Matrix::zeros((dim, dim));
    for a in 0..n {
        for b in 0..n {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                if a == b {
                    PauliString::new(n, &[]).add_to(&mut s2, C64::from(0.25));
                } else {
                    add_pauli(&mut s2, n, 0.25, &[(a, p), (b, p)]);
                }
            }
        }
    }
    s2
}

/// `‖[H, S²]‖` for an operator on an `n`-site chain.
pub fn su2_residual(h: &Matrix, n: usize) -> f64 {
    commutator_norm(h, &total_spin_squared(n))
}

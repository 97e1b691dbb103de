//! Short-time expansions of the summed gates: the two-replica gate identity
//! and the forced-measurement layer generated by `H1`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use repcode::kernels::{kron, measured_operator, weak_projector, Basis, StepKernels};
use repcode::model::{n_bonds, Boundary};

use crate::error::{ContinuumError, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianSpec};
use crate::ops::{best_scale_residual, embed, expm_hermitian, Matrix};

fn kron_power(a: &Matrix, k: usize) -> Matrix {
    (1..k).fold(a.clone(), |acc, _| kron(&acc, a))
}

/// `O` placed on copy `a` of four.
fn on_copy(o: &Matrix, a: usize) -> Matrix {
    let id = Array2::<C64>::eye(o.nrows());
    (0..4).map(|c| if c == a { o.clone() } else { id.clone() }).reduce(|x, y| kron(&x, &y)).unwrap()
}

/// Residual of `Σ_m P_m^{⊗4} ∝ exp(δt λ² Σ_{a<b} O^{(a)} O^{(b)})` with the
/// per-step strength `√δt λ`, after the best scalar normalization.
pub fn replica2_gate_identity_residual(lambda: f64, dt: f64, basis: Basis) -> Result<f64> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(ContinuumError::OutOfRange("δt"));
    }
    let step = dt.sqrt() * lambda;
    let summed = [1i8, -1].iter().map(|&m| kron_power(&weak_projector(basis, step, m), 4)).reduce(|a, b| a + b).unwrap();
    let o = measured_operator(basis);
    let copies: Vec<Matrix> = (0..4).map(|a| on_copy(&o, a)).collect();
    let dim = copies[0].nrows();
    let mut pairs = Matrix::zeros((dim, dim));
    for a in 0..4 {
        for b in a + 1..4 {
            pairs = pairs + copies[a].dot(&copies[b]);
        }
    }
    let target = expm_hermitian(&pairs, dt * lambda * lambda)?;
    Ok(best_scale_residual(&summed, &target))
}

/// One forced-measurement layer (every outcome `+1`, strengths scaled by
/// `δt`) as a matrix on the doubled space of an open chain.
pub fn forced_layer(lambda_x: f64, lambda_zz: f64, q_x: f64, q_zz: f64, l: usize, dt: f64) -> Matrix {
    let n = 2 * l;
    let kx = StepKernels::new(Basis::X, dt * lambda_x, dt * q_x, 0.0);
    let kzz = StepKernels::new(Basis::Zz, dt * lambda_zz, dt * q_zz, 0.0);
    let mut layer = Array2::<C64>::eye(1 << n);
    for i in 0..l {
        layer = embed(n, &[2 * i, 2 * i + 1], kx.kernel(1)).dot(&layer);
    }
    for b in 0..n_bonds(l, Boundary::Open) {
        layer = embed(n, &[2 * b, 2 * b + 1, 2 * b + 2, 2 * b + 3], kzz.kernel(1)).dot(&layer);
    }
    layer
}

/// `‖c·K_layer − (1 − δt H1)‖` for the best scalar `c`; of order `δt²`.
pub fn forced_layer_residual(lambda_x: f64, lambda_zz: f64, q_x: f64, q_zz: f64, l: usize, dt: f64) -> Result<f64> {
    let h1 = build_hamiltonian(&HamiltonianSpec::h1(lambda_x, lambda_zz, q_x, q_zz, l, Boundary::Open))?;
    let target = Array2::<C64>::eye(h1.nrows()) - h1.mapv(|v| v * dt);
    Ok(best_scale_residual(&forced_layer(lambda_x, lambda_zz, q_x, q_zz, l, dt), &target))
}

//! Couplings of the space-time model as functions of the circuit parameters.
//!
//! A step kernel in the Z basis depends only on the bond variables
//! `σ = s_t s_{t−1}` (ket) and `σ' = s'_t s'_{t−1}` (bra) for an X step, or
//! `σ = s_i s_j`, `σ' = s'_i s'_j` for a ZZ step, and is written as
//! `exp(c + J σ + J* σ' + K σσ')` with a complex ket coupling `J`.

use num_complex::Complex64 as C64;
use repcode::model::SimParams;

use crate::error::{Result, StatMechError};

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSet {
    pub j_zz: f64,
    pub k_zz: f64,
    /// Angle of the ZZ rotation, entering as `±iθ_zz` on ket and bra.
    pub theta_zz: f64,
    pub j_x: f64,
    pub k_x: f64,
    /// Set when the X steps carry no rotation, so the temporal phase is
    /// exactly `iπ/2` on `m^x = −1` bonds and zero otherwise.
    pub imag_x_flip: bool,
    /// `arg w` for outcomes `+1` and `−1`.
    pub phi: [f64; 2],
    pub b: f64,
    /// Ket-flip ratio of the X kernel for outcomes `+1` and `−1`.
    pub w: [C64; 2],
    /// Log of the record-independent constant of one X step.
    pub log_c_x: f64,
    /// Log of the record-independent constant of one ZZ step.
    pub log_c_zz: f64,
}

fn idx(m: i8) -> usize {
    usize::from(m < 0)
}

impl CouplingSet {
    /// Complex ket coupling of an X step, `J_x − iφ_m/2`.
    pub fn x_ket(&self, m: i8) -> C64 {
        C64::new(self.j_x, -self.phi[idx(m)] / 2.0)
    }

    /// Complex ket coupling of a ZZ step, `m J_zz + iθ_zz`.
    pub fn zz_ket(&self, m: i8) -> C64 {
        C64::new(f64::from(m) * self.j_zz, self.theta_zz)
    }

    /// Boltzmann factor of a temporal bond without the constant.
    pub fn x_weight(&self, m: i8, sigma: i8, sigma_p: i8) -> C64 {
        bond_weight(self.x_ket(m), self.k_x, sigma, sigma_p)
    }

    /// Boltzmann factor of a spatial bond without the constant.
    pub fn zz_weight(&self, m: i8, sigma: i8, sigma_p: i8) -> C64 {
        bond_weight(self.zz_ket(m), self.k_zz, sigma, sigma_p)
    }

    /// Factors `[σ = ±1][σ' = ±1]` of a temporal bond (index 1 for `−1`).
    pub fn x_table(&self, m: i8) -> [[C64; 2]; 2] {
        table(|s, sp| self.x_weight(m, s, sp))
    }

    pub fn zz_table(&self, m: i8) -> [[C64; 2]; 2] {
        table(|s, sp| self.zz_weight(m, s, sp))
    }
}

fn table(f: impl Fn(i8, i8) -> C64) -> [[C64; 2]; 2] {
    [[f(1, 1), f(1, -1)], [f(-1, 1), f(-1, -1)]]
}

fn bond_weight(j: C64, k: f64, sigma: i8, sigma_p: i8) -> C64 {
    let (s, sp) = (f64::from(sigma), f64::from(sigma_p));
    (j * s + j.conj() * sp + k * s * sp).exp()
}

struct XPart {
    j: f64,
    k: f64,
    phi: [f64; 2],
    b: f64,
    w: [C64; 2],
    log_c: f64,
}

fn x_part(lambda: f64, q: f64, theta: f64) -> Result<XPart> {
    let cos = theta.cos();
    if cos == 0.0 || !(0.0..1.0).contains(&q) {
        return Err(StatMechError::SingularCoupling("J_x"));
    }
    let t = theta.tan();
    let (l2, t2) = (lambda * lambda, t * t);
    let r = q / (1.0 - q);
    let den = 1.0 + t2 * l2 + r * (l2 + t2);
    let w = [1.0, -1.0].map(|m: f64| {
        C64::new(m * lambda * (1.0 + t2) * (1.0 + r), t * (1.0 - l2) * (1.0 - r)) / den
    });
    let b = (l2 + t2 + r * (1.0 + t2 * l2)) / den;
    if !(b > 0.0) {
        return Err(StatMechError::SingularCoupling("J_x"));
    }
    let w2 = w[0].norm_sqr();
    if !(w2 > 0.0) {
        return Err(StatMechError::SingularCoupling("K_x"));
    }
    let j = -b.ln() / 4.0;
    let k = -(w2 / b).ln() / 4.0;
    let log_d = 2.0 * cos.abs().ln() + (1.0 - q).ln() + den.ln() - (2.0 * (1.0 + l2)).ln();
    Ok(XPart { j, k, phi: w.map(|z| z.arg()), b, w, log_c: log_d - 2.0 * j - k })
}

fn zz_part(lambda: f64, q: f64) -> Result<(f64, f64, f64)> {
    if lambda >= 1.0 {
        return Err(StatMechError::SingularCoupling("J_zz"));
    }
    if q >= 0.5 {
        return Err(StatMechError::SingularCoupling("K_zz"));
    }
    let j = lambda.atanh();
    let k = (q / (1.0 - q)).atanh();
    let log_c = ((1.0 - lambda * lambda) / (2.0 * (1.0 + lambda * lambda))).ln() + 0.5 * (1.0 - 2.0 * q).ln();
    Ok((j, k, log_c))
}

fn assemble(x: XPart, theta_x: f64, zz: (f64, f64, f64), theta_zz: f64) -> CouplingSet {
    CouplingSet {
        j_zz: zz.0,
        k_zz: zz.1,
        theta_zz,
        j_x: x.j,
        k_x: x.k,
        imag_x_flip: theta_x == 0.0,
        phi: x.phi,
        b: x.b,
        w: x.w,
        log_c_x: x.log_c,
        log_c_zz: zz.2,
    }
}

/// Couplings of the circuit without rotations.
pub fn couplings_from_params(lambda_x: f64, lambda_zz: f64, q_x: f64, q_zz: f64) -> Result<CouplingSet> {
    Ok(assemble(x_part(lambda_x, q_x, 0.0)?, 0.0, zz_part(lambda_zz, q_zz)?, 0.0))
}

/// Temporal couplings with an X rotation by `θ_x`; the ZZ part is that of
/// `λ_zz = q_zz = 0`.
pub fn couplings_with_unitaries(lambda_x: f64, q_x: f64, theta_x: f64) -> Result<CouplingSet> {
    Ok(assemble(x_part(lambda_x, q_x, theta_x)?, theta_x, zz_part(0.0, 0.0)?, 0.0))
}

/// All couplings of a parameter set, rotations included.
pub fn couplings_for(p: &SimParams) -> Result<CouplingSet> {
    Ok(assemble(
        x_part(p.lambda_x, p.q_x, p.theta_x)?,
        p.theta_x,
        zz_part(p.lambda_zz, p.q_zz)?,
        p.theta_zz,
    ))
}

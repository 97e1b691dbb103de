//! Kramers-Wannier duality: bond weights of the two-species model in Potts
//! form, the dual weights, and the record-level duality of the circuit.

use num_complex::Complex64 as C64;
use repcode::model::{Boundary, MeasurementRecord};

use crate::couplings::{couplings_from_params, CouplingSet};
use crate::error::{Result, StatMechError};
use crate::lattice::Lattice;
use crate::partition::{partition_table, Boundaries, InitialCondition, Method};

/// Bond weight `1 + w(δ_a + δ_b) + w²t δ_aδ_b` in the variables
/// `δ = (1 + σ)/2` of the two species.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BondWeights {
    pub w: C64,
    pub t: C64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualCouplings {
    pub w_bar: C64,
    pub t_bar: C64,
}

/// Weights of a bond whose factor, relative to `σ = σ' = −1`, is `e^J` with
/// one species up and `e^{2J+K}` with both up.
pub fn potts_weights(j: C64, k: f64) -> Result<BondWeights> {
    let half = j / 2.0;
    let w = 2.0 * half.exp() * half.sinh();
    if !(w.norm() > 0.0) || !w.is_finite() {
        return Err(StatMechError::SingularWeight);
    }
    let t = 1.0 + (2.0 * j).exp() * k.exp_m1() / (w * w);
    Ok(BondWeights { w, t })
}

/// Potts-form weights of a spatial bond with outcome `m_zz` and of a temporal
/// bond with outcome `m_x`, for couplings without rotations.
pub fn bond_weights(c: &CouplingSet, m_zz: i8, m_x: i8) -> Result<[BondWeights; 2]> {
    if !c.imag_x_flip || c.theta_zz != 0.0 {
        return Err(StatMechError::RequiresPureDynamics);
    }
    let j0 = C64::from(2.0 * f64::from(m_zz) * c.j_zz - 2.0 * c.k_zz);
    let flip = if m_x < 0 { std::f64::consts::PI } else { 0.0 };
    let j1 = C64::new(2.0 * c.j_x - 2.0 * c.k_x, flip);
    Ok([potts_weights(j0, 4.0 * c.k_zz)?, potts_weights(j1, 4.0 * c.k_x)?])
}

/// Dual weights `w̄ = 2/(w t)`, `t̄ = t`.
pub fn kw_dual_couplings(w: C64, t: C64) -> Result<DualCouplings> {
    let wt = w * t;
    if !(wt.norm() > 0.0) || !wt.is_finite() {
        return Err(StatMechError::SingularWeight);
    }
    Ok(DualCouplings { w_bar: 2.0 / wt, t_bar: t })
}

/// `(|w_0 w_1 t_1 − 2|, |t_0 − t_1|)`: both vanish on the self-dual surface.
pub fn self_duality_residual(w0: C64, t0: C64, w1: C64, t1: C64) -> (f64, f64) {
    ((w0 * w1 * t1 - 2.0).norm(), (t0 - t1).norm())
}

/// Largest self-duality residuals at `λ_x = λ_zz = λ`, `q_x = q_zz = q` over
/// both outcomes.
pub fn self_duality_residual_at(lambda: f64, q: f64) -> Result<(f64, f64)> {
    let c = couplings_from_params(lambda, lambda, q, q)?;
    let mut worst = (0.0f64, 0.0f64);
    for m in [1i8, -1] {
        let [s, t] = bond_weights(&c, m, m)?;
        let (a, b) = self_duality_residual(s.w, s.t, t.w, t.t);
        worst = (worst.0.max(a), worst.1.max(b));
    }
    Ok(worst)
}

/// Record of the dual circuit on a ring: ZZ outcomes become X outcomes and
/// vice versa, with time reversed and bonds shifted by half a cell.
pub fn dual_record(lat: &Lattice, r: &MeasurementRecord) -> Result<MeasurementRecord> {
    if lat.boundary != Boundary::Periodic {
        return Err(StatMechError::WrongLimit("a periodic chain"));
    }
    let (l, t) = (lat.l, lat.t);
    let mut out = MeasurementRecord::filled(t, l, l, 1);
    for tau in 0..t {
        let src = t - 1 - tau;
        for j in 0..l {
            out.m_x[tau][j] = r.m_zz[src][j];
            out.m_zz[tau][j] = r.m_x[src][(j + 1) % l];
        }
    }
    Ok(out)
}

/// Largest difference between the record probabilities of a ring started in
/// the even-sector maximally mixed state and those of its dual
/// (`λ_x ↔ λ_zz`, `q_x ↔ q_zz`, dual records).
pub fn record_duality_residual(lambda_x: f64, lambda_zz: f64, q_x: f64, q_zz: f64, l: usize, t: usize) -> Result<f64> {
    let lat = Lattice::new(l, t, Boundary::Periodic)?;
    let bc = Boundaries::traced(InitialCondition::sector_mixed(l));
    let direct = partition_table(&lat, &couplings_from_params(lambda_x, lambda_zz, q_x, q_zz)?, &bc, Method::TransferMatrix)?;
    let dual = partition_table(&lat, &couplings_from_params(lambda_zz, lambda_x, q_zz, q_x)?, &bc, Method::TransferMatrix)?;
    let mut worst = 0.0f64;
    for (code, z) in direct.iter().enumerate() {
        let r = MeasurementRecord::from_code(t, l, l, code as u64);
        let d = dual_record(&lat, &r)?;
        worst = worst.max((z - dual[record_code(&d) as usize]).norm());
    }
    Ok(worst)
}

/// Inverse of `MeasurementRecord::from_code`.
pub fn record_code(r: &MeasurementRecord) -> u64 {
    let mut code = 0u64;
    let mut bit = 0;
    for (xs, zs) in r.m_x.iter().zip(&r.m_zz) {
        for &m in xs.iter().chain(zs) {
            if m < 0 {
                code |= 1 << bit;
            }
            bit += 1;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_round_trip() {
        for code in [0u64, 5, 0b1011_0110, 4095] {
            let r = MeasurementRecord::from_code(3, 2, 2, code);
            assert_eq!(record_code(&r), code);
        }
    }

    #[test]
    fn dual_of_dual_is_a_translation() {
        let lat = Lattice::new(3, 2, Boundary::Periodic).unwrap();
        let r = MeasurementRecord::from_code(2, 3, 3, 0b10_1100_0111);
        let dd = dual_record(&lat, &dual_record(&lat, &r).unwrap()).unwrap();
        for t in 0..2 {
            for j in 0..3 {
                assert_eq!(dd.m_x[t][j], r.m_x[t][(j + 1) % 3]);
                assert_eq!(dd.m_zz[t][j], r.m_zz[t][(j + 1) % 3]);
            }
        }
    }
}

//! Random-bond Ising reductions at `λ_x = 0` or `λ_zz = 0`, and the gauge
//! structure of the single-species model.
//!
//! At `λ_x = 0` the X steps only dephase, so ket and bra spins flip together
//! and the traced final slice forces `s = s'` everywhere: one Ising species
//! with spatial couplings `2 m^zz J_zz` and uniform temporal coupling `2 J_x`.
//! At `λ_zz = 0` the ZZ steps only dephase and couple the products
//! `τ = s s'`; summing out `s` leaves an Ising model in `τ` with spatial
//! coupling `K_zz` and complex temporal weights carrying the X outcomes.

use num_complex::Complex64 as C64;
use repcode::model::SimParams;

use crate::couplings::couplings_with_unitaries;
use crate::error::{Result, StatMechError};
use crate::lattice::{spin, DisorderRealization, Lattice};
use crate::partition::{brute_force_partition, Boundaries, InitialCondition, KernelTables};

/// Largest chain handled by the single-species transfer matrix.
pub const MAX_ISING_L: usize = 16;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Single-species Ising model with complex bond values `[aligned, broken]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    pub lattice: Lattice,
    /// `[layer][site]`, joining slices `layer` and `layer + 1`.
    pub temporal: Vec<Vec<[C64; 2]>>,
    /// `[layer][bond]`, on slice `layer + 1`.
    pub spatial: Vec<Vec<[C64; 2]>>,
    /// Weight of each configuration of slice 0 (bit set = spin down).
    pub initial: Vec<C64>,
    /// Weight of each configuration of slice `T`.
    pub final_: Vec<C64>,
}

impl IsingModel {
    pub fn partition(&self) -> Result<C64> {
        self.partition_with_final(&self.final_)
    }

    /// Transfer-matrix sum with the final slice weighted by `fin`.
    pub fn partition_with_final(&self, fin: &[C64]) -> Result<C64> {
        let lat = self.lattice;
        let l = lat.l;
        if l > MAX_ISING_L {
            return Err(StatMechError::MemoryBudget(l));
        }
        let dim = 1usize << l;
        if self.initial.len() != dim || fin.len() != dim {
            return Err(StatMechError::Shape("boundary weights".into()));
        }
        let mut v = self.initial.clone();
        for layer in 0..lat.t {
            for (i, w) in self.temporal[layer].iter().enumerate() {
                let bit = 1usize << (l - 1 - i);
                for s in (0..dim).filter(|s| s & bit == 0) {
                    let (a, b) = (v[s], v[s | bit]);
                    v[s] = w[0] * a + w[1] * b;
                    v[s | bit] = w[1] * a + w[0] * b;
                }
            }
            for (s, z) in v.iter_mut().enumerate() {
                for (b, w) in self.spatial[layer].iter().enumerate() {
                    let (i, j) = lat.bond_sites(b);
                    *z *= w[usize::from(spin(s, l, i) != spin(s, l, j))];
                }
            }
        }
        Ok(v.iter().zip(fin).map(|(a, b)| a * b).sum())
    }

    /// `⟨s_{T,i} s_{T,j}⟩` with the model's final weights.
    pub fn final_correlator(&self, i: usize, j: usize) -> Result<C64> {
        let l = self.lattice.l;
        let weighted: Vec<C64> = self
            .final_
            .iter()
            .enumerate()
            .map(|(s, w)| w * f64::from(spin(s, l, i) * spin(s, l, j)))
            .collect();
        Ok(self.partition_with_final(&weighted)? / self.partition()?)
    }
}

fn exp_pair(j: f64) -> [C64; 2] {
    [C64::from(j.exp()), C64::from((-j).exp())]
}

/// Coupling `A_x` of the `λ_zz = 0` reduction at `q_x = 0`:
/// `tanh A_x = (1 − λ_x)²/(1 + λ_x)²`.
pub fn a_x(lambda_x: f64) -> f64 {
    ((1.0 - lambda_x).powi(2) / (1.0 + lambda_x).powi(2)).atanh()
}

/// Reduced single-species model of `d` under the parameters `p`, which must
/// have `λ_x = 0` or `λ_zz = 0`. The final slice is traced.
pub fn reduced_model(p: &SimParams, d: &DisorderRealization, initial: &InitialCondition) -> Result<IsingModel> {
    let lat = d.lattice;
    let l = lat.l;
    let dim = 1usize << l;
    let entries = initial.entries(l)?;
    if p.lambda_x == 0.0 {
        if p.theta_x != 0.0 {
            return Err(StatMechError::WrongLimit("θ_x = 0 when λ_x = 0"));
        }
        let temporal_pair = if p.q_x > 0.0 {
            exp_pair(-(p.q_x / (1.0 - p.q_x)).ln() / 2.0)
        } else {
            [ONE, ZERO]
        };
        let spatial_pair = |m: i8| {
            if p.lambda_zz < 1.0 {
                exp_pair(2.0 * f64::from(m) * p.lambda_zz.atanh())
            } else if m > 0 {
                [ONE, ZERO]
            } else {
                [ZERO, ONE]
            }
        };
        let mut init = vec![ZERO; dim];
        for (k, b, amp) in entries {
            if k == b {
                init[k] += amp;
            }
        }
        Ok(IsingModel {
            lattice: lat,
            temporal: vec![vec![temporal_pair; l]; lat.t],
            spatial: d.record.m_zz.iter().map(|row| row.iter().map(|&m| spatial_pair(m)).collect()).collect(),
            initial: init,
            final_: vec![ONE; dim],
        })
    } else if p.lambda_zz == 0.0 {
        if p.theta_zz != 0.0 {
            return Err(StatMechError::WrongLimit("θ_zz = 0 when λ_zz = 0"));
        }
        let c = couplings_with_unitaries(p.lambda_x, p.q_x, p.theta_x)?;
        let temporal_pair = |m: i8| {
            let j = c.x_ket(m);
            [1.0, -1.0].map(|tt: f64| (c.k_x * tt).exp() * 2.0 * (j + j.conj() * tt).cosh())
        };
        let spatial_pair = if p.q_zz < 0.5 {
            exp_pair((p.q_zz / (1.0 - p.q_zz)).atanh())
        } else {
            [ONE, ZERO]
        };
        let mut init = vec![ZERO; dim];
        for (k, b, amp) in entries {
            init[k ^ b] += amp;
        }
        let mut fin = vec![ZERO; dim];
        fin[0] = ONE;
        Ok(IsingModel {
            lattice: lat,
            temporal: d.record.m_x.iter().map(|row| row.iter().map(|&m| temporal_pair(m)).collect()).collect(),
            spatial: vec![vec![spatial_pair; lat.n_bonds()]; lat.t],
            initial: init,
            final_: fin,
        })
    } else {
        Err(StatMechError::WrongLimit("λ_x = 0 or λ_zz = 0"))
    }
}

/// Reduced partition function of `d` for the circuit's own initial state.
pub fn rbim_reduction(p: &SimParams, d: &DisorderRealization) -> Result<C64> {
    reduced_model(p, d, &InitialCondition::from_state(p.initial_state, d.lattice.l))?.partition()
}

/// Largest deviation between dense Born probabilities and the normalized
/// reduced partition functions.
pub fn rbim_nishimori_residual(p: &SimParams) -> Result<f64> {
    let lat = Lattice::new(p.l, p.t, p.boundary)?;
    let mut pairs = Vec::new();
    let mut failure = None;
    repcode::dense::for_each_trajectory(p, |record, st| {
        let d = DisorderRealization { lattice: lat, record: record.clone() };
        match rbim_reduction(p, &d) {
            Ok(z) => pairs.push((st.weighted_trace().re, z)),
            Err(e) => failure = Some(e),
        }
        Ok(())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let total: C64 = pairs.iter().map(|(_, z)| z).sum();
    Ok(pairs.iter().map(|(pm, z)| (z / total - pm).norm()).fold(0.0, f64::max))
}

/// Largest relative spread of `Z_full / Z_reduced` over every record with
/// nonzero weight. The full side is the brute-force two-species sum read off
/// the dense kernels; a record-independent ratio makes the spread vanish.
pub fn reduction_ratio_spread(p: &SimParams) -> Result<f64> {
    let lat = Lattice::new(p.l, p.t, p.boundary)?;
    let init = InitialCondition::from_state(p.initial_state, p.l);
    let k = KernelTables::for_params(p);
    let bc = Boundaries::traced(init.clone());
    let mut ratios = Vec::new();
    for code in 0..1u64 << lat.n_edges() {
        let d = DisorderRealization::from_code(lat, code);
        let full = brute_force_partition(&d, &k, &bc)?.value();
        if full.norm() > 1e-14 {
            ratios.push(full / reduced_model(p, &d, &init)?.partition()?);
        }
    }
    let Some(&first) = ratios.first() else {
        return Err(StatMechError::WrongLimit("no record with nonzero weight"));
    };
    Ok(ratios.iter().map(|r| (r - first).norm() / first.norm()).fold(0.0, f64::max))
}

/// Random-bond Ising model `H = −Σ J_e η_e s s'` with sign disorder `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbimRealization {
    pub lattice: Lattice,
    pub j_spatial: f64,
    pub j_temporal: f64,
    /// `[layer][bond]` signs on slice `layer + 1`.
    pub spatial: Vec<Vec<i8>>,
    /// `[layer][site]` signs between slices `layer` and `layer + 1`.
    pub temporal: Vec<Vec<i8>>,
}

impl RbimRealization {
    /// The `λ_x = 0` disorder of a record: spatial signs `m^zz`, temporal `+1`.
    pub fn from_record(d: &DisorderRealization, j_spatial: f64, j_temporal: f64) -> Self {
        Self {
            lattice: d.lattice,
            j_spatial,
            j_temporal,
            spatial: d.record.m_zz.clone(),
            temporal: vec![vec![1; d.lattice.l]; d.lattice.t],
        }
    }

    /// Model with free initial and final slices.
    pub fn model(&self) -> IsingModel {
        let dim = 1usize << self.lattice.l;
        let pairs = |j: f64, signs: &Vec<Vec<i8>>| -> Vec<Vec<[C64; 2]>> {
            signs.iter().map(|row| row.iter().map(|&s| exp_pair(j * f64::from(s))).collect()).collect()
        };
        IsingModel {
            lattice: self.lattice,
            temporal: pairs(self.j_temporal, &self.temporal),
            spatial: pairs(self.j_spatial, &self.spatial),
            initial: vec![ONE; dim],
            final_: vec![ONE; dim],
        }
    }

    pub fn partition(&self) -> Result<f64> {
        Ok(self.model().partition()?.re)
    }

    pub fn final_correlator(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.model().final_correlator(i, j)?.re)
    }

    /// Frustration of each plaquette between slices `t` and `t + 1`
    /// (`t = 1..T−1`), listed slice by slice and bond by bond.
    pub fn frustration(&self) -> Vec<bool> {
        let lat = self.lattice;
        let mut out = Vec::new();
        for t in 1..lat.t {
            for b in 0..lat.n_bonds() {
                let (i, j) = lat.bond_sites(b);
                let p = self.spatial[t - 1][b] * self.spatial[t][b] * self.temporal[t][i] * self.temporal[t][j];
                out.push(p < 0);
            }
        }
        out
    }
}

/// Flips spin `(t, i)`: every coupling touching it changes sign.
pub fn gauge_transform(d: &RbimRealization, site: (usize, usize)) -> RbimRealization {
    let (t, i) = site;
    let lat = d.lattice;
    let mut out = d.clone();
    if t >= 1 {
        out.temporal[t - 1][i] *= -1;
        for b in 0..lat.n_bonds() {
            let (a, c) = lat.bond_sites(b);
            if a == i || c == i {
                out.spatial[t - 1][b] *= -1;
            }
        }
    }
    if t < lat.t {
        out.temporal[t][i] *= -1;
    }
    out
}

//! Exact evaluation of the record partition functions.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use repcode::dense::for_each_trajectory;
use repcode::kernels::StepKernels;
use repcode::model::{InitialState, SimParams, SpinConfig};

use crate::couplings::{couplings_for, CouplingSet};
use crate::error::{Result, StatMechError};
use crate::lattice::{spin, DisorderRealization, Lattice};

/// Largest chain handled by the transfer matrix (`4^L` doubled states).
pub const MAX_TRANSFER_L: usize = 5;

/// Largest number of spins summed explicitly by the brute-force evaluator.
pub const MAX_BRUTE_FORCE_BITS: usize = 26;

/// Largest record set enumerated by the table builders.
pub const MAX_RECORD_BITS: usize = 22;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Weight of the `t = 0` slice.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Density matrix `ρ_0[s, s']` over the slice (site 0 most significant).
    Density(Array2<C64>),
    Fixed { ket: SpinConfig, bra: SpinConfig },
}

impl InitialCondition {
    /// Initial state of the circuit. With a reference qubit the reduced state
    /// of the chain is used; the reference never evolves and is traced out.
    pub fn from_state(kind: InitialState, l: usize) -> Self {
        let dim = 1usize << l;
        let mut rho = Array2::<C64>::zeros((dim, dim));
        let f = dim - 1;
        match kind {
            InitialState::AllUp | InitialState::AllUpWithReference => rho[[0, 0]] = C64::from(1.0),
            InitialState::GhzPlus => {
                for (a, b) in [(0, 0), (0, f), (f, 0), (f, f)] {
                    rho[[a, b]] = C64::from(0.5);
                }
            }
            InitialState::GhzWithReference => {
                rho[[0, 0]] = C64::from(0.5);
                rho[[f, f]] = C64::from(0.5);
            }
            InitialState::MaximallyMixed => {
                for s in 0..dim {
                    rho[[s, s]] = C64::from(1.0 / dim as f64);
                }
            }
        }
        Self::Density(rho)
    }

    /// `(1 + Π_i X_i)/2^L`: the maximally mixed state of the even `Π X` sector.
    pub fn sector_mixed(l: usize) -> Self {
        let dim = 1usize << l;
        let v = C64::from(1.0 / dim as f64);
        Self::Density(Array2::from_shape_fn((dim, dim), |(a, b)| if a == b || a == (dim - 1) ^ b { v } else { ZERO }))
    }

    /// Nonzero entries `(ket, bra, amplitude)` of the slice.
    pub fn entries(&self, l: usize) -> Result<Vec<(usize, usize, C64)>> {
        match self {
            Self::Density(rho) => {
                let dim = 1usize << l;
                if rho.dim() != (dim, dim) {
                    return Err(StatMechError::Shape(format!("initial matrix {:?} for L = {l}", rho.dim())));
                }
                Ok(rho.indexed_iter().filter(|(_, z)| z.norm() > 0.0).map(|((a, b), &z)| (a, b, z)).collect())
            }
            Self::Fixed { ket, bra } => {
                check_config(ket, l)?;
                check_config(bra, l)?;
                Ok(vec![(ket.to_bits(), bra.to_bits(), C64::from(1.0))])
            }
        }
    }
}

/// Condition on the final slice.
#[derive(Clone, Debug, PartialEq)]
pub enum FinalCondition {
    /// `s_T = s'_T` summed: the trace of the final state.
    Traced,
    Fixed { ket: SpinConfig, bra: SpinConfig },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Boundaries {
    pub initial: InitialCondition,
    pub final_: FinalCondition,
}

impl Boundaries {
    pub fn traced(initial: InitialCondition) -> Self {
        Self { initial, final_: FinalCondition::Traced }
    }

    /// All four boundary slices fixed.
    pub fn fixed(s0: SpinConfig, s0p: SpinConfig, st: SpinConfig, stp: SpinConfig) -> Self {
        Self {
            initial: InitialCondition::Fixed { ket: s0, bra: s0p },
            final_: FinalCondition::Fixed { ket: st, bra: stp },
        }
    }
}

fn check_config(c: &SpinConfig, l: usize) -> Result<()> {
    if c.0.len() != l {
        return Err(StatMechError::Shape(format!("spin slice of length {} for L = {l}", c.0.len())));
    }
    Ok(())
}

/// `Z = exp(log_prefactor) · sum`, where `sum` is the Boltzmann sum without
/// the record-independent constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partition {
    pub log_prefactor: f64,
    pub sum: C64,
}

impl Partition {
    pub fn value(&self) -> C64 {
        self.sum * self.log_prefactor.exp()
    }
}

/// Bond factors of the two step types, indexed `[σ flipped][σ' flipped]`.
pub trait BondTables {
    fn x_table(&self, m: i8) -> [[C64; 2]; 2];
    fn zz_table(&self, m: i8) -> [[C64; 2]; 2];
    /// Log-constants multiplying the X and ZZ tables.
    fn log_constants(&self) -> (f64, f64);
}

impl BondTables for CouplingSet {
    fn x_table(&self, m: i8) -> [[C64; 2]; 2] {
        CouplingSet::x_table(self, m)
    }

    fn zz_table(&self, m: i8) -> [[C64; 2]; 2] {
        CouplingSet::zz_table(self, m)
    }

    fn log_constants(&self) -> (f64, f64) {
        (self.log_c_x, self.log_c_zz)
    }
}

/// Bond factors read off the circuit kernels. Unlike [`CouplingSet`] these
/// stay finite at projective or vanishing measurement strengths.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTables {
    x: [[[C64; 2]; 2]; 2],
    zz: [[[C64; 2]; 2]; 2],
}

impl KernelTables {
    pub fn for_params(p: &SimParams) -> Self {
        let [kx, kzz] = StepKernels::for_params(p);
        let x = [1i8, -1].map(|m| {
            let k = kx.kernel(m);
            [[k[[0, 0]], k[[0, 1]]], [k[[0, 2]], k[[0, 3]]]]
        });
        let zz = [1i8, -1].map(|m| {
            let k = kzz.kernel(m);
            [[k[[0, 0]], k[[1, 1]]], [k[[2, 2]], k[[3, 3]]]]
        });
        Self { x, zz }
    }
}

impl BondTables for KernelTables {
    fn x_table(&self, m: i8) -> [[C64; 2]; 2] {
        self.x[usize::from(m < 0)]
    }

    fn zz_table(&self, m: i8) -> [[C64; 2]; 2] {
        self.zz[usize::from(m < 0)]
    }

    fn log_constants(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Accumulated log-constant of a record: one term per X and per ZZ step.
pub fn log_prefactor(lat: &Lattice, c: &dyn BondTables) -> f64 {
    let (cx, czz) = c.log_constants();
    lat.t as f64 * (lat.l as f64 * cx + lat.n_bonds() as f64 * czz)
}

fn sigma_index(a: usize, b: usize, l: usize, i: usize) -> usize {
    usize::from(spin(a, l, i) != spin(b, l, i))
}

/// Bond tables of one layer: temporal per site, spatial per bond.
struct LayerTables {
    x: Vec<[[C64; 2]; 2]>,
    zz: Vec<[[C64; 2]; 2]>,
}

fn layer_tables(d: &DisorderRealization, c: &dyn BondTables) -> Vec<LayerTables> {
    (0..d.lattice.t)
        .map(|t| LayerTables {
            x: d.record.m_x[t].iter().map(|&m| c.x_table(m)).collect(),
            zz: d.record.m_zz[t].iter().map(|&m| c.zz_table(m)).collect(),
        })
        .collect()
}

fn spatial_factor(tab: &LayerTables, lat: &Lattice, ket: usize, bra: usize) -> C64 {
    let l = lat.l;
    let mut f = C64::from(1.0);
    for (b, z) in tab.zz.iter().enumerate() {
        let (i, j) = lat.bond_sites(b);
        let s = usize::from(spin(ket, l, i) != spin(ket, l, j));
        let sp = usize::from(spin(bra, l, i) != spin(bra, l, j));
        f *= z[s][sp];
    }
    f
}

/// Explicit sum over every interior spin configuration (and the traced final
/// slice).
pub fn brute_force_partition(d: &DisorderRealization, c: &dyn BondTables, bc: &Boundaries) -> Result<Partition> {
    let lat = d.lattice;
    let (l, t) = (lat.l, lat.t);
    let traced = bc.final_ == FinalCondition::Traced;
    let bits = 2 * l * (t - 1) + if traced { l } else { 0 };
    if bits > MAX_BRUTE_FORCE_BITS {
        return Err(StatMechError::TooLarge(bits));
    }
    let fixed_final = match &bc.final_ {
        FinalCondition::Traced => None,
        FinalCondition::Fixed { ket, bra } => {
            check_config(ket, l)?;
            check_config(bra, l)?;
            Some((ket.to_bits(), bra.to_bits()))
        }
    };
    let tables = layer_tables(d, c);
    let mask = (1usize << l) - 1;
    let mut slices = vec![(0usize, 0usize); t + 1];
    let mut sum = ZERO;
    for (k0, b0, amp) in bc.initial.entries(l)? {
        slices[0] = (k0, b0);
        for code in 0..1usize << bits {
            let mut rest = code;
            for slice in slices.iter_mut().take(t).skip(1) {
                *slice = (rest & mask, rest >> l & mask);
                rest >>= 2 * l;
            }
            slices[t] = fixed_final.unwrap_or((rest & mask, rest & mask));
            let mut w = amp;
            for (layer, tab) in tables.iter().enumerate() {
                let (pk, pb) = slices[layer];
                let (k, b) = slices[layer + 1];
                for (i, x) in tab.x.iter().enumerate() {
                    w *= x[sigma_index(pk, k, l, i)][sigma_index(pb, b, l, i)];
                }
                w *= spatial_factor(tab, &lat, k, b);
            }
            sum += w;
        }
    }
    Ok(Partition { log_prefactor: log_prefactor(&lat, c), sum })
}

/// Row-to-row transfer product over the `4^L` doubled slice states.
pub fn transfer_matrix_partition(d: &DisorderRealization, c: &dyn BondTables, bc: &Boundaries) -> Result<Partition> {
    let lat = d.lattice;
    let l = lat.l;
    if l > MAX_TRANSFER_L {
        return Err(StatMechError::MemoryBudget(l));
    }
    let dim = 1usize << l;
    let mut v = vec![ZERO; dim * dim];
    for (k, b, amp) in bc.initial.entries(l)? {
        v[k * dim + b] += amp;
    }
    for tab in layer_tables(d, c) {
        for (i, x) in tab.x.iter().enumerate() {
            let km = 1usize << (l + l - 1 - i);
            let bm = 1usize << (l - 1 - i);
            for base in 0..dim * dim {
                if base & (km | bm) != 0 {
                    continue;
                }
                let idx = [base, base | bm, base | km, base | km | bm];
                let old = idx.map(|j| v[j]);
                for (n, &out) in idx.iter().enumerate() {
                    let (sk, sb) = (n >> 1, n & 1);
                    v[out] = (0..4).map(|r| x[sk ^ r >> 1][sb ^ r & 1] * old[r]).sum();
                }
            }
        }
        for (idx, z) in v.iter_mut().enumerate() {
            *z *= spatial_factor(&tab, &lat, idx / dim, idx % dim);
        }
    }
    let sum = match &bc.final_ {
        FinalCondition::Traced => (0..dim).map(|s| v[s * dim + s]).sum(),
        FinalCondition::Fixed { ket, bra } => {
            check_config(ket, l)?;
            check_config(bra, l)?;
            v[ket.to_bits() * dim + bra.to_bits()]
        }
    };
    Ok(Partition { log_prefactor: log_prefactor(&lat, c), sum })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    TransferMatrix,
    BruteForce,
}

pub fn partition(d: &DisorderRealization, c: &dyn BondTables, bc: &Boundaries, method: Method) -> Result<Partition> {
    match method {
        Method::TransferMatrix => transfer_matrix_partition(d, c, bc),
        Method::BruteForce => brute_force_partition(d, c, bc),
    }
}

/// `Z_m` for every record of the lattice, in `from_code` order.
pub fn partition_table(lat: &Lattice, c: &dyn BondTables, bc: &Boundaries, method: Method) -> Result<Vec<C64>> {
    let n = lat.n_edges();
    if n > MAX_RECORD_BITS {
        return Err(StatMechError::Core(repcode::Error::TooManyOutcomes(n)));
    }
    (0..1u64 << n)
        .map(|code| Ok(partition(&DisorderRealization::from_code(*lat, code), c, bc, method)?.value()))
        .collect()
}

/// Largest deviation between the Born probabilities of the dense engine and
/// the normalized partition functions, over all records.
pub fn nishimori_residual(p: &SimParams, method: Method) -> Result<f64> {
    let lat = Lattice::new(p.l, p.t, p.boundary)?;
    let c = couplings_for(p)?;
    let bc = Boundaries::traced(InitialCondition::from_state(p.initial_state, p.l));
    let mut pairs = Vec::new();
    let mut failure = None;
    for_each_trajectory(p, |record, st| {
        let d = DisorderRealization { lattice: lat, record: record.clone() };
        match partition(&d, &c, &bc, method) {
            Ok(z) => pairs.push((st.weighted_trace().re, z.value())),
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

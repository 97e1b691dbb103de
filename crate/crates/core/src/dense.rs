//! Exact doubled-state evolution for small chains.
//!
//! Amplitudes are indexed by `Σ_k p_k 4^{n−1−k}` over register positions
//! `k`, where the reference qubit (if any) sits at position 0 and system qubit
//! `i` at position `i + r`.

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{self, Basis, Pauli, StepKernels, ONE, ZERO};
use crate::model::{
    trajectory_rng, Boundary, InitialState, LayerOrder, MeasurementRecord, SimParams, SpinConfig, Step,
    TrajectoryRecord,
};
use crate::trajectory::{self, plus_probability, Engine, RunOptions, Stage};

/// Largest chain the dense engine accepts.
pub const MAX_DENSE_L: usize = 10;

/// Enumeration limit on the number of binary outcomes.
pub const MAX_ENUMERATED_OUTCOMES: usize = 22;

/// A qubit of the register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    Reference,
    System(usize),
}

/// Product of Paulis on system qubits.
pub type PauliString = Vec<(usize, Pauli)>;

#[derive(Clone, Debug, PartialEq)]
pub struct DoubledState {
    pub amplitudes: Vec<C64>,
    /// Natural log of a scale factor multiplying the amplitudes.
    pub log_weight: f64,
    pub l: usize,
    pub has_reference: bool,
    pub boundary: Boundary,
}

/// Places bit `j` of `s` at bit `2j`.
fn spread(s: usize) -> usize {
    let mut out = 0;
    let mut j = 0;
    let mut s = s;
    while s > 0 {
        out |= (s & 1) << (2 * j);
        s >>= 1;
        j += 1;
    }
    out
}

/// Bit mask of register position `k` in an `n`-qubit computational index.
fn qubit_bit(n: usize, k: usize) -> usize {
    1 << (n - 1 - k)
}

/// Pauli string as `O|s⟩ = c(s)|s ⊕ x⟩`.
struct PauliAction {
    x: usize,
    ops: Vec<(usize, Pauli)>,
}

impl PauliAction {
    fn new(n: usize, ops: &[(usize, Pauli)]) -> Self {
        let mut x = 0;
        for &(k, p) in ops {
            if matches!(p, Pauli::X | Pauli::Y) {
                x ^= qubit_bit(n, k);
            }
        }
        let ops = ops.iter().map(|&(k, p)| (qubit_bit(n, k), p)).collect();
        Self { x, ops }
    }

    fn phase(&self, s: usize) -> C64 {
        let mut c = ONE;
        for &(bit, p) in &self.ops {
            let down = s & bit != 0;
            match p {
                Pauli::I | Pauli::X => {}
                Pauli::Y => c *= if down { -kernels::I } else { kernels::I },
                Pauli::Z => {
                    if down {
                        c = -c
                    }
                }
            }
        }
        c
    }
}

/// Von Neumann entropy in bits of a Hermitian matrix normalized to unit trace.
pub fn entropy_bits(rho: &Array2<C64>) -> Result<f64> {
    let tr: f64 = (0..rho.nrows()).map(|i| rho[[i, i]].re).sum();
    if !(tr.abs() > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let herm = Array2::from_shape_fn(rho.dim(), |(i, j)| 0.5 * (rho[[i, j]] + rho[[j, i]].conj()) / tr);
    let ev = herm.eigvalsh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(shannon_bits(ev.iter().copied()))
}

/// `−Σ p log₂ p` with each `p` clamped to `[0, 1]`.
pub fn shannon_bits(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter()
        .map(|p| p.clamp(0.0, 1.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

impl DoubledState {
    pub fn n_register(&self) -> usize {
        self.l + usize::from(self.has_reference)
    }

    pub fn position(&self, site: Site) -> Result<usize> {
        match site {
            Site::Reference if self.has_reference => Ok(0),
            Site::Reference => Err(Error::NoReference),
            Site::System(i) if i < self.l => Ok(i + usize::from(self.has_reference)),
            Site::System(i) => Err(Error::InvalidSite(i)),
        }
    }

    fn check_size(l: usize, has_reference: bool) -> Result<()> {
        if l == 0 {
            return Err(Error::OutOfRange("L"));
        }
        if l > MAX_DENSE_L {
            return Err(Error::MemoryBudget(format!(
                "L = {l} exceeds the dense limit {MAX_DENSE_L} (reference: {has_reference})"
            )));
        }
        Ok(())
    }

    /// Builds `|ρ⟩⟩` from a density matrix on the register.
    pub fn from_density_matrix(rho: &Array2<C64>, l: usize, has_reference: bool, boundary: Boundary) -> Result<Self> {
        Self::check_size(l, has_reference)?;
        let n = l + usize::from(has_reference);
        let dim = 1usize << n;
        if rho.dim() != (dim, dim) {
            return Err(Error::LengthMismatch(rho.nrows(), dim));
        }
        let mut amplitudes = vec![ZERO; dim * dim];
        for s in 0..dim {
            for sp in 0..dim {
                amplitudes[2 * spread(s) + spread(sp)] = rho[[s, sp]];
            }
        }
        Ok(Self { amplitudes, log_weight: 0.0, l, has_reference, boundary })
    }

    /// Density matrix of the register (the scale `exp(log_weight)` is not applied).
    pub fn density_matrix(&self) -> Array2<C64> {
        let dim = 1usize << self.n_register();
        let sp: Vec<usize> = (0..dim).map(spread).collect();
        Array2::from_shape_fn((dim, dim), |(s, t)| self.amplitudes[2 * sp[s] + sp[t]])
    }

    pub fn init(kind: InitialState, l: usize, boundary: Boundary) -> Result<Self> {
        let has_reference = kind.has_reference();
        Self::check_size(l, has_reference)?;
        let n = l + usize::from(has_reference);
        let dim = 1usize << n;
        let mut rho = Array2::<C64>::zeros((dim, dim));
        match kind {
            InitialState::AllUp | InitialState::AllUpWithReference => rho[[0, 0]] = ONE,
            InitialState::GhzPlus | InitialState::GhzWithReference => {
                let f = dim - 1;
                for (a, b) in [(0, 0), (0, f), (f, 0), (f, f)] {
                    rho[[a, b]] = C64::from(0.5);
                }
            }
            InitialState::MaximallyMixed => {
                for s in 0..dim {
                    rho[[s, s]] = C64::from(1.0 / dim as f64);
                }
            }
        }
        Self::from_density_matrix(&rho, l, has_reference, boundary)
    }

    /// Register positions touched by a circuit step.
    pub fn step_positions(&self, step: Step) -> Result<Vec<usize>> {
        let r = usize::from(self.has_reference);
        match step {
            Step::X(i) if i < self.l => Ok(vec![i + r]),
            Step::Zz(b) if b < crate::model::n_bonds(self.l, self.boundary) => {
                Ok(vec![b + r, (b + 1) % self.l + r])
            }
            Step::X(i) | Step::Zz(i) => Err(Error::InvalidSite(i)),
        }
    }

    fn basis_step(&self, site: usize, basis: Basis) -> Step {
        match basis {
            Basis::X => Step::X(site),
            Basis::Zz => Step::Zz(site),
        }
    }

    /// Applies a 4×4 or 16×16 doubled kernel at the given register positions.
    pub fn apply_kernel(&mut self, positions: &[usize], k: &Array2<C64>) -> Result<()> {
        let n = self.n_register();
        let w = positions.len();
        if k.nrows() != 1 << (2 * w) || k.ncols() != k.nrows() {
            return Err(Error::KernelShape(k.nrows()));
        }
        if let Some(&bad) = positions.iter().find(|&&p| p >= n) {
            return Err(Error::InvalidSite(bad));
        }
        let shifts: Vec<usize> = positions.iter().map(|&p| 2 * (n - 1 - p)).collect();
        let mask: usize = shifts.iter().map(|&s| 3 << s).sum();
        let dimk = k.nrows();
        let offsets: Vec<usize> = (0..dimk)
            .map(|lp| {
                (0..w).map(|j| (lp >> (2 * (w - 1 - j)) & 3) << shifts[j]).sum()
            })
            .collect();
        let mut buf = vec![ZERO; dimk];
        for base in 0..self.amplitudes.len() {
            if base & mask != 0 {
                continue;
            }
            for (b, &o) in buf.iter_mut().zip(&offsets) {
                *b = self.amplitudes[base + o];
            }
            for (row, &o) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (col, &b) in buf.iter().enumerate() {
                    acc += k[[row, col]] * b;
                }
                self.amplitudes[base + o] = acc;
            }
        }
        Ok(())
    }

    /// `Σ_P ρ_P r(P_local) Π_{others} t(p_k)` for a row functional on the given positions.
    pub fn local_functional(&self, positions: &[usize], row: &[C64]) -> C64 {
        let n = self.n_register();
        let w = positions.len();
        let shifts: Vec<usize> = positions.iter().map(|&p| 2 * (n - 1 - p)).collect();
        let qmask: usize = positions.iter().map(|&p| qubit_bit(n, p)).sum();
        let offsets: Vec<usize> = (0..row.len())
            .map(|lp| (0..w).map(|j| (lp >> (2 * (w - 1 - j)) & 3) << shifts[j]).sum())
            .collect();
        let mut total = ZERO;
        for s in 0..1usize << n {
            if s & qmask != 0 {
                continue;
            }
            let base = 3 * spread(s);
            for (r, &o) in row.iter().zip(&offsets) {
                if *r != ZERO {
                    total += *r * self.amplitudes[base + o];
                }
            }
        }
        total
    }

    /// `⟨⟨I|ρ⟩⟩` without the log-weight factor.
    pub fn trace(&self) -> C64 {
        let n = self.n_register();
        (0..1usize << n).map(|s| self.amplitudes[3 * spread(s)]).sum()
    }

    /// Trace including the accumulated scale.
    pub fn weighted_trace(&self) -> C64 {
        self.trace() * self.log_weight.exp()
    }

    /// Rescales to unit trace, folding the factor into `log_weight`.
    pub fn normalize(&mut self) -> Result<()> {
        let tr = self.trace().re;
        if !(tr > 0.0) {
            return Err(Error::ZeroTrace);
        }
        let inv = 1.0 / tr;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        self.log_weight += tr.ln();
        Ok(())
    }

    pub fn apply_weak_projector(&mut self, site: usize, basis: Basis, lambda: f64, outcome: i8) -> Result<()> {
        let pos = self.step_positions(self.basis_step(site, basis))?;
        self.apply_kernel(&pos, &kernels::projector_kernel(basis, lambda, outcome))
    }

    pub fn apply_dephasing(&mut self, site: usize, basis: Basis, q: f64) -> Result<()> {
        let pos = self.step_positions(self.basis_step(site, basis))?;
        self.apply_kernel(&pos, &kernels::dephasing_kernel(basis, q))
    }

    pub fn apply_rotation(&mut self, site: usize, basis: Basis, theta: f64) -> Result<()> {
        let pos = self.step_positions(self.basis_step(site, basis))?;
        self.apply_kernel(&pos, &kernels::rotation_kernel(basis, theta))
    }

    /// Born probabilities of a weak measurement on the current state.
    pub fn born_probability(&self, site: usize, basis: Basis, lambda: f64) -> Result<(f64, f64)> {
        let pos = self.step_positions(self.basis_step(site, basis))?;
        let w = [1i8, -1].map(|m| {
            let row = kernels::trace_row(&kernels::projector_kernel(basis, lambda, m));
            self.local_functional(&pos, row.as_slice().unwrap()).re
        });
        let p = plus_probability(w)?;
        Ok((p, 1.0 - p))
    }

    /// Applies `X̄` (product of X on all system qubits) to the ket and/or bra copy.
    pub fn apply_logical_x(&mut self, ket: bool, bra: bool) -> Result<()> {
        let x = Pauli::X.matrix();
        let id = Pauli::I.matrix();
        let a = if ket { &x } else { &id };
        let b = if bra { &x } else { &id };
        let k = kernels::kron(a, b);
        for i in 0..self.l {
            let p = self.position(Site::System(i))?;
            self.apply_kernel(&[p], &k)?;
        }
        Ok(())
    }

    /// `tr(Oρ)/tr ρ` for a Pauli string on system qubits.
    pub fn strong_expectation(&self, ops: &[(usize, Pauli)]) -> Result<f64> {
        Ok(self.strong_expectation_complex(ops)?.re)
    }

    pub fn strong_expectation_complex(&self, ops: &[(usize, Pauli)]) -> Result<C64> {
        let tr = self.trace();
        if tr.norm() == 0.0 {
            return Err(Error::ZeroTrace);
        }
        let ops = self.register_ops(ops)?;
        let n = self.n_register();
        let act = PauliAction::new(n, &ops);
        // tr(Oρ) = Σ_s c(s) ρ(s, s ⊕ x)
        let v: C64 = (0..1usize << n)
            .map(|s| act.phase(s) * self.amplitudes[2 * spread(s) + spread(s ^ act.x)])
            .sum();
        Ok(v / tr)
    }

    fn register_ops(&self, ops: &[(usize, Pauli)]) -> Result<Vec<(usize, Pauli)>> {
        ops.iter().map(|&(i, p)| Ok((self.position(Site::System(i))?, p))).collect()
    }

    /// `⟨⟨ρ|O⊗O*|ρ⟩⟩ / ⟨⟨ρ|ρ⟩⟩`.
    pub fn renyi2_expectation(&self, ops: &[(usize, Pauli)]) -> Result<f64> {
        let norm = self.self_overlap();
        if !(norm > 0.0) {
            return Err(Error::ZeroPurity);
        }
        let ops = self.register_ops(ops)?;
        let n = self.n_register();
        let act = PauliAction::new(n, &ops);
        let dim = 1usize << n;
        let sp: Vec<usize> = (0..dim).map(spread).collect();
        let ph: Vec<C64> = (0..dim).map(|s| act.phase(s ^ act.x)).collect();
        let mut v = ZERO;
        for s in 0..dim {
            for t in 0..dim {
                let w = ph[s] * ph[t].conj() * self.amplitudes[2 * sp[s ^ act.x] + sp[t ^ act.x]];
                v += self.amplitudes[2 * sp[s] + sp[t]].conj() * w;
            }
        }
        Ok(v.re / norm)
    }

    /// `⟨⟨ρ|ρ⟩⟩` without the log-weight factor.
    pub fn self_overlap(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨⟨a|b⟩⟩` including both scales.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::LengthMismatch(self.amplitudes.len(), other.amplitudes.len()));
        }
        let v: C64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum();
        Ok(v * (self.log_weight + other.log_weight).exp())
    }

    /// `tr ρ² / (tr ρ)²`.
    pub fn purity(&self) -> Result<f64> {
        let tr = self.trace().re;
        if !(tr.abs() > 0.0) {
            return Err(Error::ZeroTrace);
        }
        Ok(self.self_overlap() / (tr * tr))
    }

    /// Reduced density matrix on `keep` (register positions, in the given order), unnormalized.
    pub fn reduced_matrix(&self, keep: &[usize]) -> Array2<C64> {
        let n = self.n_register();
        let k = keep.len();
        let rest: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
        let place = |bits: usize, pos: &[usize]| -> usize {
            pos.iter()
                .enumerate()
                .map(|(j, &p)| if bits >> (pos.len() - 1 - j) & 1 == 1 { qubit_bit(n, p) } else { 0 })
                .sum()
        };
        let ka: Vec<usize> = (0..1usize << k).map(|a| place(a, keep)).collect();
        let ra: Vec<usize> = (0..1usize << rest.len()).map(|t| place(t, &rest)).collect();
        Array2::from_shape_fn((1 << k, 1 << k), |(a, b)| {
            ra.iter().map(|&t| self.amplitudes[2 * spread(ka[a] | t) + spread(ka[b] | t)]).sum()
        })
    }

    /// `tr(ρ_A²) / (tr ρ)²` for region `A`.
    pub fn subsystem_purity(&self, region: &[Site]) -> Result<f64> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let keep: Vec<usize> = region.iter().map(|&s| self.position(s)).collect::<Result<_>>()?;
        let red = self.reduced_matrix(&keep);
        let tr = self.trace().re;
        if !(tr.abs() > 0.0) {
            return Err(Error::ZeroTrace);
        }
        Ok(red.iter().map(|z| z.norm_sqr()).sum::<f64>() / (tr * tr))
    }

    /// Normalized 2×2 reference density matrix.
    pub fn reference_matrix(&self) -> Result<[[C64; 2]; 2]> {
        if !self.has_reference {
            return Err(Error::NoReference);
        }
        let red = self.reduced_matrix(&[0]);
        let tr = red[[0, 0]] + red[[1, 1]];
        if tr.norm() == 0.0 {
            return Err(Error::ZeroTrace);
        }
        Ok([[red[[0, 0]] / tr, red[[0, 1]] / tr], [red[[1, 0]] / tr, red[[1, 1]] / tr]])
    }

    /// Von Neumann entropy (bits) of the reduced state on `region`.
    pub fn entropy(&self, region: &[Site]) -> Result<f64> {
        let keep: Vec<usize> = region.iter().map(|&s| self.position(s)).collect::<Result<_>>()?;
        entropy_bits(&self.reduced_matrix(&keep))
    }

    pub fn system_sites(&self) -> Vec<Site> {
        (0..self.l).map(Site::System).collect()
    }

    pub fn all_sites(&self) -> Vec<Site> {
        let mut v = Vec::new();
        if self.has_reference {
            v.push(Site::Reference);
        }
        v.extend(self.system_sites());
        v
    }

    /// `max |ρ − ρ†|` and the most negative eigenvalue of `ρ / tr ρ`.
    pub fn hermiticity_and_min_eigenvalue(&self) -> Result<(f64, f64)> {
        let rho = self.density_matrix();
        let tr = self.trace().re;
        let herm = rho.indexed_iter().map(|((i, j), z)| (z - rho[[j, i]].conj()).norm()).fold(0.0, f64::max);
        let h = Array2::from_shape_fn(rho.dim(), |(i, j)| 0.5 * (rho[[i, j]] + rho[[j, i]].conj()) / tr);
        let ev = h.eigvalsh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
        Ok((herm / tr.abs(), ev.iter().copied().fold(f64::INFINITY, f64::min)))
    }
}

impl Engine for DoubledState {
    fn outcome_weights(&mut self, step: Step, k: &StepKernels) -> Result<[f64; 2]> {
        let pos = self.step_positions(step)?;
        Ok([1i8, -1].map(|m| self.local_functional(&pos, k.row(m).as_slice().unwrap()).re))
    }

    fn apply_step(&mut self, step: Step, k: &StepKernels, m: i8) -> Result<()> {
        let pos = self.step_positions(step)?;
        self.apply_kernel(&pos, k.kernel(m))
    }

    fn end_layer(&mut self) -> Result<()> {
        self.normalize()
    }
}

/// Runs one trajectory with the default sweep schedule.
pub fn run_trajectory_dense(p: &SimParams, seed: u64) -> Result<(DoubledState, TrajectoryRecord)> {
    run_trajectory_dense_with(p, seed, RunOptions::default(), |_, _| Ok(()))
}

pub fn run_trajectory_dense_with(
    p: &SimParams,
    seed: u64,
    opts: RunOptions,
    observe: impl FnMut(&mut DoubledState, Stage) -> Result<()>,
) -> Result<(DoubledState, TrajectoryRecord)> {
    let p = p.clone().validate()?;
    let mut st = DoubledState::init(p.initial_state, p.l, p.boundary)?;
    let record = trajectory::drive(&mut st, &p, seed, opts, observe)?;
    Ok((st, TrajectoryRecord { record, seed, ..Default::default() }))
}

/// Evolves the initial state under a fixed record (sublayer order) without
/// renormalizing; the trace of the result is the Born probability of the record.
pub fn evolve_record(p: &SimParams, record: &MeasurementRecord) -> Result<DoubledState> {
    let mut st = DoubledState::init(p.initial_state, p.l, p.boundary)?;
    let kernels = StepKernels::for_params(p);
    for layer in 0..p.t {
        for step in crate::model::layer_steps(p.l, p.boundary, layer, LayerOrder::Sublayers) {
            let (ker, m) = match step {
                Step::X(i) => (&kernels[0], record.m_x[layer][i]),
                Step::Zz(b) => (&kernels[1], record.m_zz[layer][b]),
            };
            st.apply_step(step, ker, m)?;
        }
    }
    Ok(st)
}

/// Visits every record with its unnormalized final state (trace = Born probability).
pub fn for_each_trajectory(p: &SimParams, mut f: impl FnMut(&MeasurementRecord, &DoubledState) -> Result<()>) -> Result<()> {
    let p = p.clone().validate()?;
    let per_layer = p.l + p.n_bonds();
    let total = per_layer * p.t;
    if total > MAX_ENUMERATED_OUTCOMES {
        return Err(Error::TooManyOutcomes(total));
    }
    let kernels = StepKernels::for_params(&p);
    let steps: Vec<(usize, Step)> = (0..p.t)
        .flat_map(|layer| {
            crate::model::layer_steps(p.l, p.boundary, layer, LayerOrder::Sublayers)
                .into_iter()
                .map(move |s| (layer, s))
        })
        .collect();
    let init = DoubledState::init(p.initial_state, p.l, p.boundary)?;
    let mut record = MeasurementRecord::filled(p.t, p.l, p.n_bonds(), 1);

    fn recurse(
        depth: usize,
        st: &DoubledState,
        steps: &[(usize, Step)],
        kernels: &[StepKernels; 2],
        record: &mut MeasurementRecord,
        f: &mut dyn FnMut(&MeasurementRecord, &DoubledState) -> Result<()>,
    ) -> Result<()> {
        if depth == steps.len() {
            return f(record, st);
        }
        let (layer, step) = steps[depth];
        for m in [1i8, -1] {
            let mut next = st.clone();
            let ker = match step {
                Step::X(i) => {
                    record.m_x[layer][i] = m;
                    &kernels[0]
                }
                Step::Zz(b) => {
                    record.m_zz[layer][b] = m;
                    &kernels[1]
                }
            };
            next.apply_step(step, ker, m)?;
            recurse(depth + 1, &next, steps, kernels, record, f)?;
        }
        Ok(())
    }
    recurse(0, &init, &steps, &kernels, &mut record, &mut f)
}

/// Exhaustive list of records with their final states.
pub fn enumerate_trajectories(p: &SimParams) -> Result<Vec<(TrajectoryRecord, DoubledState)>> {
    let mut out = Vec::new();
    for_each_trajectory(p, |record, st| {
        let w = st.trace().re;
        out.push((
            TrajectoryRecord {
                record: record.clone(),
                log_born_weight: Some(w.ln()),
                ..Default::default()
            },
            st.clone(),
        ));
        Ok(())
    })?;
    Ok(out)
}

/// Channel obtained by summing over all outcomes (unconditional evolution).
pub fn evolve_channel(p: &SimParams) -> Result<DoubledState> {
    let p = p.clone().validate()?;
    let mut st = DoubledState::init(p.initial_state, p.l, p.boundary)?;
    let kernels = StepKernels::for_params(&p);
    let summed = [&kernels[0], &kernels[1]].map(|k| k.kernel(1) + k.kernel(-1));
    for layer in 0..p.t {
        for step in crate::model::layer_steps(p.l, p.boundary, layer, LayerOrder::Sublayers) {
            let pos = st.step_positions(step)?;
            let k = match step {
                Step::X(_) => &summed[0],
                Step::Zz(_) => &summed[1],
            };
            st.apply_kernel(&pos, k)?;
        }
    }
    Ok(st)
}

/// Outcome of a layer of projective `Z_iZ_{i+1}` measurements.
#[derive(Clone, Debug)]
pub struct PerfectReadout {
    pub state: DoubledState,
    pub s_t: SpinConfig,
    pub outcomes: Vec<i8>,
}

/// Measures every bond projectively; the state is renormalized to unit trace.
pub fn apply_perfect_zz_layer(st: &DoubledState, seed: u64) -> Result<PerfectReadout> {
    let mut st = st.clone();
    let mut rng = trajectory_rng(seed);
    let nb = crate::model::n_bonds(st.l, st.boundary);
    let mut outcomes = Vec::with_capacity(nb);
    let rows = [1i8, -1].map(|m| kernels::trace_row(&kernels::perfect_zz_kernel(m)));
    for b in 0..nb {
        let pos = st.step_positions(Step::Zz(b))?;
        let w = [0, 1].map(|j| st.local_functional(&pos, rows[j].as_slice().unwrap()).re);
        let u: f64 = rng.random();
        let m = if u < plus_probability(w)? { 1 } else { -1 };
        st.apply_kernel(&pos, &kernels::perfect_zz_kernel(m))?;
        st.normalize()?;
        outcomes.push(m);
    }
    let mut s = vec![1i8; st.l];
    for i in 1..st.l {
        s[i] = s[i - 1] * outcomes[i - 1];
    }
    if st.boundary == Boundary::Periodic && st.l > 1 {
        debug_assert_eq!(s[st.l - 1] * s[0], outcomes[st.l - 1]);
        if s[st.l - 1] * s[0] != outcomes[st.l - 1] {
            return Err(Error::ZeroTrace);
        }
    }
    Ok(PerfectReadout { state: st, s_t: SpinConfig(s), outcomes })
}

/// Unit-trace matrix of `ρ` restricted to span{|s_T⟩, |−s_T⟩} (⊗ reference).
///
/// With a reference the basis order is `(s_T,↑), (s_T,↓), (−s_T,↑), (−s_T,↓)`.
pub fn code_space_matrix(st: &DoubledState, s_t: &SpinConfig) -> Result<Array2<C64>> {
    if s_t.0.len() != st.l {
        return Err(Error::LengthMismatch(s_t.0.len(), st.l));
    }
    let l = st.l;
    let words = [s_t.to_bits(), s_t.flipped().to_bits()];
    let basis: Vec<usize> = if st.has_reference {
        words.iter().flat_map(|&w| [w, 1 << l | w]).collect()
    } else {
        words.to_vec()
    };
    let sp: Vec<usize> = basis.iter().map(|&b| spread(b)).collect();
    let m = Array2::from_shape_fn((basis.len(), basis.len()), |(a, b)| st.amplitudes[2 * sp[a] + sp[b]]);
    let inside: f64 = (0..basis.len()).map(|a| m[[a, a]].re).sum();
    let total = st.trace().re;
    if !(total > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let leak = ((total - inside) / total).abs();
    if leak > 1e-8 {
        return Err(Error::LeakageTooLarge(leak));
    }
    Ok(m.mapv(|z| z / inside))
}

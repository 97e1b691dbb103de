//! Circuit parameters, lattice bookkeeping, the gate schedule and seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::ObservableSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    GhzPlus,
    AllUp,
    MaximallyMixed,
    #[default]
    GhzWithReference,
    AllUpWithReference,
}

impl InitialState {
    pub fn has_reference(self) -> bool {
        matches!(self, Self::GhzWithReference | Self::AllUpWithReference)
    }
}

/// Full circuit specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub lambda_x: f64,
    pub lambda_zz: f64,
    pub q_x: f64,
    pub q_zz: f64,
    #[serde(default)]
    pub theta_x: f64,
    #[serde(default)]
    pub theta_zz: f64,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub master_seed: u64,
}

impl SimParams {
    /// Parameters at a phase-diagram point with `T = 4L` and open boundaries.
    pub fn at(point: PhasePoint, l: usize) -> Self {
        let (lambda_x, lambda_zz, q_x, q_zz) = point.expand();
        Self {
            lambda_x,
            lambda_zz,
            q_x,
            q_zz,
            theta_x: 0.0,
            theta_zz: 0.0,
            l,
            t: 4 * l,
            boundary: Boundary::Open,
            initial_state: InitialState::GhzWithReference,
            master_seed: 0,
        }
    }

    pub fn n_bonds(&self) -> usize {
        n_bonds(self.l, self.boundary)
    }

    /// Qubit pair joined by bond `b`.
    pub fn bond_sites(&self, b: usize) -> (usize, usize) {
        (b, (b + 1) % self.l)
    }

    pub fn has_reference(&self) -> bool {
        self.initial_state.has_reference()
    }

    pub fn validate(self) -> Result<Self> {
        validate_params(self)
    }
}

pub fn n_bonds(l: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Open => l.saturating_sub(1),
        Boundary::Periodic => l,
    }
}

pub fn validate_params(p: SimParams) -> Result<SimParams> {
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    let half = |v: f64| (0.0..=0.5).contains(&v);
    if !unit(p.lambda_x) {
        return Err(Error::OutOfRange("lambda_x"));
    }
    if !unit(p.lambda_zz) {
        return Err(Error::OutOfRange("lambda_zz"));
    }
    if !half(p.q_x) {
        return Err(Error::OutOfRange("q_x"));
    }
    if !half(p.q_zz) {
        return Err(Error::OutOfRange("q_zz"));
    }
    if !p.theta_x.is_finite() {
        return Err(Error::OutOfRange("theta_x"));
    }
    if !p.theta_zz.is_finite() {
        return Err(Error::OutOfRange("theta_zz"));
    }
    if p.l == 0 {
        return Err(Error::OutOfRange("L"));
    }
    if p.t == 0 {
        return Err(Error::OutOfRange("T"));
    }
    if p.boundary == Boundary::Periodic && p.l < 3 {
        return Err(Error::OutOfRange("L"));
    }
    Ok(p)
}

/// One point of the (λ, q) phase diagram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub lambda: f64,
    pub q: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

pub fn default_delta() -> f64 {
    0.7
}

impl PhasePoint {
    pub fn new(lambda: f64, q: f64) -> Self {
        Self { lambda, q, delta: default_delta() }
    }

    /// `(λ_x, λ_zz, q_x, q_zz)`.
    pub fn expand(&self) -> (f64, f64, f64, f64) {
        (self.delta * self.lambda, self.delta * (1.0 - self.lambda), self.q, self.q)
    }
}

pub type Outcome = i8;

/// Measurement outcomes indexed by `[layer][site]` and `[layer][bond]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub m_x: Vec<Vec<Outcome>>,
    pub m_zz: Vec<Vec<Outcome>>,
}

impl MeasurementRecord {
    pub fn filled(t: usize, l: usize, nb: usize, v: Outcome) -> Self {
        Self { m_x: vec![vec![v; l]; t], m_zz: vec![vec![v; nb]; t] }
    }

    pub fn layers(&self) -> usize {
        self.m_x.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.m_x.iter().map(Vec::len).sum::<usize>() + self.m_zz.iter().map(Vec::len).sum::<usize>()
    }

    /// Decodes bit pattern `code` (bit set = outcome −1) in schedule-independent order:
    /// layer by layer, X sites first, then bonds.
    pub fn from_code(t: usize, l: usize, nb: usize, code: u64) -> Self {
        let mut r = Self::filled(t, l, nb, 1);
        let mut bit = 0;
        for layer in 0..t {
            for i in 0..l {
                if code >> bit & 1 == 1 {
                    r.m_x[layer][i] = -1;
                }
                bit += 1;
            }
            for b in 0..nb {
                if code >> bit & 1 == 1 {
                    r.m_zz[layer][b] = -1;
                }
                bit += 1;
            }
        }
        r
    }

    pub fn is_valid(&self) -> bool {
        self.m_x.iter().chain(&self.m_zz).flatten().all(|&m| m == 1 || m == -1)
    }
}

/// Output of one trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub record: MeasurementRecord,
    /// Natural log of the Born probability, exhaustive mode only.
    pub log_born_weight: Option<f64>,
    pub observables: Option<ObservableSet>,
    pub final_zz_outcomes: Option<Vec<Outcome>>,
    pub seed: u64,
}

/// One boundary time slice of one spin species.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig(pub Vec<Outcome>);

impl SpinConfig {
    pub fn up(l: usize) -> Self {
        Self(vec![1; l])
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    /// Bit pattern with site 0 as the most significant bit and bit set for spin down.
    pub fn to_bits(&self) -> usize {
        self.0.iter().fold(0, |acc, &s| acc << 1 | usize::from(s < 0))
    }

    pub fn from_bits(bits: usize, l: usize) -> Self {
        Self((0..l).map(|k| if bits >> (l - 1 - k) & 1 == 1 { -1 } else { 1 }).collect())
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` under `master_seed`.
///
/// For a fixed master seed the map is a bijection of `index` (odd-multiplier
/// offset followed by an invertible mixer), so distinct indices never collide.
pub fn derive_trajectory_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed ^ 0x5851_f42d_4c95_7f2d).wrapping_add(index.wrapping_mul(GOLDEN)))
}

pub type TrajectoryRng = ChaCha8Rng;

pub fn trajectory_rng(seed: u64) -> TrajectoryRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Elementary step of a layer. Each step applies rotation, weak measurement
/// and dephasing of one site (`X`) or one bond (`Zz`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    X(usize),
    Zz(usize),
}

/// Ordering of the elementary steps inside a layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerOrder {
    /// X steps interleaved with the ZZ bond steps in a sweep that alternates
    /// direction from layer to layer. Every X step still precedes every ZZ step
    /// touching the same site, so the layer map is unchanged.
    #[default]
    Sweep,
    /// All X steps in site order, then all ZZ steps in bond order.
    Sublayers,
}

/// Steps of layer `layer` in the order they are sampled.
pub fn layer_steps(l: usize, boundary: Boundary, layer: usize, order: LayerOrder) -> Vec<Step> {
    let nb = n_bonds(l, boundary);
    let mut steps = Vec::with_capacity(l + nb);
    match order {
        LayerOrder::Sublayers => {
            steps.extend((0..l).map(Step::X));
            steps.extend((0..nb).map(Step::Zz));
        }
        LayerOrder::Sweep if layer % 2 == 0 => {
            for i in 0..l {
                steps.push(Step::X(i));
                if i > 0 {
                    steps.push(Step::Zz(i - 1));
                }
            }
        }
        LayerOrder::Sweep => {
            for i in (0..l).rev() {
                steps.push(Step::X(i));
                if i + 1 < l {
                    steps.push(Step::Zz(i));
                }
            }
        }
    }
    if order == LayerOrder::Sweep && boundary == Boundary::Periodic {
        steps.push(Step::Zz(l - 1));
    }
    steps
}

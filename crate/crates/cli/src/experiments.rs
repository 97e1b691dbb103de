//! The order/disorder susceptibility duality experiment on a periodic chain.

use repcode::dense::run_trajectory_dense_with;
use repcode::model::{derive_trajectory_seed, Boundary, LayerOrder, PhasePoint, SimParams};
use repcode::mps::{run_trajectory_mps_with, TruncationPolicy};
use repcode::observables::{disorder_susceptibility_ea, edwards_anderson_susceptibility, sample_stat, Measure, Stat};
use repcode::trajectory::{RunOptions, Stage};
use serde::Serialize;

use crate::config::Engine;
use crate::error::Result;
use crate::sweep::parallel_map;

#[derive(Clone, Debug)]
pub struct DualitySpec {
    pub l: usize,
    pub lambdas: Vec<f64>,
    pub q: f64,
    pub delta: f64,
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub engine: Engine,
    pub policy: TruncationPolicy,
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityRow {
    pub lambda: f64,
    /// `κ_EA` at `λ`.
    pub kappa_ea: Stat,
    /// `D_EA` at `1 − λ`.
    pub d_ea_dual: Stat,
    /// `|κ − D|` within three combined standard errors.
    pub agree: bool,
}

impl DualityRow {
    pub fn band(&self) -> f64 {
        3.0 * self.kappa_ea.stderr.hypot(self.d_ea_dual.stderr)
    }
}

fn ea_pair(st: &impl Measure) -> repcode::Result<[f64; 2]> {
    Ok([edwards_anderson_susceptibility(st)?, disorder_susceptibility_ea(st)?])
}

/// `(κ_EA, D_EA)` of one trajectory, each averaged over the states after the
/// X and after the ZZ sublayer of the last layer.
pub fn sublayer_averaged(p: &SimParams, engine: Engine, policy: TruncationPolicy, seed: u64) -> repcode::Result<[f64; 2]> {
    let last = p.t - 1;
    let mut acc = [0.0; 2];
    let opts = RunOptions { order: LayerOrder::Sublayers };
    let mut add = |v: [f64; 2]| {
        acc[0] += 0.5 * v[0];
        acc[1] += 0.5 * v[1];
    };
    let hit = |s: Stage| s == Stage::AfterX(last) || s == Stage::AfterLayer(last);
    match engine {
        Engine::Dense => {
            run_trajectory_dense_with(p, seed, opts, |st, s| {
                if hit(s) {
                    add(ea_pair(st)?);
                }
                Ok(())
            })?;
        }
        Engine::Mps => {
            run_trajectory_mps_with(p, seed, policy, opts, |st, s| {
                if hit(s) {
                    add(ea_pair(st)?);
                }
                Ok(())
            })?;
        }
    }
    Ok(acc)
}

pub fn duality_params(l: usize, lambda: f64, q: f64, delta: f64) -> SimParams {
    SimParams { boundary: Boundary::Periodic, ..SimParams::at(PhasePoint { lambda, q, delta }, l) }
}

/// Samples `κ_EA` at every `λ` and `D_EA` at every `1 − λ` and pairs them.
pub fn duality_experiment(spec: &DualitySpec) -> Result<Vec<DualityRow>> {
    let mut points: Vec<f64> = spec.lambdas.iter().flat_map(|&l| [l, 1.0 - l]).collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut stats = Vec::with_capacity(points.len());
    for &lambda in &points {
        let p = duality_params(spec.l, lambda, spec.q, spec.delta);
        let samples = parallel_map(spec.n_trajectories, spec.workers, |k| {
            sublayer_averaged(&p, spec.engine, spec.policy, derive_trajectory_seed(spec.master_seed, k as u64))
        })
        .into_iter()
        .collect::<repcode::Result<Vec<_>>>()?;
        let kappa: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        let d: Vec<f64> = samples.iter().map(|s| s[1]).collect();
        stats.push((lambda, sample_stat(&kappa), sample_stat(&d)));
    }
    let find = |x: f64| stats.iter().find(|s| (s.0 - x).abs() < 1e-12).expect("point was sampled");
    Ok(spec
        .lambdas
        .iter()
        .map(|&lambda| {
            let (kappa_ea, d_ea_dual) = (find(lambda).1, find(1.0 - lambda).2);
            let mut row = DualityRow { lambda, kappa_ea, d_ea_dual, agree: false };
            row.agree = (kappa_ea.mean - d_ea_dual.mean).abs() <= row.band();
            row
        })
        .collect())
}

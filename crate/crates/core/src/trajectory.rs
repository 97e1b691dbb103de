//! Engine-independent trajectory driver.
//!
//! Both engines walk the same step schedule and draw exactly one uniform
//! number per measurement, so equal seeds give equal records whenever the
//! engines agree on the outcome probabilities.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::StepKernels;
use crate::model::{layer_steps, trajectory_rng, LayerOrder, MeasurementRecord, SimParams, Step};

/// State representation that can run the circuit step by step.
pub trait Engine {
    /// Unnormalized weights `(w_+, w_−)` with `w_± = ⟨⟨I|K_±|ρ⟩⟩`.
    fn outcome_weights(&mut self, step: Step, k: &StepKernels) -> Result<[f64; 2]>;
    fn apply_step(&mut self, step: Step, k: &StepKernels, m: i8) -> Result<()>;
    /// Called after every layer; engines may renormalize here.
    fn end_layer(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Points at which the driver hands the state to an observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// All X steps of `layer` are done, none of its ZZ steps (sublayer order only).
    AfterX(usize),
    AfterLayer(usize),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub order: LayerOrder,
}

/// Probability of outcome +1 from the two weights, clamped to `[0, 1]`.
pub fn plus_probability(w: [f64; 2]) -> Result<f64> {
    let total = w[0] + w[1];
    if !(total.abs() > 0.0) || !total.is_finite() {
        return Err(Error::ZeroTrace);
    }
    Ok((w[0] / total).clamp(0.0, 1.0))
}

/// Runs all layers of `p` on `engine`, sampling outcomes from `seed`.
pub fn drive<E: Engine>(
    engine: &mut E,
    p: &SimParams,
    seed: u64,
    opts: RunOptions,
    mut observe: impl FnMut(&mut E, Stage) -> Result<()>,
) -> Result<MeasurementRecord> {
    let kernels = StepKernels::for_params(p);
    let mut rng = trajectory_rng(seed);
    let mut record = MeasurementRecord::filled(p.t, p.l, p.n_bonds(), 1);
    for layer in 0..p.t {
        let steps = layer_steps(p.l, p.boundary, layer, opts.order);
        for (k, &step) in steps.iter().enumerate() {
            let ker = match step {
                Step::X(_) => &kernels[0],
                Step::Zz(_) => &kernels[1],
            };
            let w = engine.outcome_weights(step, ker)?;
            let u: f64 = rng.random();
            let m = if u < plus_probability(w)? { 1 } else { -1 };
            engine.apply_step(step, ker, m)?;
            match step {
                Step::X(i) => record.m_x[layer][i] = m,
                Step::Zz(b) => record.m_zz[layer][b] = m,
            }
            if opts.order == LayerOrder::Sublayers && k + 1 == p.l {
                observe(engine, Stage::AfterX(layer))?;
            }
        }
        engine.end_layer()?;
        observe(engine, Stage::AfterLayer(layer))?;
    }
    Ok(record)
}

/// Applies a fixed record without sampling, returning the product of the
/// per-step outcome probabilities.
pub fn replay<E: Engine>(engine: &mut E, p: &SimParams, record: &MeasurementRecord, order: LayerOrder) -> Result<f64> {
    let kernels = StepKernels::for_params(p);
    let mut log_p = 0.0;
    for layer in 0..p.t {
        for step in layer_steps(p.l, p.boundary, layer, order) {
            let (ker, m) = match step {
                Step::X(i) => (&kernels[0], record.m_x[layer][i]),
                Step::Zz(b) => (&kernels[1], record.m_zz[layer][b]),
            };
            let w = engine.outcome_weights(step, ker)?;
            let pp = plus_probability(w)?;
            log_p += if m > 0 { pp.ln() } else { (1.0 - pp).ln() };
            engine.apply_step(step, ker, m)?;
        }
        engine.end_layer()?;
    }
    Ok(log_p)
}

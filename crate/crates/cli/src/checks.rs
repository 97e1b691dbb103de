//! Oracle and identity checks shared by the `verify`, `statmech` and
//! `continuum` subcommands and the acceptance suite.

use continuum::spectrum::Sector;
use continuum::{spectral_match, tfim_comparison, u1_charge_residual, xxz_params_from_circuit, CircuitKind, HamiltonianSpec};
use repcode::dense::run_trajectory_dense;
use repcode::identities::{closed_form_check, cq_identities};
use repcode::kernels::Basis;
use repcode::model::{derive_trajectory_seed, Boundary, InitialState, SimParams};
use repcode::mps::{run_trajectory_mps, TruncationPolicy};
use repcode::observables::{measure_all, Observable};
use serde::Serialize;
use statmech::duality::{record_duality_residual, self_duality_residual_at};
use statmech::partition::Method;
use statmech::rbim::reduction_ratio_spread;
use statmech::nishimori_residual;

use crate::error::Result;
use crate::sweep::parallel_map;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `value <= limit`; NaN fails.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value <= limit, detail: String::new() }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value >= limit, detail: String::new() }
    }

    pub fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self { name: name.into(), value: f64::NAN, limit: f64::NAN, pass: false, detail: err.to_string() }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{verdict} {}: {:.3e} (limit {:.3e})", self.name, self.value, self.limit);
        if !self.detail.is_empty() {
            s.push_str(&format!(" [{}]", self.detail));
        }
        s
    }
}

/// Runs `f` and checks its value against an upper limit.
pub fn bounded(name: &str, limit: f64, f: impl FnOnce() -> Result<f64>) -> CheckResult {
    match f() {
        Ok(v) => CheckResult::at_most(name, v, limit),
        Err(e) => CheckResult::failed(name, e),
    }
}

pub fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[allow(clippy::too_many_arguments)]
pub fn circuit(lx: f64, lzz: f64, qx: f64, qzz: f64, tx: f64, tzz: f64, l: usize, t: usize) -> SimParams {
    SimParams {
        lambda_x: lx,
        lambda_zz: lzz,
        q_x: qx,
        q_zz: qzz,
        theta_x: tx,
        theta_zz: tzz,
        l,
        t,
        boundary: Boundary::Open,
        initial_state: InitialState::GhzWithReference,
        master_seed: 0,
    }
}

/// Uniform number in `[0, 1)` from a derived seed.
fn unit(master: u64, k: u64) -> f64 {
    (derive_trajectory_seed(master, k) >> 11) as f64 / (1u64 << 53) as f64
}

/// Largest deviation between the engines over shared-seed trajectories, all
/// observables except the dense-only exact `i_c`. A record mismatch counts
/// as an infinite deviation.
pub fn engine_deviation(points: &[SimParams], n_trajectories: usize, chi_max: usize, workers: usize) -> Result<f64> {
    let policy = TruncationPolicy::new(chi_max, 0.0)?;
    let tasks: Vec<(usize, u64)> = (0..points.len()).flat_map(|i| (0..n_trajectories as u64).map(move |k| (i, k))).collect();
    let devs = parallel_map(tasks.len(), workers, |j| -> Result<f64> {
        let (i, k) = tasks[j];
        let seed = derive_trajectory_seed(points[i].master_seed, k);
        let (d, rd) = run_trajectory_dense(&points[i], seed)?;
        let (m, rm) = run_trajectory_mps(&points[i], seed, policy)?;
        if rd.record != rm.record {
            return Ok(f64::INFINITY);
        }
        let (a, b) = (measure_all(&d, false)?, measure_all(&m, false)?);
        Ok(Observable::ALL.iter().filter_map(|&o| Some((a.get(o)? - b.get(o)?).abs())).fold(0.0, f64::max))
    });
    devs.into_iter().try_fold(0.0, |acc, d| Ok(f64::max(acc, d?)))
}

/// Parameter points at `L = 2, T = 2` for the partition-function checks,
/// with and without unitary rotations.
pub fn small_circuits() -> Vec<SimParams> {
    vec![
        circuit(0.3, 0.6, 0.1, 0.2, 0.0, 0.0, 2, 2),
        circuit(0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 2, 2),
        circuit(0.8, 0.25, 0.3, 0.05, 0.0, 0.0, 2, 2),
        circuit(0.7, 0.2, 0.3, 0.05, 0.2, 0.0, 2, 2),
        circuit(0.4, 0.6, 0.1, 0.1, 0.2, 0.2, 2, 2),
        circuit(0.6, 0.3, 0.15, 0.25, 0.0, 0.3, 2, 2),
    ]
}

pub fn born_partition_checks(points: &[SimParams]) -> Vec<CheckResult> {
    [(Method::TransferMatrix, "transfer matrix"), (Method::BruteForce, "brute force")]
        .into_iter()
        .map(|(method, label)| {
            bounded(&format!("Born weights vs normalized Z ({label})"), 1e-9, || {
                points.iter().try_fold(0.0, |acc, p| Ok(f64::max(acc, nishimori_residual(p, method)?)))
            })
        })
        .collect()
}

pub fn record_duality_check(pairs: &[(f64, f64)]) -> CheckResult {
    bounded("record-level duality", 1e-9, || {
        pairs.iter().try_fold(0.0, |acc, &(lx, lzz)| Ok(f64::max(acc, record_duality_residual(lx, lzz, 0.0, 0.0, 2, 2)?)))
    })
}

/// A 10 × 10 grid of `(λ, q)`. The λ values avoid the curve `λ = q/(1−q)`,
/// on which both Potts weights vanish and the identities only hold as limits.
pub fn self_dual_grid() -> Vec<(f64, f64)> {
    let lambdas = [0.03, 0.08, 0.14, 0.21, 0.29, 0.38, 0.48, 0.6, 0.74, 0.9];
    lambdas.iter().flat_map(|&l| (0..10).map(move |j| (l, 0.05 * j as f64))).collect()
}

pub fn self_duality_check(grid: &[(f64, f64)]) -> CheckResult {
    bounded("self-duality identities", 1e-10, || {
        grid.iter().try_fold(0.0, |acc, &(lam, q)| {
            let (a, b) = self_duality_residual_at(lam, q)?;
            Ok(f64::max(acc, a.max(b)))
        })
    })
    .with_detail(format!("{} grid points", grid.len()))
}

pub fn rbim_reduction_check(points: &[SimParams]) -> CheckResult {
    bounded("reduced-model ratio spread", 1e-10, || {
        points.iter().try_fold(0.0, |acc, p| Ok(f64::max(acc, reduction_ratio_spread(p)?)))
    })
}

pub fn rbim_points() -> Vec<SimParams> {
    vec![
        circuit(0.0, 0.6, 0.2, 0.1, 0.0, 0.0, 2, 2),
        circuit(0.0, 0.3, 0.35, 0.2, 0.0, 0.0, 2, 2),
        circuit(0.6, 0.0, 0.1, 0.2, 0.0, 0.0, 2, 2),
        circuit(0.3, 0.0, 0.15, 0.35, 0.0, 0.0, 2, 2),
    ]
}

/// Closed-form code-space spectra on `n` trajectories at `L = 4` with random
/// couplings, each followed by a perfect ZZ readout layer.
pub fn closed_form_checks(n: usize, master_seed: u64) -> Vec<CheckResult> {
    let run = || -> Result<(f64, f64)> {
        let (mut spectrum, mut information) = (0.0f64, 0.0f64);
        for k in 0..n as u64 {
            let u = |j| unit(master_seed, 8 * k + j);
            let p = circuit(u(0), u(1), 0.4 * u(2), 0.4 * u(3), 0.0, 0.0, 4, 2 + (8.0 * u(4)) as usize);
            let seed = derive_trajectory_seed(master_seed, 8 * k + 5);
            let (st, _) = run_trajectory_dense(&p, seed)?;
            let c = closed_form_check(&st, seed ^ 1)?;
            spectrum = spectrum.max(c.spectrum);
            information = information.max(c.information);
        }
        Ok((spectrum, information))
    };
    match run() {
        Ok((s, i)) => vec![
            CheckResult::at_most("closed-form code-space spectra", s, 1e-10),
            CheckResult::at_most("(S_R, I_c) from the spectrum", i, 1e-9),
        ],
        Err(e) => vec![CheckResult::failed("closed-form code-space spectra", e)],
    }
}

pub fn cq_identity_check(points: &[SimParams]) -> CheckResult {
    bounded("trajectory averages vs classical-quantum state", 1e-9, || {
        points.iter().try_fold(0.0, |acc, p| Ok(f64::max(acc, cq_identities(p)?.residual())))
    })
}

pub fn continuum_suite() -> Vec<CheckResult> {
    let open = Boundary::Open;
    let mut out = Vec::new();
    out.push(bounded("H1 vs staggered XXZ spectra (L = 4)", 1e-9, || {
        let mut worst = 0.0f64;
        for (lx, lzz, qx, qzz) in [(0.5, 0.5, 0.2, 0.2), (0.8, 0.3, 0.25, 0.1), (0.2, 0.9, 0.0, 0.4)] {
            let h1 = HamiltonianSpec::h1(lx, lzz, qx, qzz, 4, open);
            let xxz = HamiltonianSpec::xxz(xxz_params_from_circuit(CircuitKind::Forced, lx, lzz, qx, qzz)?, 4, open);
            worst = worst.max(spectral_match(&h1, &xxz, None)?);
            for (ket, bra) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                worst = worst.max(spectral_match(&h1, &xxz, Some(Sector::StrongParity { ket, bra }))?);
            }
        }
        Ok(worst)
    }));
    out.push(bounded("H1 vs fermion chain spectra (L = 4)", 1e-9, || {
        let mut worst = 0.0f64;
        for (lx, lzz, qx, qzz) in [(0.5, 0.5, 0.2, 0.2), (0.8, 0.3, 0.25, 0.1)] {
            let h1 = HamiltonianSpec::h1(lx, lzz, qx, qzz, 4, open);
            let f = HamiltonianSpec::forced_fermion(lx, lzz, qx, qzz, None, 4);
            worst = worst.max(spectral_match(&h1, &f, None)?);
        }
        Ok(worst)
    }));
    out.push(bounded("U(1) charge commutator at theta = 0", 1e-10, || {
        let mut worst = 0.0f64;
        for (lam, q) in [(0.3, 0.1), (0.5, 0.2), (0.8, 0.05)] {
            worst = worst.max(u1_charge_residual(&circuit(lam, lam, q, q, 0.0, 0.0, 3, 12))?);
        }
        Ok(worst)
    }));
    let replica = || -> Result<(f64, f64)> {
        let (mut r1, mut ratio) = (0.0f64, f64::INFINITY);
        for basis in [Basis::X, Basis::Zz] {
            let a = continuum::replica2_gate_identity_residual(0.5, 1e-3, basis)?;
            let b = continuum::replica2_gate_identity_residual(0.5, 5e-4, basis)?;
            r1 = r1.max(a);
            ratio = ratio.min(a / b);
        }
        Ok((r1, ratio))
    };
    match replica() {
        Ok((r1, ratio)) => {
            out.push(CheckResult::at_most("2-replica gate identity at dt = 1e-3", r1, 1e-5));
            let halving = CheckResult::at_least("2-replica residual reduction on halving dt", ratio, 3.5);
            out.push(CheckResult { pass: halving.pass && ratio <= 4.5, ..halving }.with_detail("expected about 4"));
        }
        Err(e) => out.push(CheckResult::failed("2-replica gate identity", e)),
    }
    let dt = 1e-3;
    out.push(bounded("TFIM vs trajectory EA correlator (L = 3)", 5.0 * dt, || Ok(tfim_comparison(3, 1.0, 0.3, 1.0, dt, 0, 2)?.relative_error())));
    out
}

/// The partition-function checks at their standard points.
pub fn statmech_suite() -> Vec<CheckResult> {
    let mut out = born_partition_checks(&small_circuits());
    out.push(record_duality_check(&[(0.3, 0.6), (0.5, 0.5)]));
    out.push(self_duality_check(&self_dual_grid()));
    out.push(rbim_reduction_check(&rbim_points()));
    out
}

/// Engine agreement at `L = 6, T = 24` on points across the three phases.
pub fn engine_points() -> Vec<SimParams> {
    [
        (0.07, 0.65, 0.05, 0.05, 0.0, 0.0),
        (0.35, 0.35, 0.4, 0.4, 0.0, 0.0),
        (0.665, 0.035, 0.05, 0.05, 0.0, 0.0),
        (0.21, 0.49, 0.1, 0.1, 0.2, 0.2),
        (0.5, 0.2, 0.1, 0.1, 0.2, 0.0),
    ]
    .into_iter()
    .map(|(lx, lzz, qx, qzz, tx, tzz)| circuit(lx, lzz, qx, qzz, tx, tzz, 6, 24))
    .collect()
}

/// Everything except the long sampling runs.
pub fn verify_suite(workers: usize) -> Vec<CheckResult> {
    let mut out = vec![bounded("dense vs MPS observables (L = 6, T = 24)", 1e-8, || {
        engine_deviation(&engine_points(), 20, 256, workers)
    })];
    out.extend(statmech_suite());
    out.extend(closed_form_checks(100, 7));
    out.push(cq_identity_check(&[circuit(0.3, 0.6, 0.1, 0.2, 0.0, 0.0, 2, 2), circuit(0.8, 0.2, 0.0, 0.3, 0.0, 0.0, 2, 2)]));
    out.extend(continuum_suite());
    out
}

//! Sweep execution over a pool of worker threads.
//!
//! Trajectory `k` of every grid point uses the seed derived from
//! `(master_seed, k)`, and results are sorted by index before averaging, so
//! rows do not depend on the number of workers.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use repcode::dense::run_trajectory_dense;
use repcode::model::{derive_trajectory_seed, SimParams};
use repcode::mps::{run_trajectory_mps, TruncationPolicy};
use repcode::observables::{average_over_trajectories, measure, AverageMode, Observable, ObservableSet, Stat};

use crate::config::{Axis, Engine, GridPoint, SweepSpec};
use crate::error::Result;

/// Package version and git revision of the build.
pub fn build_id() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("REPCODE_GIT_ID"))
}

/// One aggregated grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub axis: Axis,
    pub value: f64,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    pub delta: Option<f64>,
    pub params: SimParams,
    pub stats: BTreeMap<Observable, Stat>,
    pub n_trajectories: usize,
    pub engine: Engine,
    /// Bond-dimension cap, MPS rows only.
    pub chi_max: Option<usize>,
    pub build_id: String,
    pub wall_time: f64,
    pub error: Option<String>,
}

/// Maps `f` over `0..n` on up to `workers` threads; output is in index order.
pub fn parallel_map<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let mut out: Vec<(usize, T)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers.clamp(1, n.max(1)))
            .map(|_| {
                s.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            break local;
                        }
                        local.push((i, f(i)));
                    }
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    });
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, v)| v).collect()
}

pub fn simulate_trajectory(
    p: &SimParams,
    engine: Engine,
    policy: TruncationPolicy,
    seed: u64,
    wanted: &[Observable],
) -> repcode::Result<ObservableSet> {
    match engine {
        Engine::Dense => measure(&run_trajectory_dense(p, seed)?.0, wanted),
        Engine::Mps => measure(&run_trajectory_mps(p, seed, policy)?.0, wanted),
    }
}

/// Runs all trajectories of one grid point. An engine error in any
/// trajectory marks the whole point as failed; the first error by index is kept.
pub fn run_point(spec: &SweepSpec, g: &GridPoint) -> ResultRow {
    let start = Instant::now();
    let policy = spec.policy();
    let sets = parallel_map(spec.n_trajectories, spec.workers, |k| {
        simulate_trajectory(&g.params, g.engine, policy, derive_trajectory_seed(spec.master_seed, k as u64), &spec.observable_list)
    });
    let averaged = sets
        .into_iter()
        .collect::<repcode::Result<Vec<_>>>()
        .and_then(|sets| average_over_trajectories(&sets, AverageMode::Sampled));
    let (stats, error) = match averaged {
        Ok(s) => (s, None),
        Err(e) => (BTreeMap::new(), Some(e.to_string())),
    };
    ResultRow {
        axis: spec.axis,
        value: g.value,
        lambda: g.phase.map(|p| p.lambda),
        q: g.phase.map(|p| p.q),
        delta: g.phase.map(|p| p.delta),
        params: g.params.clone(),
        stats,
        n_trajectories: spec.n_trajectories,
        engine: g.engine,
        chi_max: (g.engine == Engine::Mps).then_some(spec.chi_max),
        build_id: build_id(),
        wall_time: start.elapsed().as_secs_f64(),
        error,
    }
}

/// Runs every grid point in order, handing each row to `on_row` as soon as
/// it is complete. Failed points are recorded in their row and the sweep
/// continues; only errors from `on_row` abort it.
pub fn run_sweep(spec: &SweepSpec, mut on_row: impl FnMut(&ResultRow) -> Result<()>) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for g in spec.grid() {
        let row = run_point(spec, &g);
        on_row(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

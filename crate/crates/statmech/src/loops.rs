//! Loop expansions of a single copy of the pure-measurement model.
//!
//! A single copy (ket or bra alone) at `q = 0` without rotations has bond
//! factors `1` (aligned) or `m^x λ_x` (flipped) in time and `1 + m^zz λ_zz σ`
//! in space, summed over every spin of the space-time lattice. Writing each
//! factor as `a + bσ` gives the high-temperature expansion over closed loops of
//! the lattice; splitting it into aligned and broken values gives the
//! low-temperature expansion over domain walls.

use repcode::model::SimParams;

use crate::error::{Result, StatMechError};
use crate::lattice::{DisorderRealization, Edge, EdgeKind, Lattice};

/// Largest number of edges whose subsets are enumerated.
pub const MAX_LOOP_EDGES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    High,
    Low,
}

/// Aligned and broken values of one single-copy bond factor.
fn bond_values(e: &Edge, m: i8, lambda_x: f64, lambda_zz: f64) -> [f64; 2] {
    let m = f64::from(m);
    match e.kind {
        EdgeKind::Temporal => [1.0, m * lambda_x],
        EdgeKind::Spatial => [1.0 + m * lambda_zz, 1.0 - m * lambda_zz],
    }
}

fn edge_values(d: &DisorderRealization, lambda_x: f64, lambda_zz: f64) -> Vec<(Edge, [f64; 2])> {
    d.lattice.edges().into_iter().map(|e| (e, bond_values(&e, d.outcome(&e), lambda_x, lambda_zz))).collect()
}

/// Sum over all spins of the single-copy weight.
pub fn single_copy_partition(d: &DisorderRealization, lambda_x: f64, lambda_zz: f64) -> Result<f64> {
    let n = d.lattice.n_spins();
    if n > MAX_LOOP_EDGES {
        return Err(StatMechError::TooLarge(n));
    }
    let edges = edge_values(d, lambda_x, lambda_zz);
    let mut z = 0.0;
    for s in 0..1u64 << n {
        let mut w = 1.0;
        for (e, v) in &edges {
            w *= v[usize::from((s >> e.a ^ s >> e.b) & 1 == 1)];
        }
        z += w;
    }
    Ok(z)
}

/// Record-dependent constant in front of the loop sum.
///
/// High side: `2^N Π_temporal (1 + m λ_x)/2`. Low side:
/// `2 Π_spatial (1 + m λ_zz)`.
pub fn loop_prefactor(d: &DisorderRealization, lambda_x: f64, lambda_zz: f64, side: Side) -> f64 {
    let edges = edge_values(d, lambda_x, lambda_zz);
    match side {
        Side::High => {
            let base = 2f64.powi(d.lattice.n_spins() as i32);
            edges.iter().map(|(_, v)| (v[0] + v[1]) / 2.0).product::<f64>() * base
        }
        Side::Low => 2.0 * edges.iter().map(|(_, v)| v[0]).product::<f64>(),
    }
}

/// Edge weight of a loop step: `W = b/a` on the high side, broken over
/// aligned on the low side.
pub fn edge_weight(e: &Edge, m: i8, lambda_x: f64, lambda_zz: f64, side: Side) -> f64 {
    let v = bond_values(e, m, lambda_x, lambda_zz);
    match side {
        Side::High => (v[0] - v[1]) / (v[0] + v[1]),
        Side::Low => v[1] / v[0],
    }
}

/// Fundamental cycles of the lattice graph as edge bit masks.
fn cycle_basis(lat: &Lattice, edges: &[Edge]) -> Vec<u64> {
    let n = lat.n_spins();
    let mut adj = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        adj[e.a].push((e.b, k));
        adj[e.b].push((e.a, k));
    }
    let mut parent = vec![None::<(usize, usize)>; n];
    let mut depth = vec![usize::MAX; n];
    let mut tree = vec![false; edges.len()];
    depth[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &(u, k) in &adj[v] {
            if depth[u] == usize::MAX {
                depth[u] = depth[v] + 1;
                parent[u] = Some((v, k));
                tree[k] = true;
                queue.push_back(u);
            }
        }
    }
    let path_to_root = |mut v: usize| {
        let mut mask = 0u64;
        while let Some((p, k)) = parent[v] {
            mask ^= 1 << k;
            v = p;
        }
        mask
    };
    edges
        .iter()
        .enumerate()
        .filter(|(k, _)| !tree[*k])
        .map(|(k, e)| 1u64 << k ^ path_to_root(e.a) ^ path_to_root(e.b))
        .collect()
}

/// Single-copy partition function as a sum over closed loops (high side) or
/// over domain walls (low side).
pub fn loop_expansion_partition(d: &DisorderRealization, lambda_x: f64, lambda_zz: f64, side: Side) -> Result<f64> {
    let edges = edge_values(d, lambda_x, lambda_zz);
    let ne = edges.len();
    if ne > MAX_LOOP_EDGES {
        return Err(StatMechError::TooLarge(ne));
    }
    let plain: Vec<Edge> = edges.iter().map(|(e, _)| *e).collect();
    let sum: f64 = match side {
        Side::High => {
            let vertex: Vec<u64> = plain.iter().map(|e| 1u64 << e.a | 1u64 << e.b).collect();
            let factors: Vec<[f64; 2]> = edges.iter().map(|(_, v)| [(v[0] + v[1]) / 2.0, (v[0] - v[1]) / 2.0]).collect();
            let base = 2f64.powi(d.lattice.n_spins() as i32);
            base * (0..1u64 << ne)
                .filter(|s| (0..ne).filter(|k| s >> k & 1 == 1).fold(0u64, |acc, k| acc ^ vertex[k]) == 0)
                .map(|s| (0..ne).map(|k| factors[k][(s >> k & 1) as usize]).product::<f64>())
                .sum::<f64>()
        }
        Side::Low => {
            let cycles = cycle_basis(&d.lattice, &plain);
            2.0 * (0..1u64 << ne)
                .filter(|s| cycles.iter().all(|c| (s & c).count_ones() % 2 == 0))
                .map(|s| (0..ne).map(|k| edges[k].1[(s >> k & 1) as usize]).product::<f64>())
                .sum::<f64>()
        }
    };
    Ok(sum)
}

/// Loop expansion for circuit parameters, which must describe pure
/// measurement dynamics.
pub fn loop_expansion_for(p: &SimParams, d: &DisorderRealization, side: Side) -> Result<f64> {
    if p.q_x != 0.0 || p.q_zz != 0.0 || p.theta_x != 0.0 || p.theta_zz != 0.0 {
        return Err(StatMechError::RequiresPureDynamics);
    }
    loop_expansion_partition(d, p.lambda_x, p.lambda_zz, side)
}

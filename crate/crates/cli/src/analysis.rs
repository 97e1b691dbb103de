//! Finite-size crossings and a coarse data-collapse scan.

use std::collections::BTreeMap;

use repcode::observables::Observable;
use serde::{Deserialize, Serialize};

use crate::config::Axis;
use crate::sweep::ResultRow;

/// Points `(x, y)` with increasing `x`.
pub type Curve = Vec<(f64, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub l_small: usize,
    pub l_large: usize,
    pub x: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub pairs: Vec<Crossing>,
    /// Mean over pairs, `None` if no pair crosses.
    pub estimate: Option<f64>,
}

/// First sign change of `a − b` along `xs`, located by linear interpolation.
pub fn linear_crossing(xs: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
    for i in 0..d.len().min(xs.len()) {
        if d[i] == 0.0 {
            return Some(xs[i]);
        }
        if i + 1 < d.len() && d[i] * d[i + 1] < 0.0 {
            let t = d[i] / (d[i] - d[i + 1]);
            return Some(xs[i] + t * (xs[i + 1] - xs[i]));
        }
    }
    None
}

/// Crossings of every pair of sizes, evaluated on their common `x` values.
pub fn pairwise_crossings(curves: &BTreeMap<usize, Curve>) -> CrossingEstimate {
    let sizes: Vec<usize> = curves.keys().copied().collect();
    let mut pairs = Vec::new();
    for (i, &l1) in sizes.iter().enumerate() {
        for &l2 in &sizes[i + 1..] {
            let other: BTreeMap<u64, f64> = curves[&l2].iter().map(|&(x, y)| (x.to_bits(), y)).collect();
            let common: Vec<(f64, f64, f64)> =
                curves[&l1].iter().filter_map(|&(x, y)| other.get(&x.to_bits()).map(|&y2| (x, y, y2))).collect();
            let xs: Vec<f64> = common.iter().map(|c| c.0).collect();
            let a: Vec<f64> = common.iter().map(|c| c.1).collect();
            let b: Vec<f64> = common.iter().map(|c| c.2).collect();
            if let Some(x) = linear_crossing(&xs, &a, &b) {
                pairs.push(Crossing { l_small: l1, l_large: l2, x });
            }
        }
    }
    let estimate = (!pairs.is_empty()).then(|| pairs.iter().map(|c| c.x).sum::<f64>() / pairs.len() as f64);
    CrossingEstimate { pairs, estimate }
}

/// Mean of `o` against the axis value, one curve per chain length, from
/// rows that completed.
pub fn curves_from_rows(rows: &[ResultRow], o: Observable) -> BTreeMap<usize, Curve> {
    let mut curves: BTreeMap<usize, Curve> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none() && r.axis != Axis::L) {
        if let Some(s) = r.stats.get(&o) {
            curves.entry(r.params.l).or_default().push((r.value, s.mean));
        }
    }
    for c in curves.values_mut() {
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    curves
}

/// Crossing estimates for every observable present, when at least two sizes are.
pub fn crossings_by_observable(rows: &[ResultRow]) -> BTreeMap<String, CrossingEstimate> {
    Observable::ALL
        .into_iter()
        .filter_map(|o| {
            let curves = curves_from_rows(rows, o);
            (curves.len() >= 2).then(|| (o.name().to_string(), pairwise_crossings(&curves)))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub x_c: f64,
    pub nu: f64,
    pub residual: f64,
}

fn interpolate(c: &[(f64, f64)], u: f64) -> Option<f64> {
    let k = c.windows(2).position(|w| w[0].0 <= u && u <= w[1].0)?;
    let ((u0, y0), (u1, y1)) = (c[k], c[k + 1]);
    Some(if u1 == u0 { y0 } else { y0 + (u - u0) / (u1 - u0) * (y1 - y0) })
}

/// Mean squared distance of every point from the other sizes' curves in the
/// scaled variable `(x − x_c) L^{1/ν}`, over the overlap of their ranges.
pub fn collapse_residual(curves: &BTreeMap<usize, Curve>, x_c: f64, nu: f64) -> Option<f64> {
    let scaled: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(&l, c)| c.iter().map(|&(x, y)| ((x - x_c) * (l as f64).powf(1.0 / nu), y)).collect())
        .collect();
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, ci) in scaled.iter().enumerate() {
        for (j, cj) in scaled.iter().enumerate() {
            if i == j {
                continue;
            }
            for &(u, y) in ci {
                if let Some(yj) = interpolate(cj, u) {
                    sum += (y - yj) * (y - yj);
                    n += 1;
                }
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Grid scan of [`collapse_residual`]. Diagnostic quality only: the grid
/// spacing bounds the resolution and no error bars are produced.
pub fn collapse_fit(curves: &BTreeMap<usize, Curve>, xc_grid: &[f64], nu_grid: &[f64]) -> Option<CollapseFit> {
    let mut best: Option<CollapseFit> = None;
    for &x_c in xc_grid {
        for &nu in nu_grid {
            let Some(residual) = collapse_residual(curves, x_c, nu) else { continue };
            if best.is_none_or(|b| residual < b.residual) {
                best = Some(CollapseFit { x_c, nu, residual });
            }
        }
    }
    best
}

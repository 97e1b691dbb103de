use num_complex::Complex64 as C64;
use repcode::model::{Boundary, MeasurementRecord};
use statmech::couplings::couplings_from_params;
use statmech::duality::{
    bond_weights, dual_record, kw_dual_couplings, potts_weights, record_code, record_duality_residual,
    self_duality_residual, self_duality_residual_at,
};
use statmech::loops::{loop_expansion_partition, loop_prefactor, single_copy_partition, Side};
use statmech::{DisorderRealization, Lattice};

fn self_dual_grid() -> Vec<(f64, f64)> {
    let lambdas = [0.03, 0.08, 0.14, 0.21, 0.29, 0.38, 0.48, 0.6, 0.74, 0.9];
    let mut out = Vec::new();
    for lam in lambdas {
        for j in 0..10 {
            out.push((lam, 0.05 * j as f64));
        }
    }
    out
}

#[test]
fn self_dual_family_satisfies_both_conditions() {
    for (lam, q) in self_dual_grid() {
        let (a, b) = self_duality_residual_at(lam, q).unwrap_or_else(|e| panic!("{lam} {q} {e}"));
        assert!(a < 1e-10 && b < 1e-10, "λ = {lam}, q = {q}: {a:e} {b:e}");
    }
}

#[test]
fn unequal_strengths_break_self_duality() {
    let c = couplings_from_params(0.3, 0.6, 0.1, 0.1).unwrap();
    let [s, t] = bond_weights(&c, 1, 1).unwrap();
    let (a, b) = self_duality_residual(s.w, s.t, t.w, t.t);
    assert!(a > 1e-3 || b > 1e-3);
}

#[test]
fn potts_weights_reproduce_bond_factors() {
    let (j, k) = (C64::new(0.3, 0.4), 0.2);
    let bw = potts_weights(j, k).unwrap();
    let factor = |da: f64, db: f64| 1.0 + bw.w * (da + db) + bw.w * bw.w * bw.t * da * db;
    assert!((factor(1.0, 0.0) - j.exp()).norm() < 1e-13);
    assert!((factor(1.0, 1.0) - (2.0 * j + k).exp()).norm() < 1e-13);
    assert!((factor(0.0, 0.0) - 1.0).norm() < 1e-15);
}

#[test]
fn dual_couplings_keep_t() {
    let d = kw_dual_couplings(C64::new(0.7, 0.1), C64::new(1.3, -0.2)).unwrap();
    assert_eq!(d.t_bar, C64::new(1.3, -0.2));
    assert!((d.w_bar * C64::new(0.7, 0.1) * d.t_bar - 2.0).norm() < 1e-14);
    let dd = kw_dual_couplings(d.w_bar, d.t_bar).unwrap();
    assert!((dd.w_bar - C64::new(0.7, 0.1)).norm() < 1e-14);
    assert!(kw_dual_couplings(C64::from(0.0), C64::from(1.0)).is_err());
}

#[test]
fn record_probabilities_are_self_dual() {
    for (lx, lzz) in [(0.3, 0.6), (0.5, 0.5), (0.8, 0.15)] {
        let r = record_duality_residual(lx, lzz, 0.0, 0.0, 2, 2).unwrap();
        assert!(r < 1e-9, "{lx} {lzz}: {r:e}");
    }
}

#[test]
fn dephasing_rates_swap_under_duality() {
    assert!(record_duality_residual(0.3, 0.6, 0.1, 0.25, 2, 2).unwrap() < 1e-9);
    assert!(record_duality_residual(0.45, 0.7, 0.2, 0.05, 3, 1).unwrap() < 1e-9);
    let wrong = record_duality_residual(0.3, 0.6, 0.1, 0.25, 2, 2).unwrap();
    let broken = {
        use statmech::partition::{partition_table, Boundaries, InitialCondition, Method};
        let lat = Lattice::new(2, 2, Boundary::Periodic).unwrap();
        let bc = Boundaries::traced(InitialCondition::sector_mixed(2));
        let a = partition_table(&lat, &couplings_from_params(0.3, 0.6, 0.1, 0.25).unwrap(), &bc, Method::TransferMatrix).unwrap();
        let b = partition_table(&lat, &couplings_from_params(0.6, 0.3, 0.1, 0.25).unwrap(), &bc, Method::TransferMatrix).unwrap();
        (0..a.len())
            .map(|code| {
                let r = MeasurementRecord::from_code(2, 2, 2, code as u64);
                let d = dual_record(&lat, &r).unwrap();
                (a[code] - b[record_code(&d) as usize]).norm()
            })
            .fold(0.0, f64::max)
    };
    assert!(wrong < 1e-9 && broken > 1e-4);
}

fn records(lat: Lattice) -> impl Iterator<Item = DisorderRealization> {
    (0..1u64 << lat.n_edges()).map(move |c| DisorderRealization::from_code(lat, c))
}

#[test]
fn loop_expansions_agree_with_spin_sum() {
    for (l, t, boundary) in [(2, 2, Boundary::Open), (3, 2, Boundary::Open), (2, 2, Boundary::Periodic), (3, 1, Boundary::Periodic)] {
        let lat = Lattice::new(l, t, boundary).unwrap();
        for (lx, lzz) in [(0.5, 0.5), (0.3, 0.8), (1.0, 0.4)] {
            for d in records(lat).step_by(3) {
                let z = single_copy_partition(&d, lx, lzz).unwrap();
                let hi = loop_expansion_partition(&d, lx, lzz, Side::High).unwrap();
                let lo = loop_expansion_partition(&d, lx, lzz, Side::Low).unwrap();
                let scale = 1.0 + z.abs();
                assert!((hi - z).abs() < 1e-10 * scale && (lo - z).abs() < 1e-10 * scale, "{hi} {lo} {z}");
            }
        }
    }
}

#[test]
fn vanishing_strengths_leave_only_the_empty_loop() {
    let lat = Lattice::new(3, 2, Boundary::Open).unwrap();
    for d in records(lat).step_by(37) {
        let z = loop_expansion_partition(&d, 0.0, 0.0, Side::High).unwrap();
        assert!((z - loop_prefactor(&d, 0.0, 0.0, Side::High)).abs() < 1e-12);
    }
}

#[test]
fn dual_prefactors_differ_by_a_record_independent_magnitude() {
    let lat = Lattice::new(2, 2, Boundary::Periodic).unwrap();
    let (lx, lzz) = (0.35, 0.6);
    let ratios: Vec<f64> = records(lat)
        .map(|d| {
            let dual = DisorderRealization::new(lat, dual_record(&lat, &d.record).unwrap()).unwrap();
            (loop_prefactor(&d, lx, lzz, Side::High) / loop_prefactor(&dual, lzz, lx, Side::Low)).abs()
        })
        .collect();
    assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-12 * ratios[0]));
}

#[test]
fn oversized_loop_problems_are_rejected() {
    let lat = Lattice::new(5, 3, Boundary::Open).unwrap();
    let d = DisorderRealization::from_code(lat, 0);
    assert!(loop_expansion_partition(&d, 0.5, 0.5, Side::Low).is_err());
}

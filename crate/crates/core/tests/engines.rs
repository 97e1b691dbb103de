use num_complex::Complex64 as C64;
use proptest::prelude::*;
use repcode::dense::{run_trajectory_dense, DoubledState};
use ndarray::Array2;
use repcode::kernels::{self, Basis, Pauli, StepKernels};
use repcode::model::{Boundary, InitialState, SimParams};
use repcode::mps::{run_trajectory_mps, DoubledMps, TruncationPolicy};
use repcode::observables::{measure_all, Measure};

fn params(l: usize, boundary: Boundary, init: InitialState, lx: f64, lz: f64, qx: f64, qz: f64, th: f64) -> SimParams {
    SimParams {
        lambda_x: lx,
        lambda_zz: lz,
        q_x: qx,
        q_zz: qz,
        theta_x: th,
        theta_zz: 0.5 * th,
        l,
        t: 3,
        boundary,
        initial_state: init,
        master_seed: 0,
    }
}

fn unit_trace(v: &[C64]) -> Vec<C64> {
    let l = (v.len() as f64).log(4.0).round() as usize;
    let tr: C64 = (0..1usize << l)
        .map(|s| {
            let mut idx = 0;
            for j in 0..l {
                idx |= ((s >> j) & 1) * 3 << (2 * j);
            }
            v[idx]
        })
        .sum();
    v.iter().map(|z| z / tr).collect()
}

fn assert_same_state(d: &DoubledState, m: &DoubledMps, tol: f64) {
    let a = unit_trace(&d.amplitudes);
    let b = unit_trace(&m.to_dense_amplitudes());
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < tol, "state mismatch {err}");
}

fn compare(p: &SimParams, seed: u64) {
    let (d, rd) = run_trajectory_dense(p, seed).unwrap();
    let (m, rm) = run_trajectory_mps(p, seed, TruncationPolicy::new(256, 0.0).unwrap()).unwrap();
    assert_eq!(rd.record, rm.record);
    assert_same_state(&d, &m, 1e-9);
    let od = measure_all(&d, false).unwrap();
    let om = measure_all(&m, false).unwrap();
    for o in repcode::observables::Observable::ALL {
        match (od.get(o), om.get(o)) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()), "{} {x} {y}", o.name()),
            (None, None) => {}
            _ => panic!("availability differs for {}", o.name()),
        }
    }
}

#[test]
fn engines_agree_open_with_reference() {
    let p = params(5, Boundary::Open, InitialState::GhzWithReference, 0.4, 0.7, 0.1, 0.2, 0.3);
    for seed in 0..4 {
        compare(&p, seed);
    }
}

#[test]
fn engines_agree_periodic() {
    let p = params(5, Boundary::Periodic, InitialState::GhzPlus, 0.6, 0.5, 0.2, 0.1, 0.2);
    for seed in 0..4 {
        compare(&p, seed);
    }
    let p = params(4, Boundary::Periodic, InitialState::GhzWithReference, 0.3, 0.8, 0.0, 0.0, 0.0);
    compare(&p, 9);
}

#[test]
fn correlator_matrices_agree() {
    let p = params(5, Boundary::Periodic, InitialState::MaximallyMixed, 0.5, 0.5, 0.1, 0.1, 0.1);
    let (d, _) = run_trajectory_dense(&p, 3).unwrap();
    let (m, _) = run_trajectory_mps(&p, 3, TruncationPolicy::default()).unwrap();
    for (a, b) in [
        (d.zz_correlators().unwrap(), m.zz_correlators().unwrap()),
        (d.x_string_correlators().unwrap(), m.x_string_correlators().unwrap()),
        (d.renyi2_zz_correlators().unwrap(), m.renyi2_zz_correlators().unwrap()),
        (d.renyi2_x_string_correlators().unwrap(), m.renyi2_x_string_correlators().unwrap()),
    ] {
        assert!((&a - &b).iter().all(|x| x.abs() < 1e-9));
    }
    assert!((d.renyi2_x_string_sum().unwrap() - m.renyi2_x_string_sum().unwrap()).abs() < 1e-9);
    assert!((d.renyi2_zz_sum().unwrap() - m.renyi2_zz_sum().unwrap()).abs() < 1e-9);
}

#[test]
fn general_two_copy_expectation_and_subsystem_purity() {
    let p = params(4, Boundary::Open, InitialState::GhzWithReference, 0.5, 0.6, 0.2, 0.1, 0.4);
    let (d, _) = run_trajectory_dense(&p, 5).unwrap();
    let (m, _) = run_trajectory_mps(&p, 5, TruncationPolicy::default()).unwrap();
    let ops = [(0, Pauli::Y), (2, Pauli::X), (3, Pauli::Z)];
    assert!((d.renyi2_expectation(&ops).unwrap() - m.renyi2_expectation(&ops).unwrap()).abs() < 1e-9);
    assert!((d.strong_expectation(&ops).unwrap() - m.strong_expectation(&ops).unwrap()).abs() < 1e-9);
    let region = [repcode::dense::Site::System(1), repcode::dense::Site::System(2)];
    let pm = m.renyi2_subsystem_purity(&[m.pos(1), m.pos(2)]).unwrap();
    assert!((d.subsystem_purity(&region).unwrap() - pm).abs() < 1e-9);
}

#[test]
fn local_channel_and_canonical_form() {
    let mut m = DoubledMps::build(InitialState::GhzPlus, 6, Boundary::Open, TruncationPolicy::default()).unwrap();
    let k = kernels::dephasing_kernel(kernels::Basis::Zz, 0.3);
    m.apply_local_channel(2, &k).unwrap();
    m.apply_local_channel(4, &kernels::rotation_kernel(kernels::Basis::X, 0.2)).unwrap();
    assert!(m.canonical_error() < 1e-12);
    assert!((m.identity_overlap() - 1.0).abs() < 1e-12);
    let bad = ndarray::Array2::<C64>::zeros((8, 8));
    assert!(m.apply_local_channel(0, &bad).is_err());
}

#[test]
fn checkpoint_round_trip() {
    let p = params(5, Boundary::Open, InitialState::GhzWithReference, 0.4, 0.7, 0.1, 0.2, 0.3);
    let (m, _) = run_trajectory_mps(&p, 2, TruncationPolicy::default()).unwrap();
    let mut buf = Vec::new();
    m.write_checkpoint(&mut buf).unwrap();
    let back = DoubledMps::read_checkpoint(&mut buf.as_slice()).unwrap();
    assert_eq!(back.to_dense_amplitudes(), m.to_dense_amplitudes());
    assert_eq!(back.policy, m.policy);
    assert!(DoubledMps::read_checkpoint(&mut &b"garbage!"[..]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engines_agree_on_random_points(
        lx in 0.0f64..1.0, lz in 0.0f64..1.0, qx in 0.0f64..0.5, qz in 0.0f64..0.5,
        th in -0.5f64..0.5, seed in any::<u64>(), periodic in any::<bool>(), l in 3usize..6,
    ) {
        let b = if periodic { Boundary::Periodic } else { Boundary::Open };
        compare(&params(l, b, InitialState::GhzWithReference, lx, lz, qx, qz, th), seed);
    }

    #[test]
    fn mps_stays_canonical(seed in any::<u64>(), lx in 0.0f64..1.0, qz in 0.0f64..0.5) {
        let p = params(6, Boundary::Open, InitialState::GhzPlus, lx, 0.6, 0.1, qz, 0.2);
        let (mut m, _) = run_trajectory_mps(&p, seed, TruncationPolicy::default()).unwrap();
        prop_assert!(m.canonical_error() < 1e-10);
        prop_assert!(m.bond_dims().iter().all(|&d| d <= m.policy.chi_max));
        prop_assert!(m.identity_overlap() > 0.0);
    }
}

#[test]
fn parity_breaking_channel_matches_dense() {
    let policy = TruncationPolicy::new(256, 0.0).unwrap();
    let mut d = DoubledState::init(InitialState::GhzWithReference, 4, Boundary::Open).unwrap();
    let mut m = DoubledMps::build(InitialState::GhzWithReference, 4, Boundary::Open, policy).unwrap();
    let zz = StepKernels::new(Basis::Zz, 0.4, 0.2, 0.3);
    let kick = kernels::doubled(&((kernels::identity(2) + Pauli::Z.matrix()) * C64::from(0.5)));
    let ops: [(Vec<usize>, Array2<C64>); 4] = [
        (vec![2, 3], zz.kernel(1).clone()),
        (vec![1], kick),
        (vec![3, 4], zz.kernel(-1).clone()),
        (vec![0, 1], zz.kernel(1).clone()),
    ];
    for (pos, k) in &ops {
        d.apply_kernel(pos, k).unwrap();
        m.apply_local_channel(pos[0], k).unwrap();
    }
    assert!(!m.is_graded());
    assert_same_state(&d, &m, 1e-10);
}

use repcode::dense::{run_trajectory_dense, DoubledState, Site};
use repcode::kernels::{dephasing_kernel, identity, rotation_kernel, Basis, Pauli, StepKernels};
use repcode::model::{Boundary, InitialState, SimParams};
use repcode::mps::{run_trajectory_mps, DoubledMps, TruncationPolicy};
use repcode::observables::{measure_all, Measure, Observable};

fn policy(chi: usize) -> TruncationPolicy {
    TruncationPolicy::new(chi, 0.0).unwrap()
}

fn build(kind: InitialState, l: usize) -> DoubledMps {
    DoubledMps::build(kind, l, Boundary::Open, policy(64)).unwrap()
}

fn params(l: usize, t: usize, lx: f64, lzz: f64, qx: f64, qzz: f64) -> SimParams {
    SimParams {
        lambda_x: lx,
        lambda_zz: lzz,
        q_x: qx,
        q_zz: qzz,
        theta_x: 0.0,
        theta_zz: 0.0,
        l,
        t,
        boundary: Boundary::Open,
        initial_state: InitialState::GhzWithReference,
        master_seed: 0,
    }
}

fn purity(m: &DoubledMps) -> f64 {
    let mut c = m.clone();
    let tr = c.identity_overlap();
    DoubledMps::state_overlap(m, m).unwrap() / (tr * tr)
}

#[test]
fn initial_states() {
    let up = build(InitialState::AllUp, 8);
    assert!(up.bond_dims().iter().all(|&d| d == 1));
    let ghz = build(InitialState::GhzPlus, 8);
    assert!((ghz.strong_expectation(&[(0, Pauli::Z), (7, Pauli::Z)]).unwrap() - 1.0).abs() < 1e-12);
    assert!((ghz.strong_expectation(&[(0, Pauli::Z), (4, Pauli::Z)]).unwrap() - 1.0).abs() < 1e-12);
    assert!((purity(&ghz) - 1.0).abs() < 1e-12);
    let mixed = build(InitialState::MaximallyMixed, 8);
    assert!((purity(&mixed) - 2f64.powi(-8)).abs() < 1e-15);
    for kind in [InitialState::AllUp, InitialState::GhzPlus, InitialState::MaximallyMixed, InitialState::GhzWithReference] {
        assert!((build(kind, 6).identity_overlap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(up.strong_expectation(&[(2, Pauli::X)]).unwrap(), 0.0);
}

#[test]
fn local_channels() {
    let mut m = build(InitialState::GhzWithReference, 4);
    let before = m.to_dense_amplitudes();
    let dims = m.bond_dims();
    m.apply_local_channel(2, &identity(4)).unwrap();
    m.apply_local_channel(1, &identity(16)).unwrap();
    assert_eq!(m.bond_dims(), dims);
    let diff = before.iter().zip(m.to_dense_amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-14);

    let mut up = build(InitialState::AllUp, 4);
    up.apply_local_channel(0, &rotation_kernel(Basis::X, 0.4)).unwrap();
    up.apply_local_channel(0, &dephasing_kernel(Basis::X, 0.2)).unwrap();
    assert!((up.identity_overlap() - 1.0).abs() < 1e-12);
    assert!(up.apply_local_channel(0, &identity(8)).is_err());
}

#[test]
fn identity_overlap_gives_born_weights() {
    for lambda in [0.2, 0.5, 0.9] {
        let mut d = DoubledState::init(InitialState::AllUp, 3, Boundary::Open).unwrap();
        let mut m = build(InitialState::AllUp, 3);
        for (k, theta) in [(0, 0.3), (1, 0.7), (2, 1.1)] {
            d.apply_rotation(k, Basis::X, theta).unwrap();
            m.apply_local_channel(k, &rotation_kernel(Basis::X, theta)).unwrap();
        }
        let kx = StepKernels::new(Basis::X, lambda, 0.0, 0.0);
        let (pp, _) = d.born_probability(1, Basis::X, lambda).unwrap();
        m.apply_local_channel(1, kx.kernel(1)).unwrap();
        assert!((m.identity_overlap() - pp).abs() < 1e-12);
    }
}

#[test]
fn renyi2_expectations_and_purities() {
    let zz = [(1, Pauli::Z), (3, Pauli::Z)];
    assert!((build(InitialState::MaximallyMixed, 5).renyi2_expectation(&zz).unwrap() - 1.0).abs() < 1e-12);
    assert!((build(InitialState::GhzPlus, 5).renyi2_expectation(&zz).unwrap() - 1.0).abs() < 1e-12);

    let ghz = build(InitialState::GhzPlus, 5);
    let all: Vec<usize> = (0..5).collect();
    assert!((ghz.renyi2_subsystem_purity(&all).unwrap() - 1.0).abs() < 1e-12);
    let fresh = build(InitialState::GhzWithReference, 4);
    assert!((fresh.renyi2_subsystem_purity(&[0]).unwrap() - 0.5).abs() < 1e-12);
    assert!(fresh.renyi2_subsystem_purity(&[]).is_err());
}

#[test]
fn product_plus_state_has_vanishing_renyi2_correlator() {
    // |+…+⟩ from |↑…↑⟩ by a projective X readout with all outcomes +1.
    let mut m = build(InitialState::AllUp, 4);
    let proj = StepKernels::new(Basis::X, 1.0, 0.0, 0.0);
    for k in 0..4 {
        m.apply_local_channel(k, proj.kernel(1)).unwrap();
    }
    assert!(m.renyi2_expectation(&[(0, Pauli::Z), (2, Pauli::Z)]).unwrap().abs() < 1e-12);
    assert!((m.renyi2_expectation(&[(2, Pauli::Z), (2, Pauli::Z)]).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn matches_dense_on_trajectories() {
    let p = params(6, 10, 0.3, 0.2, 0.1, 0.1);
    for seed in 0..3 {
        let (d, rd) = run_trajectory_dense(&p, seed).unwrap();
        let (m, rm) = run_trajectory_mps(&p, seed, policy(128)).unwrap();
        assert_eq!(rd.record, rm.record);
        assert!((d.purity().unwrap() - m.purity().unwrap()).abs() < 1e-8);
        let c = [(0, Pauli::Z), (4, Pauli::Z)];
        assert!((d.strong_expectation(&c).unwrap() - m.strong_expectation(&c).unwrap()).abs() < 1e-8);
        let half_d = d.subsystem_purity(&[Site::System(0), Site::System(1), Site::System(2)]).unwrap();
        let half_m = m.renyi2_subsystem_purity(&[m.pos(0), m.pos(1), m.pos(2)]).unwrap();
        assert!((half_d - half_m).abs() < 1e-8);
    }
}

#[test]
fn trivial_dynamics_keep_the_bond_dimension() {
    let p = params(6, 5, 0.0, 0.0, 0.2, 0.3);
    let start = DoubledMps::build(p.initial_state, 6, Boundary::Open, policy(64)).unwrap().bond_dims();
    let (m, _) = run_trajectory_mps(&p, 3, policy(64)).unwrap();
    assert_eq!(m.bond_dims(), start);
}

#[test]
fn pure_dynamics_stay_pure() {
    let p = params(8, 8, 0.5, 0.4, 0.0, 0.0);
    for seed in 0..3 {
        let (m, _) = run_trajectory_mps(&p, seed, policy(256)).unwrap();
        assert!((m.purity().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn tightening_truncation_never_hurts() {
    let p = params(6, 12, 0.4, 0.5, 0.1, 0.05);
    for seed in 0..3 {
        let (d, rd) = run_trajectory_dense(&p, seed).unwrap();
        let exact = measure_all(&d, false).unwrap();
        let mut last = f64::INFINITY;
        for chi in [4, 8, 16, 32, 64] {
            // Small bonds may exceed the per-gate discard limit; that is the documented failure.
            let Ok((m, rm)) = run_trajectory_mps(&p, seed, policy(chi)) else { continue };
            if rm.record != rd.record {
                continue;
            }
            let approx = measure_all(&m, false).unwrap();
            let dev = Observable::ALL
                .iter()
                .filter_map(|&o| Some((exact.get(o)? - approx.get(o)?).abs()))
                .fold(0.0, f64::max);
            assert!(dev <= last + 1e-12, "chi {chi}: {dev} after {last}");
            last = dev;
        }
        assert!(last < 1e-8);
    }
}

#[test]
fn reference_matrix_matches_dense() {
    let p = params(5, 6, 0.5, 0.3, 0.1, 0.2);
    let (d, _) = run_trajectory_dense(&p, 8).unwrap();
    let (m, _) = run_trajectory_mps(&p, 8, policy(128)).unwrap();
    let (a, b) = (d.reference_matrix().unwrap(), m.reference_matrix().unwrap());
    let diff = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (a[i][j] - b[i][j]).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-9);
}


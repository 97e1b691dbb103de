use ndarray::Array2;
use num_complex::Complex64 as C64;
use repcode::dense::{enumerate_trajectories, evolve_channel, run_trajectory_dense, DoubledState};
use repcode::identities::{closed_form_check, cq_identities};
use repcode::kernels::{kron, Pauli};
use repcode::model::{derive_trajectory_seed, Boundary, InitialState, SimParams};
use repcode::observables::{
    average_over_trajectories, code_spectrum_from_defects, coherent_information, defect_free_energies, disorder_susceptibilities,
    edwards_anderson_susceptibility, info_from_defects, measure_all, reference_entropy, renyi2_susceptibility, string_sites,
    AverageMode, CoherentInfo, DefectFreeEnergies, Observable, ObservableSet, DEFECT_OVERFLOW,
};

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

fn plus_product(l: usize, boundary: Boundary) -> DoubledState {
    let dim = 1 << l;
    let rho = Array2::from_elem((dim, dim), C64::from(1.0 / dim as f64));
    DoubledState::from_density_matrix(&rho, l, false, boundary).unwrap()
}

fn init(kind: InitialState, l: usize, boundary: Boundary) -> DoubledState {
    DoubledState::init(kind, l, boundary).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol
}

/// `(1/L) Σ_{ij} tr(ρ X_S)²` with the strings built as explicit matrices.
fn brute_d_ea(st: &DoubledState) -> f64 {
    let rho = st.density_matrix();
    let l = st.l;
    let mut total = 0.0;
    for i in 0..l {
        for j in 0..l {
            let sites = string_sites(i, j, l, st.boundary);
            let op = (0..l).fold(Array2::eye(1), |acc, k| {
                kron(&acc, &if sites.contains(&k) { Pauli::X.matrix() } else { Pauli::I.matrix() })
            });
            total += rho.dot(&op).diag().sum().re.powi(2);
        }
    }
    total / l as f64
}

#[test]
fn susceptibilities_of_reference_states() {
    for l in [2, 3, 5] {
        let ghz = init(InitialState::GhzPlus, l, Boundary::Open);
        let plus = plus_product(l, Boundary::Open);
        let mixed = init(InitialState::MaximallyMixed, l, Boundary::Open);
        let lf = l as f64;
        assert!(close(edwards_anderson_susceptibility(&ghz).unwrap(), lf, 1e-12));
        assert!(close(edwards_anderson_susceptibility(&plus).unwrap(), 1.0, 1e-12));
        assert!(close(edwards_anderson_susceptibility(&mixed).unwrap(), 1.0, 1e-12));
        assert!(close(renyi2_susceptibility(&mixed).unwrap(), lf, 1e-12));
        assert!(close(renyi2_susceptibility(&plus).unwrap(), 1.0, 1e-12));
        assert!(close(renyi2_susceptibility(&ghz).unwrap(), lf, 1e-12));
        let (d_ea, _) = disorder_susceptibilities(&plus).unwrap();
        assert!(close(d_ea, lf, 1e-12));
        let (_, d_2) = disorder_susceptibilities(&mixed).unwrap();
        assert!(close(d_2, lf, 1e-12));
    }
}

#[test]
fn disorder_strings_match_explicit_operators() {
    for bc in [Boundary::Open, Boundary::Periodic] {
        let ghz = init(InitialState::GhzPlus, 3, bc);
        let (d_ea, _) = disorder_susceptibilities(&ghz).unwrap();
        assert!(close(d_ea, brute_d_ea(&ghz), 1e-12));
        let mut p = params(3, 3, 0.5, 0.4, 0.1, 0.2);
        p.boundary = bc;
        p.initial_state = InitialState::GhzPlus;
        for seed in 0..4 {
            let (st, _) = run_trajectory_dense(&p, seed).unwrap();
            assert!(close(disorder_susceptibilities(&st).unwrap().0, brute_d_ea(&st), 1e-12));
        }
    }
    // Open GHZ: no string of fewer than L sites has a nonzero expectation.
    assert!(close(brute_d_ea(&init(InitialState::GhzPlus, 3, Boundary::Open)), 1.0, 1e-14));
}

#[test]
fn reference_entropy_examples() {
    let fresh = init(InitialState::GhzWithReference, 2, Boundary::Open);
    assert!(close(reference_entropy(&fresh).unwrap(), 1.0, 1e-12));
    for variant in [CoherentInfo::Exact, CoherentInfo::Renyi2] {
        assert!(close(coherent_information(&fresh, variant).unwrap(), 1.0, 1e-12));
    }
    let no_ref = init(InitialState::GhzPlus, 2, Boundary::Open);
    assert!(reference_entropy(&no_ref).is_err());

    let (measured, _) = run_trajectory_dense(&params(2, 1, 1.0, 0.0, 0.0, 0.0), 4).unwrap();
    assert!(reference_entropy(&measured).unwrap() < 1e-12);
    let (dephased, _) = run_trajectory_dense(&params(2, 2, 0.0, 0.0, 0.5, 0.0), 4).unwrap();
    assert!(close(reference_entropy(&dephased).unwrap(), 1.0, 1e-12));
}

#[test]
fn zz_dephasing_destroys_the_coherent_information() {
    let p = params(2, 6, 0.0, 0.0, 0.5, 0.5);
    let st = evolve_channel(&p).unwrap();
    assert!(coherent_information(&st, CoherentInfo::Exact).unwrap().abs() < 1e-9);
    assert!(close(reference_entropy(&st).unwrap(), 1.0, 1e-12));
}

#[test]
fn pure_trajectories_have_equal_reference_entropy_and_coherent_information() {
    let p = params(3, 4, 0.6, 0.5, 0.0, 0.0);
    for seed in 0..10 {
        let (st, _) = run_trajectory_dense(&p, seed).unwrap();
        assert!(close(st.purity().unwrap(), 1.0, 1e-9));
        let s_r = reference_entropy(&st).unwrap();
        assert!(close(coherent_information(&st, CoherentInfo::Exact).unwrap(), s_r, 1e-9));
        let o = measure_all(&st, true).unwrap();
        assert!(o.kappa_ea.unwrap() <= o.kappa_2.unwrap() + 1e-9);
    }
}

#[test]
fn defect_examples() {
    let d = defect_free_energies(&Array2::from_elem((2, 2), C64::from(0.5))).unwrap();
    assert!(d.delta_f1.norm() < 1e-15 && d.delta_f2.abs() < 1e-15);
    let mixed = Array2::from_diag(&ndarray::arr1(&[C64::from(0.5); 2]));
    let d = defect_free_energies(&mixed).unwrap();
    assert_eq!(d.delta_f1.re, DEFECT_OVERFLOW);
    assert!(d.delta_f2.abs() < 1e-15);
    let m = ndarray::arr2(&[[0.9, 0.05], [0.05, 0.1]]).mapv(C64::from);
    let d = defect_free_energies(&m).unwrap();
    assert!((d.delta_f1 - C64::from(-(1.0f64 / 18.0).ln())).norm() < 1e-14);
    assert!(close(d.delta_f2, -(1.0f64 / 9.0).ln(), 1e-14));
}

#[test]
fn defect_spectrum_limits() {
    let zero = DefectFreeEnergies { delta_f1: C64::from(0.0), delta_f2: 0.0 };
    let (qr, _) = code_spectrum_from_defects(&zero);
    assert!(close(qr[0], 1.0, 1e-15) && qr[1].abs() < 1e-15);
    let phase2 = DefectFreeEnergies { delta_f1: C64::from(DEFECT_OVERFLOW), delta_f2: 0.0 };
    let (qr, q) = code_spectrum_from_defects(&phase2);
    assert!(qr.iter().chain(&q).all(|&v| close(v, 0.5, 1e-15)));

    let (s_r, i_c) = info_from_defects(&zero);
    assert!(close(s_r, 0.0, 1e-12) && close(i_c, 0.0, 1e-12));
    let (s_r, i_c) = info_from_defects(&phase2);
    assert!(close(s_r, 1.0, 1e-12) && close(i_c, 0.0, 1e-12));
    let phase1 = DefectFreeEnergies { delta_f1: C64::from(DEFECT_OVERFLOW), delta_f2: DEFECT_OVERFLOW };
    let (s_r, i_c) = info_from_defects(&phase1);
    assert!(close(s_r, 1.0, 1e-12) && close(i_c, 1.0, 1e-12));
}

#[test]
fn closed_forms_match_diagonalization_on_trajectories() {
    let points = [(0.1, 0.6, 0.05, 0.05), (0.5, 0.5, 0.2, 0.1), (0.9, 0.2, 0.05, 0.3), (0.35, 0.35, 0.0, 0.0)];
    for (k, &(lx, lzz, qx, qzz)) in points.iter().enumerate() {
        let p = params(4, 6, lx, lzz, qx, qzz);
        for i in 0..10u64 {
            let seed = derive_trajectory_seed(k as u64, i);
            let (st, _) = run_trajectory_dense(&p, seed).unwrap();
            let c = closed_form_check(&st, seed ^ 1).unwrap();
            assert!(c.spectrum < 1e-10 && c.information < 1e-9, "{p:?} {c:?}");
        }
    }
}

#[test]
fn classical_quantum_identities() {
    for (lx, lzz, qx, qzz) in [(0.3, 0.6, 0.1, 0.2), (0.8, 0.2, 0.0, 0.3), (0.5, 0.5, 0.0, 0.0)] {
        for t in [1, 2] {
            let c = cq_identities(&params(2, t, lx, lzz, qx, qzz)).unwrap();
            assert!(c.residual() < 1e-9, "{c:?}");
        }
    }
    let mut no_ref = params(2, 1, 0.3, 0.3, 0.0, 0.0);
    no_ref.initial_state = InitialState::GhzPlus;
    assert!(cq_identities(&no_ref).is_err());
}

#[test]
fn zero_reference_entropy_means_a_determined_logical_charge() {
    for (lx, lzz, qx) in [(0.6, 0.4, 0.1), (1.0, 0.3, 0.0), (0.2, 0.9, 0.3)] {
        for (_, st) in enumerate_trajectories(&params(2, 2, lx, lzz, qx, 0.1)).unwrap() {
            if st.trace().re < 1e-14 {
                continue;
            }
            let r = st.reference_matrix().unwrap();
            // Pr(±) of the logical X̄ outcome, read off the reference in the X basis.
            let p_plus = 0.5 + r[0][1].re;
            let s_r = reference_entropy(&st).unwrap();
            let determined = p_plus.min(1.0 - p_plus) < 1e-9;
            assert_eq!(s_r < 1e-7, determined, "{s_r} {p_plus}");
        }
    }
}

#[test]
fn exhaustive_average_equals_channel() {
    let p = params(2, 1, 0.4, 0.7, 0.1, 0.2);
    let all = enumerate_trajectories(&p).unwrap();
    let zz = [(0, Pauli::Z), (1, Pauli::Z)];
    let items: Vec<ObservableSet> = all
        .iter()
        .map(|(_, st)| ObservableSet { kappa_ea: Some(st.strong_expectation(&zz).unwrap()), ..Default::default() })
        .collect();
    let w: Vec<f64> = all.iter().map(|(r, _)| r.log_born_weight.unwrap().exp()).collect();
    let avg = average_over_trajectories(&items, AverageMode::Exhaustive(&w)).unwrap();
    let chan = evolve_channel(&p).unwrap().strong_expectation(&zz).unwrap();
    assert!(close(avg[&Observable::KappaEa].mean, chan, 1e-12));
}

#[test]
fn sampled_average_is_consistent_with_exhaustive() {
    let p = params(2, 2, 0.4, 0.7, 0.1, 0.2);
    let all = enumerate_trajectories(&p).unwrap();
    let w: Vec<f64> = all.iter().map(|(r, _)| r.log_born_weight.unwrap().exp()).collect();
    let exact_items: Vec<ObservableSet> = all.iter().map(|(_, st)| measure_all(st, false).unwrap()).collect();
    let exact = average_over_trajectories(&exact_items, AverageMode::Exhaustive(&w)).unwrap();
    let sampled_items: Vec<ObservableSet> = (0..10_000)
        .map(|i| measure_all(&run_trajectory_dense(&p, derive_trajectory_seed(7, i)).unwrap().0, false).unwrap())
        .collect();
    let sampled = average_over_trajectories(&sampled_items, AverageMode::Sampled).unwrap();
    for (o, s) in &sampled {
        let e = exact[o].mean;
        assert!((s.mean - e).abs() <= 3.0 * s.stderr.max(1e-12), "{} {} {} {}", o.name(), s.mean, e, s.stderr);
    }
}

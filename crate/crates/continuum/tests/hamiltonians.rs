use continuum::hamiltonian::{annihilator, build_hamiltonian, HamiltonianKind, HamiltonianSpec};
use continuum::ops::{eigenvalues, hermiticity_error, Matrix};
use continuum::spectrum::{spectral_match, spectrum, Sector};
use continuum::symmetry::{charge_residual, strong_symmetry_residual, su2_residual, total_spin_squared};
use continuum::xxz::{xxz_params_from_circuit, CircuitKind, XxzParams};
use continuum::ContinuumError;
use num_complex::Complex64 as C64;
use repcode::model::Boundary;

const OPEN: Boundary = Boundary::Open;

#[test]
fn decoupled_copies_give_pair_sums() {
    let lam = 0.7;
    let h1 = build_hamiltonian(&HamiltonianSpec::h1(lam, lam, 0.0, 0.0, 3, OPEN)).unwrap();
    // One transverse-field Ising copy: −λ Σ X − λ Σ ZZ.
    let single = build_hamiltonian(&HamiltonianSpec::tfim(lam, lam / 2.0, 3, OPEN)).unwrap();
    let e = eigenvalues(&single).unwrap();
    let mut sums: Vec<f64> = e.iter().flat_map(|a| e.iter().map(move |b| a + b)).collect();
    sums.sort_by(f64::total_cmp);
    let full = eigenvalues(&h1).unwrap();
    let dev = full.iter().zip(&sums).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev:e}");
}

#[test]
fn replica_hamiltonian_couples_the_species_without_dephasing() {
    let lam = 0.6;
    let h2 = build_hamiltonian(&HamiltonianSpec::h2(lam, lam, 0.0, 0.0, 3, OPEN)).unwrap();
    let l2 = lam * lam;
    let same = build_hamiltonian(&HamiltonianSpec::h1(l2, l2, l2, l2, 3, OPEN)).unwrap();
    let uncoupled = build_hamiltonian(&HamiltonianSpec::h1(l2, l2, 0.0, 0.0, 3, OPEN)).unwrap();
    assert!((&h2 - &same).iter().all(|v| v.norm() < 1e-15));
    assert!((&h2 - &uncoupled).iter().any(|v| v.norm() > 0.1));
}

#[test]
fn xxx_point_has_su2_symmetry() {
    let p = XxzParams { j: 1.0, delta1: 0.0, delta2: 0.0, k: 1.0 };
    for bc in [Boundary::Open, Boundary::Periodic] {
        let h = build_hamiltonian(&HamiltonianSpec::xxz(p, 3, bc)).unwrap();
        assert!(su2_residual(&h, 6) < 1e-10);
    }
    let off = XxzParams { k: 1.4, ..p };
    let h = build_hamiltonian(&HamiltonianSpec::xxz(off, 3, OPEN)).unwrap();
    assert!(su2_residual(&h, 6) > 0.1);
    assert!(charge_residual(&h, 6) < 1e-12);
}

#[test]
fn spin_casimir_has_the_right_spectrum() {
    let ev = eigenvalues(&total_spin_squared(3)).unwrap();
    let expected = [0.75, 0.75, 0.75, 0.75, 3.75, 3.75, 3.75, 3.75];
    assert!(ev.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn forced_parameters_follow_the_closed_forms() {
    let (lam, q) = (0.4, 0.15);
    let p = xxz_params_from_circuit(CircuitKind::Forced, lam, lam, q, q).unwrap();
    let (d1, d2, k) = p.ratios();
    assert!(d1.abs() < 1e-15 && d2.abs() < 1e-15 && (k - q / lam).abs() < 1e-14);
    let xxx = xxz_params_from_circuit(CircuitKind::Forced, lam, lam, lam, lam).unwrap();
    assert!((xxx.k - xxx.j).abs() < 1e-15);

    let (lx, lzz, qx, qzz) = (0.7, 0.2, 0.3, 0.05);
    let (d1, d2, k) = xxz_params_from_circuit(CircuitKind::Forced, lx, lzz, qx, qzz).unwrap().ratios();
    assert!((d1 - (lx - lzz) / (lx + lzz)).abs() < 1e-14);
    assert!((d2 - (qx - qzz) / (lx + lzz)).abs() < 1e-14);
    assert!((k - (qx + qzz) / (lx + lzz)).abs() < 1e-14);
}

#[test]
fn replica_parameters_follow_the_closed_forms() {
    let p = xxz_params_from_circuit(CircuitKind::Replica2, 0.5, 0.5, 0.0, 0.0).unwrap();
    let (d1, d2, k) = p.ratios();
    assert!(d1.abs() < 1e-15 && d2.abs() < 1e-15 && (k - 1.0).abs() < 1e-15);

    let (lx, lzz, qx, qzz) = (0.7, 0.2, 0.3, 0.05);
    let s = lx * lx + lzz * lzz;
    let (d1, d2, k) = xxz_params_from_circuit(CircuitKind::Replica2, lx, lzz, qx, qzz).unwrap().ratios();
    assert!((d1 - (lx * lx - lzz * lzz) / s).abs() < 1e-14);
    assert!((d2 - d1 - (qx - qzz) / s).abs() < 1e-14);
    assert!((k - 1.0 - (qx + qzz) / s).abs() < 1e-14);

    for (lx, lzz) in [(0.1, 0.9), (0.5, 0.5), (1.0, 0.0)] {
        for q in [0.0, 0.1, 0.4] {
            let (_, _, k) = xxz_params_from_circuit(CircuitKind::Replica2, lx, lzz, q, q / 2.0).unwrap().ratios();
            assert!(k >= 1.0);
        }
    }
    assert_eq!(
        xxz_params_from_circuit(CircuitKind::Forced, 0.0, 0.0, 0.1, 0.1),
        Err(ContinuumError::DegenerateDenominator)
    );
}

#[test]
fn forced_model_matches_the_staggered_chain() {
    for (lx, lzz, qx, qzz) in [(0.5, 0.5, 0.2, 0.2), (0.8, 0.3, 0.25, 0.1), (0.2, 0.9, 0.0, 0.4)] {
        let h1 = HamiltonianSpec::h1(lx, lzz, qx, qzz, 4, OPEN);
        let xxz = HamiltonianSpec::xxz(xxz_params_from_circuit(CircuitKind::Forced, lx, lzz, qx, qzz).unwrap(), 4, OPEN);
        assert!(spectral_match(&h1, &xxz, None).unwrap() < 1e-9);
        for (ket, bra) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let d = spectral_match(&h1, &xxz, Some(Sector::StrongParity { ket, bra })).unwrap();
            assert!(d < 1e-9, "{ket} {bra}: {d:e}");
        }
    }
}

#[test]
fn sector_correspondence_accounts_for_odd_chains() {
    let h1 = HamiltonianSpec::h1(0.8, 0.3, 0.25, 0.1, 3, OPEN);
    let xxz = HamiltonianSpec::xxz(xxz_params_from_circuit(CircuitKind::Forced, 0.8, 0.3, 0.25, 0.1).unwrap(), 3, OPEN);
    for (ket, bra) in [(1, 1), (1, -1)] {
        assert!(spectral_match(&h1, &xxz, Some(Sector::StrongParity { ket, bra })).unwrap() < 1e-9);
    }
    let mismatched: Vec<f64> = spectrum(&h1, Some(Sector::StrongParity { ket: 1, bra: 1 })).unwrap();
    let other = spectrum(&h1, Some(Sector::StrongParity { ket: -1, bra: -1 })).unwrap();
    assert!(mismatched.iter().zip(&other).any(|(a, b)| (a - b).abs() > 1e-3));
}

#[test]
fn replica_model_matches_its_staggered_chain() {
    let (lx, lzz, q) = (0.6, 0.4, 0.1);
    let h2 = HamiltonianSpec::h2(lx, lzz, q, q, 4, OPEN);
    let xxz = HamiltonianSpec::xxz(xxz_params_from_circuit(CircuitKind::Replica2, lx, lzz, q, q).unwrap(), 4, OPEN);
    assert!(spectral_match(&h2, &xxz, Some(Sector::StrongParity { ket: 1, bra: 1 })).unwrap() < 1e-9);
}

#[test]
fn forced_model_matches_the_fermion_chain() {
    for (lx, lzz, qx, qzz) in [(0.5, 0.5, 0.2, 0.2), (0.8, 0.3, 0.25, 0.1)] {
        let h1 = HamiltonianSpec::h1(lx, lzz, qx, qzz, 4, OPEN);
        let f = HamiltonianSpec::forced_fermion(lx, lzz, qx, qzz, None, 4);
        assert!(spectral_match(&h1, &f, None).unwrap() < 1e-9);
        assert!(spectral_match(&h1, &f, Some(Sector::StrongParity { ket: -1, bra: 1 })).unwrap() < 1e-9);
    }
}

#[test]
fn fermion_and_xxz_share_magnetization_sectors() {
    let (lx, lzz, qx, qzz) = (0.7, 0.35, 0.3, 0.1);
    let f = HamiltonianSpec::forced_fermion(lx, lzz, qx, qzz, None, 3);
    let xxz = HamiltonianSpec::xxz(xxz_params_from_circuit(CircuitKind::Forced, lx, lzz, qx, qzz).unwrap(), 3, OPEN);
    for m in [-4, -2, 0, 2, 6] {
        assert!(spectral_match(&f, &xxz, Some(Sector::Magnetization(m))).unwrap() < 1e-9);
    }
}

#[test]
fn identical_specs_match_exactly() {
    let a = HamiltonianSpec::h1(0.3, 0.6, 0.1, 0.2, 3, Boundary::Periodic);
    assert_eq!(spectral_match(&a, &a, None).unwrap(), 0.0);
}

#[test]
fn mismatched_sizes_are_rejected() {
    let a = HamiltonianSpec::h1(0.3, 0.6, 0.1, 0.2, 3, OPEN);
    let b = HamiltonianSpec::h1(0.3, 0.6, 0.1, 0.2, 2, OPEN);
    assert!(matches!(spectral_match(&a, &b, None), Err(ContinuumError::DimensionMismatch(..))));
}

#[test]
fn fermion_operators_anticommute() {
    let n = 4;
    let a: Vec<Matrix> = (0..n)
        .map(|k| {
            let mut m = Matrix::zeros((16, 16));
            annihilator(n, k).add_to(&mut m, C64::from(1.0));
            m
        })
        .collect();
    let dag = |m: &Matrix| m.t().mapv(|z| z.conj());
    for i in 0..n {
        for j in 0..n {
            let anti = a[i].dot(&dag(&a[j])) + dag(&a[j]).dot(&a[i]);
            let expected = if i == j { Matrix::eye(16) } else { Matrix::zeros((16, 16)) };
            assert!((anti - expected).iter().all(|v| v.norm() < 1e-15));
            let aa = a[i].dot(&a[j]) + a[j].dot(&a[i]);
            assert!(aa.iter().all(|v| v.norm() < 1e-15));
        }
    }
}

#[test]
fn coherent_fermion_term_is_flagged_and_breaks_charge() {
    let spec = HamiltonianSpec::forced_fermion(0.5, 0.4, 0.1, 0.2, Some((0.2, 0.1)), 3);
    assert!(!spec.is_hermitian());
    let h = build_hamiltonian(&spec).unwrap();
    assert!(hermiticity_error(&h) > 0.1);
    let flipped = build_hamiltonian(&HamiltonianSpec::forced_fermion(0.5, 0.4, 0.1, 0.2, Some((-0.2, -0.1)), 3)).unwrap();
    assert!((h.t().mapv(|z| z.conj()) - flipped).iter().all(|v| v.norm() < 1e-14));
    assert!(charge_residual(&h, 6) > 0.1);
    assert!(spectrum(&spec, None).is_err());
}

#[test]
fn ashkin_teller_models_have_strong_parities() {
    for kind in [HamiltonianKind::AshkinTellerH1, HamiltonianKind::AshkinTellerH2] {
        for bc in [Boundary::Open, Boundary::Periodic] {
            let spec = HamiltonianSpec::ashkin_teller(kind, 0.4, 0.7, 0.2, 0.1, 3, bc);
            assert!(strong_symmetry_residual(&spec).unwrap() < 1e-12);
        }
    }
}

#[test]
fn specs_are_validated() {
    let mut spec = HamiltonianSpec::h1(0.3, 0.6, 0.1, 0.2, 3, OPEN);
    spec.couplings.insert("lamda_x".into(), continuum::Coupling::Scalar(0.1));
    assert_eq!(build_hamiltonian(&spec), Err(ContinuumError::UnknownCoupling("lamda_x".into())));
    let mut spec = HamiltonianSpec::h1(0.3, 0.6, 0.1, 0.2, 3, OPEN);
    spec.couplings.remove("q_zz");
    assert_eq!(build_hamiltonian(&spec), Err(ContinuumError::MissingCoupling("q_zz".into())));
    assert_eq!(
        build_hamiltonian(&HamiltonianSpec::h1(0.3, 0.6, 0.1, 0.2, 7, OPEN)),
        Err(ContinuumError::MemoryBudget(14))
    );
    let short = HamiltonianSpec::fermion(vec![1.0; 3], vec![0.0; 5], None, 3);
    assert!(matches!(build_hamiltonian(&short), Err(ContinuumError::CouplingShape(_))));
    let mut periodic = HamiltonianSpec::forced_fermion(0.5, 0.4, 0.1, 0.2, None, 3);
    periodic.boundary = Boundary::Periodic;
    assert!(build_hamiltonian(&periodic).is_err());
}

#[test]
fn specs_round_trip_through_json() {
    let spec = HamiltonianSpec::forced_fermion(0.5, 0.4, 0.1, 0.2, Some((0.2, 0.0)), 2);
    let text = serde_json::to_string(&spec).unwrap();
    let back: HamiltonianSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
    let cfg = r#"{"kind": "staggered_xxz", "couplings": {"j": 1, "delta1": 0.2, "delta2": 0, "k": 0.5}, "L": 2}"#;
    let parsed: HamiltonianSpec = serde_json::from_str(cfg).unwrap();
    assert_eq!(parsed.boundary, OPEN);
    assert!(build_hamiltonian(&parsed).is_ok());
    assert!(serde_json::from_str::<HamiltonianSpec>(r#"{"kind": "tfim_q1", "couplings": {}, "L": 2, "bc": 1}"#).is_err());
}

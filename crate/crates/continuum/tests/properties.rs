use continuum::hamiltonian::{build_hamiltonian, HamiltonianKind, HamiltonianSpec};
use continuum::ops::hermiticity_error;
use continuum::symmetry::{charge_residual, strong_symmetry_residual};
use continuum::XxzParams;
use proptest::prelude::*;
use repcode::model::Boundary;

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Open), Just(Boundary::Periodic)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ashkin_teller_models_are_hermitian_and_strongly_symmetric(
        lx in 0.0..1.0f64, lzz in 0.0..1.0f64, qx in 0.0..0.5f64, qzz in 0.0..0.5f64,
        replica in any::<bool>(), l in 2usize..4, bc in boundary(),
    ) {
        let bc = if l < 3 { Boundary::Open } else { bc };
        let kind = if replica { HamiltonianKind::AshkinTellerH2 } else { HamiltonianKind::AshkinTellerH1 };
        let spec = HamiltonianSpec::ashkin_teller(kind, lx, lzz, qx, qzz, l, bc);
        let h = build_hamiltonian(&spec).unwrap();
        prop_assert!(hermiticity_error(&h) < 1e-12);
        prop_assert!(strong_symmetry_residual(&spec).unwrap() < 1e-12);
    }

    #[test]
    fn xxz_chains_are_hermitian_and_charge_conserving(
        j in -1.0..1.0f64, d1 in -1.0..1.0f64, d2 in -1.0..1.0f64, k in -1.0..2.0f64,
        l in 1usize..4, bc in boundary(),
    ) {
        let h = build_hamiltonian(&HamiltonianSpec::xxz(XxzParams { j, delta1: d1, delta2: d2, k }, l, bc)).unwrap();
        prop_assert!(hermiticity_error(&h) < 1e-12);
        prop_assert!(charge_residual(&h, 2 * l) < 1e-12);
    }

    #[test]
    fn coherent_fermion_adjoint_flips_the_angles(
        j in proptest::collection::vec(-1.0..1.0f64, 3),
        k in proptest::collection::vec(-1.0..1.0f64, 3),
        theta in proptest::collection::vec(-1.0..1.0f64, 3),
    ) {
        let h = build_hamiltonian(&HamiltonianSpec::fermion(j.clone(), k.clone(), Some(theta.clone()), 2)).unwrap();
        let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
        let flipped = build_hamiltonian(&HamiltonianSpec::fermion(j.clone(), k.clone(), Some(neg), 2)).unwrap();
        let adj = h.t().mapv(|z| z.conj());
        prop_assert!((adj - flipped).iter().all(|v| v.norm() < 1e-13));
        let plain = build_hamiltonian(&HamiltonianSpec::fermion(j, k, None, 2)).unwrap();
        prop_assert!(hermiticity_error(&plain) < 1e-12);
        prop_assert!(charge_residual(&plain, 4) < 1e-12);
    }
}

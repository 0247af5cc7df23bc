use dynstrength::harness::random_local;
use dynstrength::matcore::gates::swap;
use dynstrength::matcore::linalg::hs_norm;
use dynstrength::matcore::random::{haar_unitary_with, rng};
use dynstrength::matcore::Partition;
use dynstrength::metric::k_hs_two_qubit;
use proptest::prelude::*;

const QUBITS: Partition = Partition::new(2, 2);

fn k_hs(u: &dynstrength::matcore::ComplexMatrix) -> f64 {
    k_hs_two_qubit(u).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn continuity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (u, v) = (dynstrength::harness::random_two_qubit(&mut r), haar_unitary_with(4, &mut r));
        prop_assert!((k_hs(&u) - k_hs(&v)).abs() <= hs_norm(&(&u - &v)) + 1e-9);
    }

    #[test]
    fn chaining(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (u, v) = (dynstrength::harness::random_two_qubit(&mut r), dynstrength::harness::random_two_qubit(&mut r));
        prop_assert!(k_hs(&(&u * &v)) <= k_hs(&u) + k_hs(&v) + 1e-6);
    }

    #[test]
    fn exchange_symmetry(seed in any::<u64>()) {
        let u = haar_unitary_with(4, &mut rng(seed));
        prop_assert!((k_hs(&(swap() * &u * swap())) - k_hs(&u)).abs() <= 1e-8);
    }

    #[test]
    fn local_unitary_invariance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = dynstrength::harness::random_two_qubit(&mut r);
        let dressed = random_local(QUBITS, &mut r) * &u * random_local(QUBITS, &mut r);
        prop_assert!((k_hs(&dressed) - k_hs(&u)).abs() <= 1e-8);
    }
}

#[test]
fn bounded_on_haar_samples() {
    let mut r = rng(99);
    let worst = (0..1000).map(|_| k_hs(&haar_unitary_with(4, &mut r))).fold(0.0, f64::max);
    assert!(worst <= 4.0, "{worst}");
}

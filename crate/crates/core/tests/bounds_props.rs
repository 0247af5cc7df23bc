use dynstrength::bounds::{gate_count_bound, log_rank_bound, BooleanFunction};
use dynstrength::matcore::gates::{cnot, swap};
use dynstrength::matcore::Partition;
use dynstrength::schmidt::k_har;
use proptest::prelude::*;

fn table(bits_a: usize, bits_b: usize) -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    prop::collection::vec(any::<bool>(), 1 << (bits_a + bits_b)).prop_map(move |t| (bits_a, bits_b, t))
}

fn any_table() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(a, b)| table(a, b))
}

fn function(a: usize, b: usize, t: &[bool]) -> BooleanFunction {
    BooleanFunction::from_fn(a, b, |x, y| t[(x << b) | y]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_equals_schmidt_number((a, b, t) in any_table()) {
        let r = log_rank_bound(&function(a, b, &t)).unwrap();
        prop_assert_eq!(r.rank, r.schmidt_number);
        prop_assert!(r.rank <= 1 << a.min(b));
        prop_assert!((r.value - (r.rank as f64).log2() / 4.0).abs() <= 1e-12);
    }

    /// Appending a constant column raises the rank by at most one.
    #[test]
    fn constant_column_adds_at_most_one((a, b, t) in (1usize..=3, 1usize..=3).prop_flat_map(|(a, b)| table(a, b)), value in any::<bool>()) {
        let base = log_rank_bound(&function(a, b, &t)).unwrap().rank;
        // One more bit on ℬ: the upper half of its range is a constant column block.
        let wider = BooleanFunction::from_fn(a, b + 1, |x, y| if y < 1 << b { t[(x << b) | y] } else { value }).unwrap();
        let rank = log_rank_bound(&wider).unwrap().rank;
        prop_assert!(rank >= base && rank <= base + 1, "{base} → {rank}");
    }
}

#[test]
fn swap_from_cnot_needs_two() {
    let q = Partition::qubits();
    assert_eq!(gate_count_bound(k_har(&swap(), q).unwrap(), k_har(&cnot(), q).unwrap()).unwrap(), 2);
}

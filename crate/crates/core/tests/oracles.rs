//! Exact identities and sampler invariants through the public API.

use bgwlab::offspring::{build_critical_tail_law, build_head_only_law, toy_law};
use bgwlab::oracle::{run_oracle, OracleCheck};
use bgwlab::rng::rng_from_seed;
use bgwlab::scaling::compute_constants;
use bgwlab::tree::{decode_lukasiewicz, encode_lukasiewicz, luka_stats, sample_tree_tail, tree_stats, TailStrategy};
use bgwlab::walk::exact::{dtv_local_by_counts, FiniteStepLaw};
use bgwlab::walk::{build_z_n, vervaat, WalkPath};
use proptest::prelude::*;

#[test]
fn exact_suite_on_toy_law() {
    for c in OracleCheck::ALL {
        let o = run_oracle(c, &toy_law(), 12, 3).unwrap();
        assert!(o.pass, "{c}: {o:?}");
    }
}

#[test]
fn exact_suite_on_another_finite_law() {
    let law = build_head_only_law(&[0.5, 0.2, 0.15, 0.1, 0.05]).unwrap();
    for c in [OracleCheck::Kemperman, OracleCheck::Duality, OracleCheck::InPmf, OracleCheck::WienerHopf] {
        let o = run_oracle(c, &law, 10, 3).unwrap();
        assert!(o.pass, "{c}: {o:?}");
    }
    let o = run_oracle(OracleCheck::Vervaat, &law, 8, 3).unwrap();
    assert!(o.pass, "{o:?}");
}

#[test]
fn toy_local_tv_frozen() {
    let f = FiniteStepLaw::exact(&toy_law().steps()).unwrap();
    let got: Vec<f64> = [4, 6, 8].iter().map(|&n| dtv_local_by_counts(&f, n).unwrap()).collect();
    for (g, want) in got.iter().zip([0.3959, 0.4718, 0.5325]) {
        assert!((g - want).abs() < 5e-5, "{got:?}");
    }
}

#[test]
fn tail_trees_meet_their_conditioning() {
    let steps = build_critical_tail_law(1.0 / 3.0, 3).unwrap().steps();
    let k = compute_constants(&steps, 500).unwrap();
    let mut rng = rng_from_seed(4);
    for _ in 0..50 {
        let d = sample_tree_tail(&steps, &k, TailStrategy::Rejection, u64::MAX, &mut rng).unwrap();
        assert!(d.tree.size() >= 500);
        let d = sample_tree_tail(&steps, &k, TailStrategy::VecZ, 1 << 32, &mut rng).unwrap();
        assert!(d.tree.child_counts().iter().any(|&c| c as f64 >= k.abs_b_n()));
    }
}

fn skip_free_bridge() -> impl Strategy<Value = Vec<i64>> {
    // Child counts summing to n - 1, placed by dropping n - 1 balls in n boxes.
    (1usize..40).prop_flat_map(|n| prop::collection::vec(0..n, n - 1).prop_map(move |balls| {
        let mut counts = vec![0i64; n];
        for b in balls {
            counts[b] += 1;
        }
        counts.into_iter().map(|c| c - 1).collect()
    }))
}

proptest! {
    #[test]
    fn vervaat_of_bridge_codes_a_tree(incs in skip_free_bridge()) {
        let path = vervaat(&WalkPath::from_increments(&incs).unwrap());
        prop_assert_eq!(path.last(), -1);
        prop_assert!(path.is_excursion());
        let tree = decode_lukasiewicz(&path).unwrap();
        prop_assert_eq!(tree.size(), incs.len());
        prop_assert_eq!(encode_lukasiewicz(&tree), path.clone());
        let s = tree_stats(&tree).unwrap();
        let l = luka_stats(&path);
        prop_assert_eq!(s.h_star, l.h_star);
        prop_assert_eq!(s.u_star, l.u_star);
        prop_assert_eq!(s.height, l.height);
        prop_assert_eq!(s.degrees_sorted.iter().take(l.top_degrees.len()).copied().collect::<Vec<_>>(), l.top_degrees);
    }

    #[test]
    fn zn_outputs_have_n_vertices(seed in any::<u64>(), n in 1usize..300) {
        let steps = build_critical_tail_law(1.0 / 3.0, 3).unwrap().steps();
        let z = build_z_n(&steps, n, &mut rng_from_seed(seed));
        prop_assert_eq!(z.path.len(), n);
        prop_assert_eq!(z.path.last(), -1);
        if z.excursion {
            prop_assert!(z.path.is_excursion());
            prop_assert_eq!(decode_lukasiewicz(&z.path).unwrap().size(), n);
        }
    }
}

use proptest::prelude::*;

use specbound::elop::{self, ElOp};
use specbound::json;
use specbound::matcore::{fro, inverse, vec_col, CMat, Tolerance};
use specbound::rng;

fn op(seed: u64, n: usize, k: usize) -> ElOp {
    let mut r = rng::rng(seed);
    ElOp::new(n, (0..k).map(|_| (rng::gauss_mat(&mut r, n, n), rng::gauss_mat(&mut r, n, n))).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn superoperator_agrees_with_apply(seed in any::<u64>(), n in 1usize..5, k in 0usize..4) {
        let s = op(seed, n, k);
        let mut r = rng::rng(seed ^ 1);
        let x = rng::gauss_mat(&mut r, n, n);
        let direct = vec_col(&elop::apply(&s, &x).unwrap());
        let via = elop::superoperator_matrix(&s) * vec_col(&x);
        prop_assert!((direct - via).norm() <= 1e-12 * (1.0 + elop::map_norm(&s) * fro(&x)));
    }

    #[test]
    fn minimal_rep_is_the_same_map(seed in any::<u64>(), n in 2usize..5, k in 1usize..7) {
        let tol = Tolerance::default();
        let s = op(seed, n, k);
        let m = elop::minimal_rep(&s, &tol);
        prop_assert_eq!(m.term_count(), k.min(n * n));
        prop_assert!(elop::map_distance(&s, &m).unwrap() <= 1e-10 * elop::map_norm(&s));
    }

    #[test]
    fn recombination_preserves_map(seed in any::<u64>(), n in 2usize..5, k in 1usize..4) {
        let s = op(seed, n, k);
        let mut r = rng::rng(seed ^ 2);
        let c = rng::gauss_mat(&mut r, k, k);
        prop_assume!(inverse(&c).is_ok());
        let t = elop::recombine(&s, &c).unwrap();
        prop_assert!(elop::map_distance(&s, &t).unwrap() <= 1e-9 * elop::map_norm(&s));
    }

    #[test]
    fn star_is_an_involution(seed in any::<u64>(), n in 1usize..4, k in 0usize..3) {
        let s = op(seed, n, k);
        prop_assert_eq!(elop::star(&elop::star(&s)), s);
    }

    #[test]
    fn length_is_conjugation_invariant(seed in any::<u64>(), n in 2usize..5, k in 1usize..5) {
        let tol = Tolerance::default();
        let s = op(seed, n, k);
        let mut r = rng::rng(seed ^ 3);
        let g: CMat = rng::gauss_mat(&mut r, n, n);
        prop_assume!(inverse(&g).is_ok());
        let gi = inverse(&g).unwrap();
        let t = ElOp::new(n, s.terms().iter().map(|(a, b)| (&g * a * &gi, &g * b * &gi)).collect()).unwrap();
        prop_assert_eq!(elop::length(&s, &tol), elop::length(&t, &tol));
    }

    #[test]
    fn operator_json_round_trip(seed in any::<u64>(), n in 1usize..4, k in 0usize..3) {
        let s = op(seed, n, k);
        let text = serde_json::to_string(&json::operator_to_value(&s)).unwrap();
        prop_assert_eq!(json::parse_operator(&text).unwrap(), s);
    }
}

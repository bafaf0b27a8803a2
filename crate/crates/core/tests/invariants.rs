use std::sync::Arc;

use lamshift::cocycle::{float_product, rn_exponent, SeedRecord, Window};
use lamshift::factors::{finite_factor, sinai_factor, BitSplitter, BlockCode, FactorWindow, FiniteWindow};
use lamshift::matching::{build_matching, equivariance_check, stack_matching, walk_tail, Mark, MarkSequence};
use lamshift::measure::piecewise::PiecewiseUniform;
use lamshift::measure::{ConditionalSpec, ContinuousLadder, CountableLadder, Ladder};
use lamshift::stats::CounterRng;
use proptest::prelude::*;

fn marks() -> impl Strategy<Value = MarkSequence> {
    proptest::collection::vec(prop_oneof![Just(Mark::A), Just(Mark::B)], 0..300)
        .prop_map(|marks| MarkSequence { start: 0, marks, law: None })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matching_agrees_with_stack_oracle(seq in marks(), d in 1u32..4) {
        let g = build_matching(&seq, d).unwrap();
        let (edges, open) = stack_matching(&seq, d);
        prop_assert_eq!(&g.edges, &edges);
        prop_assert_eq!(&g.pending, &open);
        prop_assert_eq!(g.violations(&seq), (0, 0));
    }

    #[test]
    fn matching_is_shift_equivariant(seq in marks(), d in 1u32..4, off in 0usize..40) {
        prop_assume!(off <= seq.len());
        prop_assert!(equivariance_check(&seq, d, off, 0).unwrap());
    }

    #[test]
    fn walk_tail_is_monotone(delta in 0.34f64..0.9, k in 0u64..200) {
        let a = walk_tail(delta, 2, k).unwrap();
        let b = walk_tail(delta, 2, k + 1).unwrap();
        prop_assert!(b <= a + 1e-15 && (0.0..=1.0).contains(&b));
    }

    #[test]
    fn cocycle_identity(seed in 0u64..10_000, lam_i in 0usize..3, a in 1i64..40, b in 1i64..40) {
        let lam = [0.3, 0.5, 0.9][lam_i];
        let lad: Arc<dyn Ladder> = Arc::new(ContinuousLadder::new(lam).unwrap());
        let w = Window::for_shifts(lad, 1, 2 * (a + b), 1e-6, SeedRecord::new(seed, 0)).unwrap();
        let whole = rn_exponent(&w, a + b).unwrap().exponent;
        let first = rn_exponent(&w, a).unwrap().exponent;
        let second = rn_exponent(&w.shift(a), b).unwrap().exponent;
        prop_assert_eq!(whole, first + second);
    }

    #[test]
    fn float_product_is_a_lambda_power(seed in 0u64..10_000, n in 1i64..100) {
        let lad: Arc<dyn Ladder> = Arc::new(CountableLadder::new(0.5).unwrap());
        let w = Window::for_shifts(lad, 1, n, 1e-6, SeedRecord::new(seed, 1)).unwrap();
        let m = rn_exponent(&w, n).unwrap();
        let f = float_product(&w, n).unwrap();
        prop_assert!((f / m.value() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn restricted_law_stays_inside(l in 0.0f64..0.9, width in 0.01f64..0.5, seed in 0u64..1000) {
        let r = (l + width).min(1.0);
        let law = PiecewiseUniform::new(vec![0.0, 0.1, 0.5, 0.55, 1.0], vec![0.5, 1.0, 2.0, 1.0]).unwrap();
        let sub = law.restrict(l, r).unwrap();
        prop_assert!((sub.total_mass() - law.mass_between(l, r)).abs() < 1e-12);
        let mut rng = CounterRng::for_stream(seed, 0);
        for _ in 0..20 {
            let x = sub.sample(&mut rng);
            prop_assert!(x >= l && x <= r);
        }
    }

    #[test]
    fn conditional_cdf_round_trip(v in 0.0f64..=1.0) {
        let lad = ContinuousLadder::new(0.5).unwrap();
        let e: &ConditionalSpec = lad.conditional();
        let u = e.inverse_cdf(v);
        prop_assert!(e.contains(u));
        prop_assert!((e.cdf(u).unwrap() - v).abs() < 1e-12);
    }

    #[test]
    fn splitter_blocks_are_disjoint(bits in 1u32..=53, i in 0u64..40, j in 0u64..40) {
        prop_assume!(i != j);
        let s = BitSplitter::new(bits).unwrap();
        let a = s.positions(i);
        let b = s.positions(j);
        prop_assert!(a.iter().all(|p| !b.contains(p)));
        prop_assert_eq!(a.len(), bits as usize);
    }

    #[test]
    fn sinai_factor_commutes_with_shift(seed in 0u64..5000, by in 1usize..20) {
        let lad = ContinuousLadder::new(0.5).unwrap();
        let mut rng = CounterRng::for_stream(seed, 2);
        let w = FactorWindow::sample(&lad, 1, 120, &mut rng);
        let out = sinai_factor(&w, lad.conditional(), 53).unwrap();
        let sh = sinai_factor(&w.shifted(by), lad.conditional(), 53).unwrap();
        prop_assert_eq!(&out[by..], &sh[..]);
    }

    #[test]
    fn finite_factor_hands_out_the_special_bits(symbols in proptest::collection::vec(0u32..10, 1..200)) {
        let code = BlockCode::new(3).unwrap();
        let w = FiniteWindow { start: 0, symbols: symbols.clone(), m: 3, delta: 0.4 };
        let f = finite_factor(&w, &code, 2).unwrap();
        let mut partners: Vec<Vec<usize>> = vec![Vec::new(); symbols.len()];
        for &(b, a) in &f.graph.edges {
            partners[a].push(b);
        }
        for (a, ps) in partners.iter_mut().enumerate() {
            if symbols[a] < 8 {
                prop_assert_eq!(f.bits[a], Some(code.bit(symbols[a], 0)));
                ps.sort_unstable();
                for (r, &b) in ps.iter().enumerate() {
                    prop_assert_eq!(f.bits[b], Some(code.bit(symbols[a], r as u32 + 1)));
                }
            }
        }
        for &b in &f.graph.pending {
            prop_assert_eq!(f.bits[b], None);
        }
    }
}

use std::collections::HashMap;
use std::sync::Arc;

use lamshift::cocycle::{kakutani_sum, rn_exponent, SeedRecord, Window};
use lamshift::maharam::{maharam_orbit, weight_log, SkewState};
use lamshift::measure::{ContinuousLadder, FamilySpec, Ladder};
use lamshift::permutation::{apply_swaps, apply_v, DyadicWindow, Site, SwapPlan};
use lamshift::stats::CounterRng;
use num_bigint::BigInt;

#[test]
fn orbit_heights_follow_single_shift_exponents() {
    let lad: Arc<dyn Ladder> = Arc::new(ContinuousLadder::new(0.5).unwrap());
    for seed in 0..20 {
        let w = Window::for_shifts(Arc::clone(&lad), 1, 200, 1e-6, SeedRecord::new(seed, 3)).unwrap();
        let trace = maharam_orbit(&SkewState::new(w.clone(), 7), 200).unwrap();
        for j in [1usize, 2, 13, 100, 200] {
            let m = rn_exponent(&w, j as i64).unwrap().exponent;
            assert_eq!(trace[j].exponent, m);
            assert_eq!(trace[j].height, BigInt::from(7 - m));
            assert_eq!(weight_log(&trace, j), BigInt::from(-m));
        }
    }
}

#[test]
fn kakutani_from_a_json_family() {
    let spec: FamilySpec = serde_json::from_str(r#"{"kind":"countable","lambda":0.3}"#).unwrap();
    let fam = spec.build().unwrap();
    let a = kakutani_sum(&fam, 1000).unwrap();
    let b = kakutani_sum(&fam, 100_000).unwrap();
    assert!(a.partial < b.partial && b.total() <= a.total() + 1e-12);
}

/// Inputs that agree except on transposed pairs are the only candidates for
/// a collision, so each base point is fed in together with such variants.
#[test]
fn v_is_injective_on_sampled_domain_points() {
    let lad = ContinuousLadder::new(0.5).unwrap();
    let (n, m) = (0u64, 64u64);
    let mut images: HashMap<Vec<u64>, Vec<u64>> = HashMap::new();
    let mut domain = 0u32;
    let mut seed = 0u64;
    while domain < 100_000 {
        let mut rng = CounterRng::for_stream(seed, 0);
        seed += 1;
        let x = DyadicWindow::sample(&lad, n, m, &mut rng);
        let plan = SwapPlan::build(&x, n, m).unwrap();
        let mut variants = vec![x.clone()];
        for &(j, p, _) in plan.steps.iter().take(6) {
            let mut v = variants.last().unwrap().clone();
            v.swap(Site::Plain(j), p).unwrap();
            variants.push(v);
        }
        for v in variants {
            let Ok((img, e)) = apply_v(&v, n, m) else { continue };
            assert_eq!(e, 1);
            let key = img.fingerprint();
            let input = v.fingerprint();
            if let Some(prev) = images.insert(key, input.clone()) {
                assert_eq!(prev, input, "two inputs share an image");
            }
            // V is undone by the same transpositions.
            assert_eq!(apply_swaps(&img, &SwapPlan::build(&v, n, m).unwrap()).unwrap(), v);
            domain += 1;
        }
    }
}

mod common;

use std::sync::Arc;

use bqo_core::arrays::{is_bad, lt_dot_prime, lt_prime, normalize_array};
use bqo_core::blocks::{first_departure, le_dot, lt_dot, triangle, FinSeq, Window};
use bqo_core::format::{parse, to_json, to_toml, BlockDoc, Text};
use bqo_core::relations::{linearize_ranking, pouzet_lift, validate_partial_ranking};
use bqo_core::search::{find_bad_array, is_simpson_minimal, run_descent, SearchContext};
use bqo_core::{BlockArray, Target};
use common::{
    bad_oracle, check_surgery, induced, le_dot_oracle, lt_prime_oracle, random_block, random_ranked_relation,
    random_refinement, random_window, subsets, triangle_oracle,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn from_mask(mask: u16) -> Vec<u32> {
    (0..10).filter(|i| mask >> i & 1 == 1).collect()
}

/// A random bad array over a small ranked target, if the search finds one.
fn random_bad_array(rng: &mut ChaCha8Rng) -> Option<BlockArray> {
    let n = rng.random_range(2..=4);
    let (r, rk) = random_ranked_relation(rng, n, 0.2);
    let target = Arc::new(Target::new(r, rk).unwrap());
    let w = random_window(rng, 6, 2, 4);
    let rank = rng.random_range(1..=2usize.min(w.len()));
    find_bad_array(&target, &w, rank, &mut SearchContext::new(1 << 20, 1))
        .ok()
        .flatten()
}

/// Whether some bad array exists over exactly `window` at rank at most
/// `rank`, by trying every set of sequences and every value map.
fn naive_bad_array_exists(target: &Arc<Target>, window: &Window, rank: usize) -> bool {
    let seqs: Vec<Vec<u32>> = subsets(window.points())
        .into_iter()
        .filter(|s| s.len() <= rank)
        .collect();
    let n = target.size();
    (1u32..1 << seqs.len()).any(|mask| {
        let chosen: Vec<FinSeq> = (0..seqs.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| FinSeq::new(seqs[i].clone()).unwrap())
            .collect();
        let top = chosen.iter().map(FinSeq::len).max().unwrap();
        let block = bqo_core::WindowedBlock::new(window.clone(), top, chosen);
        if !block.is_valid() || !block.has_triangle_pair() {
            return false;
        }
        let cells = block.len() as u32;
        (0..(n as u64).pow(cells)).any(|code| {
            let values = (0..cells)
                .map(|i| (code / (n as u64).pow(i) % n as u64) as usize)
                .collect();
            bad_oracle(&BlockArray::new(block.clone(), values, target.clone()).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn triangle_matches_the_witness_search(s in 1u16..1 << 10, t in 1u16..1 << 10) {
        let (s, t) = (from_mask(s), from_mask(t));
        let fast = triangle(&FinSeq::new(s.clone()).unwrap(), &FinSeq::new(t.clone()).unwrap(), &Window::range(0, 9));
        prop_assert_eq!(fast.unwrap(), triangle_oracle(&s, &t, 11));
    }

    #[test]
    fn random_blocks_are_valid_and_round_trip(seed in any::<u64>(), json in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_window(&mut rng, 8, 1, 6);
        let rank = rng.random_range(1..=3usize.min(w.len()));
        let b = random_block(&mut rng, &w, rank, 0.3);
        let doc = BlockDoc::from_block(&b);
        let body = if json { to_json(&doc).unwrap() } else { to_toml(&doc).unwrap() };
        let text = Text::new("block", body).unwrap();
        let back = parse::<BlockDoc>(&text).unwrap().to_block(&text).unwrap();
        prop_assert_eq!(back, b);
    }

    #[test]
    fn refinement_order_agrees_with_its_definition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_window(&mut rng, 7, 2, 5);
        let rank = rng.random_range(1..=2usize.min(w.len()));
        let d = random_block(&mut rng, &w, rank, 0.4);
        let other = random_block(&mut rng, &w, rank, 0.4);
        prop_assert_eq!(le_dot(&other, &d), le_dot_oracle(&other, &d));
        if let Some(c) = random_refinement(&mut rng, &d, 3) {
            prop_assert!(le_dot_oracle(&c, &d));
            if let Some(b) = random_refinement(&mut rng, &c, 3) {
                // Transitivity of ≤̇, and ⋖ followed by ≤̇ stays strict.
                prop_assert!(le_dot(&b, &d) && le_dot_oracle(&b, &d));
                prop_assert!(lt_dot(&b, &d));
            }
        }
    }

    #[test]
    fn surgery_postconditions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_window(&mut rng, 8, 2, 6);
        let rank = rng.random_range(1..=2usize.min(w.len()));
        let b = random_block(&mut rng, &w, rank, 0.4);
        if let Some(c) = random_refinement(&mut rng, &b, 3) {
            let m = first_departure(&c, &b).unwrap();
            for n in 0..=m {
                prop_assert_eq!(check_surgery(&c, &b, n), Ok(()));
            }
        }
    }

    #[test]
    fn lifted_order_sits_between_ranking_and_relation(seed in any::<u64>(), n in 1usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, rk) = random_ranked_relation(&mut rng, n, 0.3);
        prop_assert!(validate_partial_ranking(&r, &rk).unwrap());
        let lq = pouzet_lift(&r, &rk, &linearize_ranking(&rk).unwrap()).unwrap();
        for p in 0..n {
            prop_assert!(lq.contains(p, p));
            for q in 0..n {
                prop_assert!(!rk.lt(p, q) || (lq.contains(p, q) && !lq.contains(q, p)));
                prop_assert!(!lq.contains(p, q) || r.contains(p, q));
                prop_assert!(p == q || !(lq.contains(p, q) && lq.contains(q, p)));
                for s in 0..n {
                    prop_assert!(!(lq.contains(p, q) && lq.contains(q, s)) || lq.contains(p, s));
                }
            }
        }
    }

    #[test]
    fn found_arrays_are_bad_by_the_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(f) = random_bad_array(&mut rng) {
            prop_assert!(is_bad(&f).unwrap().bad_in_window);
            prop_assert!(bad_oracle(&f));
            prop_assert!(f.block().has_triangle_pair());
        }
    }

    #[test]
    fn bad_array_search_is_complete_on_tiny_instances(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=3);
        let (r, rk) = random_ranked_relation(&mut rng, n, 0.5);
        let target = Arc::new(Target::new(r, rk).unwrap());
        let w = random_window(&mut rng, 5, 1, 3);
        let rank = rng.random_range(1..=w.len());
        let found = find_bad_array(&target, &w, rank, &mut SearchContext::new(1 << 20, 1)).unwrap();
        prop_assert_eq!(found.is_some(), naive_bad_array_exists(&target, &w, rank));
    }

    #[test]
    fn simpson_counterexamples_normalize(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(f) = random_bad_array(&mut rng) else { return Ok(()) };
        let k = f.block().rank();
        let Ok(found) = is_simpson_minimal(&f, k, &mut SearchContext::new(1 << 20, 1)) else { return Ok(()) };
        if let Some(g) = found.counterexample {
            prop_assert!(lt_prime(&g, &f).unwrap() && lt_prime_oracle(&g, &f));
            prop_assert!(bad_oracle(&g));
            if let Ok(n) = normalize_array(&f, &g) {
                prop_assert!(bad_oracle(&n.array));
                for s in subsets(g.block().window().points()) {
                    if let (Some(a), Some(b)) = (induced(&g, &s), induced(&n.array, &s)) {
                        prop_assert_eq!(a, b);
                    }
                }
            }
        }
    }

    #[test]
    fn descent_traces_descend(seed in any::<u64>(), fixed in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(f0) = random_bad_array(&mut rng) else { return Ok(()) };
        let ctx = SearchContext::new(1 << 20, 1);
        let mut ctx = if fixed { ctx.with_fixed_window() } else { ctx };
        let Ok(trace) = run_descent(&f0, 6, 3, &mut ctx) else { return Ok(()) };
        for pair in trace.chain.windows(2) {
            prop_assert!(lt_dot_prime(&pair[1], &pair[0]).unwrap());
            prop_assert!(bad_oracle(&pair[1]));
        }
        prop_assert!(trace.p_values.windows(2).all(|w| w[0] <= w[1]));
    }
}

//! Generators and independent oracles shared by the integration tests.

#![allow(dead_code)]

use bqo_core::blocks::{first_departure, le_dot, lt_dot, surgery, FinSeq, Window, WindowedBlock};
use bqo_core::enumerate::{blocks_up_to_rank, refinements, subwindows, Budget};
use bqo_core::relations::{FiniteRelation, PartialRanking};
use bqo_core::BlockArray;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seq(v: &[u32]) -> FinSeq {
    FinSeq::new(v.to_vec()).unwrap()
}

/// `s ◁ t` decided by searching for a finite witness `X ⊆ {0..=bound}` with
/// `s ⊑ X` and `t ⊑ X⁻`. Every witness can be cut down to `s ∪ t`-sized
/// material above `max s`, so a bound two above the inputs suffices.
pub fn triangle_oracle(s: &[u32], t: &[u32], bound: u32) -> bool {
    let top = *s.last().unwrap();
    let above: Vec<u32> = (top + 1..=bound).collect();
    for mask in 0u32..(1 << above.len()) {
        let mut x = s.to_vec();
        x.extend(
            above
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| p),
        );
        let rest = &x[1..];
        if rest.len() >= t.len() && rest[..t.len()] == *t {
            return true;
        }
    }
    false
}

/// A random subset of `{0..universe}` with between `lo` and `hi` points.
pub fn random_window(rng: &mut ChaCha8Rng, universe: u32, lo: usize, hi: usize) -> Window {
    loop {
        let pts: Vec<u32> = (0..universe).filter(|_| rng.random_bool(0.6)).collect();
        if (lo..=hi).contains(&pts.len()) {
            return Window::new(pts).unwrap();
        }
    }
}

/// A random valid block over `window` at `rank`: each node of the prefix tree
/// stops with probability `stop`, except that nodes of length `rank` always stop.
pub fn random_block(rng: &mut ChaCha8Rng, window: &Window, rank: usize, stop: f64) -> WindowedBlock {
    assert!(window.len() >= rank && rank > 0);
    let mut elements = Vec::new();
    let mut stack: Vec<Vec<u32>> = window.points().iter().map(|&p| vec![p]).collect();
    while let Some(node) = stack.pop() {
        if node.len() == rank || rng.random_bool(stop) {
            elements.push(FinSeq::new(node).unwrap());
        } else {
            for &p in window.above(*node.last().unwrap()) {
                let mut child = node.clone();
                child.push(p);
                stack.push(child);
            }
        }
    }
    let b = WindowedBlock::new(window.clone(), rank, elements);
    assert!(b.is_valid(), "generator produced an invalid block {b:?}");
    b
}

/// A random `C ⋖ base` over a random subwindow, at rank at most `max_rank`.
pub fn random_refinement(rng: &mut ChaCha8Rng, base: &WindowedBlock, max_rank: usize) -> Option<WindowedBlock> {
    for _ in 0..50 {
        let pts: Vec<u32> = base
            .window()
            .points()
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.85))
            .collect();
        let window = Window::new(pts).unwrap();
        let rank = rng.random_range(1..=max_rank);
        if window.len() < rank {
            continue;
        }
        let mut elements = Vec::new();
        let mut stack: Vec<Vec<u32>> = window.points().iter().map(|&p| vec![p]).collect();
        while let Some(node) = stack.pop() {
            let in_base = base.prefix_of(&node).is_some();
            let below_base = base
                .elements()
                .iter()
                .any(|e| node.len() < e.len() && e.as_slice()[..node.len()] == node[..]);
            if !in_base && !below_base {
                continue;
            }
            let must_stop = node.len() == rank;
            if in_base && (must_stop || rng.random_bool(0.5)) {
                elements.push(FinSeq::new(node).unwrap());
            } else if !must_stop {
                for &p in window.above(*node.last().unwrap()) {
                    let mut child = node.clone();
                    child.push(p);
                    stack.push(child);
                }
            }
        }
        let c = WindowedBlock::new(window, rank, elements);
        if c.is_valid() && lt_dot(&c, base) {
            return Some(c);
        }
    }
    None
}

/// Every postcondition of the surgery lemma for one input.
pub fn check_surgery(c: &WindowedBlock, b: &WindowedBlock, n: u32) -> Result<(), String> {
    let d = surgery(c, b, n).map_err(|e| e.to_string())?.block;
    let report = d.validate();
    if !report.is_valid() {
        return Err(format!("D = {d:?} invalid: {}", report.summary()));
    }
    if !le_dot(c, &d) {
        return Err(format!("C ≤̇ D fails for D = {d:?}"));
    }
    if !lt_dot(&d, b) {
        return Err(format!("D ⋖ B fails for D = {d:?}"));
    }
    let (mc, md) = (first_departure(c, b).unwrap(), first_departure(&d, b));
    if md.as_ref().ok() != Some(&mc) {
        return Err(format!("m(C,B) = {mc} but m(D,B) = {md:?}"));
    }
    Ok(())
}

/// A random partial order on `0..n` together with a reflexive relation it ranks.
pub fn random_ranked_relation(rng: &mut ChaCha8Rng, n: usize, density: f64) -> (FiniteRelation, PartialRanking) {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut le = vec![vec![false; n]; n];
    for i in 0..n {
        le[perm[i]][perm[i]] = true;
        for j in i + 1..n {
            if rng.random_bool(0.3) {
                le[perm[i]][perm[j]] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if le[i][k] && le[k][j] {
                    le[i][j] = true;
                }
            }
        }
    }
    let base: Vec<Vec<bool>> = (0..n)
        .map(|p| (0..n).map(|q| p == q || rng.random_bool(density)).collect())
        .collect();
    let labels = || (0..n).map(|i| format!("q{i}")).collect::<Vec<_>>();
    let r = FiniteRelation::from_fn(labels(), |p, s| (0..n).any(|q| base[p][q] && le[q][s]));
    let rk = PartialRanking::from_relation(FiniteRelation::from_fn(labels(), |p, q| le[p][q]));
    (r, rk)
}

/// Every nonempty subset of `points`, as increasing vectors.
pub fn subsets(points: &[u32]) -> Vec<Vec<u32>> {
    (1u32..1 << points.len())
        .map(|mask| {
            points
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| p)
                .collect()
        })
        .collect()
}

/// Badness decided from the triangle oracle: no `s ◁ t` in the block with
/// `f(s) R f(t)`.
pub fn bad_oracle(f: &BlockArray) -> bool {
    let r = f.target().relation();
    let bound = f.block().window().max().unwrap_or(0) + 2;
    f.iter().all(|(s, p)| {
        f.iter()
            .all(|(t, q)| !(r.contains(p, q) && triangle_oracle(s.as_slice(), t.as_slice(), bound)))
    })
}

/// The value `f` induces on a finite set, found by scanning the block.
pub fn induced(f: &BlockArray, s: &[u32]) -> Option<usize> {
    f.iter().find(|(e, _)| s.starts_with(e.as_slice())).map(|(_, v)| v)
}

/// `f <′ g` by comparing induced values on every finite subset of the
/// window of `f`.
pub fn lt_prime_oracle(f: &BlockArray, g: &BlockArray) -> bool {
    let wf = f.block().window();
    if !wf.is_subset_of(g.block().window()) || wf.len() < f.block().rank().max(g.block().rank()) {
        return false;
    }
    let rk = f.target().ranking();
    subsets(wf.points())
        .iter()
        .all(|s| match (induced(f, s), induced(g, s)) {
            (Some(p), Some(q)) => rk.lt(p, q),
            _ => true,
        })
}

/// `B ≤̇ C` by definition.
pub fn le_dot_oracle(b: &WindowedBlock, c: &WindowedBlock) -> bool {
    b.window().is_subset_of(c.window())
        && b.elements()
            .iter()
            .all(|t| c.elements().iter().any(|s| t.as_slice().starts_with(s.as_slice())))
}

/// Runs the surgery checks on every `(C, B, n)` with windows inside
/// `{0..=top}` and ranks at most `max_rank`. Returns the number of cases
/// and the failures.
pub fn exhaustive_surgery(top: u32, max_rank: usize) -> (usize, Vec<String>) {
    let mut cases = 0usize;
    let mut failures = Vec::new();
    for wb in subwindows(&Window::range(0, top)) {
        for b in blocks_up_to_rank(&wb, max_rank, &mut Budget::unlimited()).unwrap() {
            for wc in subwindows(&wb) {
                for c in refinements(&b, &wc, max_rank, &mut Budget::unlimited()).unwrap() {
                    let Ok(m) = first_departure(&c, &b) else { continue };
                    if c.elements().iter().all(|t| b.contains(t.as_slice())) {
                        continue;
                    }
                    for n in 0..=m {
                        cases += 1;
                        if let Err(e) = check_surgery(&c, &b, n) {
                            failures.push(format!("C={c:?} B={b:?} n={n}: {e}"));
                        }
                    }
                }
            }
        }
    }
    (cases, failures)
}

/// `count` random surgery cases over windows of at most `max_window` points
/// drawn from `{0..9}`, at ranks up to 3.
pub fn random_surgery(seed: u64, count: usize, max_window: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut cases = 0;
    while cases < count {
        let w = random_window(&mut rng, 9, 3, max_window);
        let rank = rng.random_range(1..=3usize.min(w.len()));
        let b = random_block(&mut rng, &w, rank, 0.4);
        let Some(c) = random_refinement(&mut rng, &b, 3) else {
            continue;
        };
        let m = first_departure(&c, &b).unwrap();
        let n = rng.random_range(0..=m);
        if let Err(e) = check_surgery(&c, &b, n) {
            failures.push(format!("C={c:?} B={b:?} n={n}: {e}"));
        }
        cases += 1;
    }
    failures
}

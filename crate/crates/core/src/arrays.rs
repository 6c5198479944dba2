//! Arrays as value maps on windowed blocks.
//!
//! An array `f : B → Q` induces the function sending `X` to the value at the
//! unique initial segment of `X` in `B`. Inside a window this is
//! [`BlockArray::evaluate`].

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::{is_prefix, le_dot, lt_dot, normalize_refinement, triangle_raw, FinSeq, WindowedBlock};
use crate::error::{precondition, structural, Error, Result};
use crate::relations::{validate_partial_ranking, FiniteRelation, PartialRanking};

/// The relation arrays are judged against, together with a partial ranking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    relation: FiniteRelation,
    ranking: PartialRanking,
}

impl Target {
    /// Pairs a reflexive relation with a partial ranking of it.
    pub fn new(relation: FiniteRelation, ranking: PartialRanking) -> Result<Self> {
        if !validate_partial_ranking(&relation, &ranking)? {
            return Err(precondition("the ranking is not a partial ranking of the relation"));
        }
        Ok(Target { relation, ranking })
    }

    /// A reflexive relation ranked by the identity.
    pub fn unranked(relation: FiniteRelation) -> Result<Self> {
        let ranking = PartialRanking::identity_on(&relation);
        Target::new(relation, ranking)
    }

    /// Skips validation; for callers that construct rankings known to be valid.
    pub(crate) fn new_unchecked(relation: FiniteRelation, ranking: PartialRanking) -> Self {
        Target { relation, ranking }
    }

    pub fn relation(&self) -> &FiniteRelation {
        &self.relation
    }

    pub fn ranking(&self) -> &PartialRanking {
        &self.ranking
    }

    pub fn size(&self) -> usize {
        self.relation.size()
    }

    pub fn label(&self, p: usize) -> &str {
        self.relation.label(p)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.relation.index_of(label)
    }
}

/// A value map on a valid windowed block.
#[derive(Clone)]
pub struct BlockArray {
    block: WindowedBlock,
    values: Vec<usize>,
    target: Arc<Target>,
}

impl PartialEq for BlockArray {
    fn eq(&self, other: &Self) -> bool {
        self.block == other.block && self.values == other.values && same_target(self, other)
    }
}

impl Eq for BlockArray {}

impl BlockArray {
    /// `values[i]` is the value at `block.elements()[i]`.
    pub fn new(block: WindowedBlock, values: Vec<usize>, target: Arc<Target>) -> Result<Self> {
        let report = block.validate();
        if !report.is_valid() {
            return Err(precondition(format!("invalid block: {}", report.summary())));
        }
        if values.len() != block.len() {
            return Err(structural(format!(
                "{} values for a block with {} elements",
                values.len(),
                block.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| v >= target.size()) {
            return Err(structural(format!(
                "value {v} outside a carrier of size {}",
                target.size()
            )));
        }
        Ok(BlockArray { block, values, target })
    }

    /// Builds the value map from explicit `(element, value)` pairs, which
    /// must cover the block exactly once.
    pub fn from_pairs(
        block: WindowedBlock,
        pairs: impl IntoIterator<Item = (FinSeq, usize)>,
        target: Arc<Target>,
    ) -> Result<Self> {
        let mut values = vec![None; block.len()];
        for (s, v) in pairs {
            let i = block
                .position(s.as_slice())
                .ok_or_else(|| structural(format!("{s} is not an element of the block")))?;
            if values[i].replace(v).is_some() {
                return Err(structural(format!("{s} is assigned twice")));
            }
        }
        let values = values
            .into_iter()
            .zip(block.elements())
            .map(|(v, s)| v.ok_or_else(|| structural(format!("no value for {s}"))))
            .collect::<Result<Vec<_>>>()?;
        BlockArray::new(block, values, target)
    }

    pub fn from_fn(block: WindowedBlock, target: Arc<Target>, value: impl FnMut(&FinSeq) -> usize) -> Result<Self> {
        let values = block.elements().iter().map(value).collect();
        BlockArray::new(block, values, target)
    }

    pub fn block(&self) -> &WindowedBlock {
        &self.block
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn target(&self) -> &Arc<Target> {
        &self.target
    }

    /// The value at a block element.
    pub fn value_at(&self, s: &[u32]) -> Option<usize> {
        self.block.position(s).map(|i| self.values[i])
    }

    /// `(element, value)` in block order.
    pub fn iter(&self) -> impl Iterator<Item = (&FinSeq, usize)> + '_ {
        self.block.elements().iter().zip(self.values.iter().copied())
    }

    /// The induced value at any `s` that extends some block element.
    pub fn evaluate(&self, s: &[u32]) -> Result<usize> {
        self.block.prefix_of(s).map(|i| self.values[i]).ok_or_else(|| {
            Error::Coverage(FinSeq::new(s.to_vec()).map_or_else(|_| format!("{s:?}"), |s| s.to_string()))
        })
    }

    /// The same values with the block's rank replaced.
    pub fn with_rank(&self, rank: usize) -> Result<BlockArray> {
        BlockArray::new(self.block.with_rank(rank), self.values.clone(), self.target.clone())
    }
}

impl fmt::Display for BlockArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (s, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s} ↦ {}", self.target.label(v))?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for BlockArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BlockArray(window {}, rank {}, {self})",
            self.block.window(),
            self.block.rank()
        )
    }
}

fn same_target(f: &BlockArray, g: &BlockArray) -> bool {
    Arc::ptr_eq(&f.target, &g.target) || f.target == g.target
}

fn require_same_target(f: &BlockArray, g: &BlockArray) -> Result<()> {
    if same_target(f, g) {
        Ok(())
    } else {
        Err(precondition("the arrays have different targets"))
    }
}

/// Every pair of element positions `(i, j)` with `elements[i] ◁ elements[j]`,
/// ordered by `i` then `j`.
pub fn triangle_pairs(block: &WindowedBlock) -> Vec<(usize, usize)> {
    let els = block.elements();
    let mut out = Vec::new();
    for (i, s) in els.iter().enumerate() {
        for (j, t) in els.iter().enumerate() {
            if triangle_raw(s.as_slice(), t.as_slice()) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Outcome of [`is_bad`]. Badness is only certified inside the window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Badness {
    pub bad_in_window: bool,
    /// The least pair `s ◁ t` with `f(s) R f(t)`, ordered by `s` then `t`.
    pub witness: Option<(FinSeq, FinSeq)>,
}

const PARALLEL_THRESHOLD: usize = 512;

/// Whether `f(s) R f(t)` fails for every `s ◁ t` in the block.
pub fn is_bad(f: &BlockArray) -> Result<Badness> {
    let r = f.target.relation();
    if !r.is_reflexive() {
        return Err(precondition("badness needs a reflexive relation"));
    }
    let els = f.block.elements();
    let first_hit = |i: usize| -> Option<usize> {
        let s = els[i].as_slice();
        let row = r.row(f.values[i]);
        (0..els.len()).find(|&j| row.contains(f.values[j]) && triangle_raw(s, els[j].as_slice()))
    };
    let hit = if els.len() >= PARALLEL_THRESHOLD {
        (0..els.len())
            .into_par_iter()
            .find_map_first(|i| first_hit(i).map(|j| (i, j)))
    } else {
        (0..els.len()).find_map(|i| first_hit(i).map(|j| (i, j)))
    };
    Ok(match hit {
        Some((i, j)) => Badness {
            bad_in_window: false,
            witness: Some((els[i].clone(), els[j].clone())),
        },
        None => Badness {
            bad_in_window: true,
            witness: None,
        },
    })
}

/// Pairs `(i, j)` of positions in `f` and `g` whose elements are comparable
/// under `⊑` with the longer one inside the window of `f`. These are exactly
/// the finite sets inside that window on which both arrays evaluate.
fn compatible_pairs(f: &BlockArray, g: &BlockArray) -> Vec<(usize, usize)> {
    let wf = f.block.window().points();
    let mut out = Vec::new();
    for (i, a) in f.block.elements().iter().enumerate() {
        for (j, b) in g.block.elements().iter().enumerate() {
            let longer = if a.len() >= b.len() { a } else { b };
            if (is_prefix(a.as_slice(), b.as_slice()) || is_prefix(b.as_slice(), a.as_slice()))
                && longer.is_subset_of(wf)
            {
                out.push((i, j));
            }
        }
    }
    out
}

fn compare_prime(f: &BlockArray, g: &BlockArray, strict: bool) -> Result<bool> {
    require_same_target(f, g)?;
    let wf = f.block.window();
    if !wf.is_subset_of(g.block.window()) || wf.len() < f.block.rank().max(g.block.rank()) {
        return Ok(false);
    }
    let rk = f.target.ranking();
    Ok(compatible_pairs(f, g).into_iter().all(|(i, j)| {
        let (p, q) = (f.values[i], g.values[j]);
        if strict {
            rk.lt(p, q)
        } else {
            rk.le(p, q)
        }
    }))
}

/// `f ≤′ g`: the window of `f` lies inside that of `g` and holds samples of
/// both ranks, and the induced values satisfy `f(s) ≤′ g(s)` on every finite
/// `s` in that window where both are defined.
pub fn le_prime(f: &BlockArray, g: &BlockArray) -> Result<bool> {
    compare_prime(f, g, false)
}

/// `f <′ g`: as [`le_prime`] with strict comparisons throughout.
pub fn lt_prime(f: &BlockArray, g: &BlockArray) -> Result<bool> {
    compare_prime(f, g, true)
}

/// Why `f ≤̇′ g` fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DotFailure {
    /// The blocks are not related by `≤̇` (or by `⋖` when strictness was asked).
    Blocks,
    /// A shared element carries different values.
    SharedValue { element: FinSeq },
    /// `s ⊏ t` with `s` in the block of `g` and `t` in the block of `f`, but
    /// `f(t) <′ g(s)` fails.
    NotBelow { s: FinSeq, t: FinSeq },
}

/// The first reason `f ≤̇′ g` (or `f ⋖′ g` when `strict`) fails, if any.
pub fn dot_prime_failure(f: &BlockArray, g: &BlockArray, strict: bool) -> Result<Option<DotFailure>> {
    require_same_target(f, g)?;
    let blocks_ok = if strict {
        lt_dot(&f.block, &g.block)
    } else {
        le_dot(&f.block, &g.block)
    };
    if !blocks_ok {
        return Ok(Some(DotFailure::Blocks));
    }
    let rk = f.target.ranking();
    for (t, v) in f.iter() {
        let j = g.block.prefix_of(t.as_slice()).expect("≤̇ gives every element a prefix");
        let s = &g.block.elements()[j];
        if s == t {
            if v != g.values[j] {
                return Ok(Some(DotFailure::SharedValue { element: t.clone() }));
            }
        } else if !rk.lt(v, g.values[j]) {
            return Ok(Some(DotFailure::NotBelow {
                s: s.clone(),
                t: t.clone(),
            }));
        }
    }
    Ok(None)
}

/// `f ≤̇′ g`.
pub fn le_dot_prime(f: &BlockArray, g: &BlockArray) -> Result<bool> {
    Ok(dot_prime_failure(f, g, false)?.is_none())
}

/// `f ⋖′ g`.
pub fn lt_dot_prime(f: &BlockArray, g: &BlockArray) -> Result<bool> {
    Ok(dot_prime_failure(f, g, true)?.is_none())
}

/// Output of [`normalize_array`].
#[derive(Debug, Clone)]
pub struct Normalization {
    pub array: BlockArray,
    pub original_bad: bool,
    pub normalized_bad: bool,
}

/// Moves `g <′ f` onto a block all of whose elements strictly extend
/// elements of the block of `f`, without changing the induced function.
///
/// The result satisfies `g′ ⋖′ f`. Badness of `g` carries over to `g′`; the
/// converse can fail when the extra elements only meet at the window edge.
pub fn normalize_array(f: &BlockArray, g: &BlockArray) -> Result<Normalization> {
    if !lt_prime(g, f)? {
        return Err(precondition("normalization needs g <′ f"));
    }
    let block = normalize_refinement(&f.block, &g.block)?;
    let values = block
        .elements()
        .iter()
        .map(|t| g.evaluate(t.as_slice()))
        .collect::<Result<Vec<_>>>()?;
    let array = BlockArray::new(block, values, g.target.clone())?;
    for s in g.block.elements() {
        if let Some(i) = array.block.prefix_of(s.as_slice()) {
            if array.values[i] != g.evaluate(s.as_slice())? {
                return Err(Error::Postcondition(format!("induced values differ at {s}")));
            }
        }
    }
    for t in array.block.elements() {
        if g.evaluate(t.as_slice())? != array.evaluate(t.as_slice())? {
            return Err(Error::Postcondition(format!("induced values differ at {t}")));
        }
    }
    if let Some(failure) = dot_prime_failure(&array, f, true)? {
        return Err(Error::Postcondition(format!(
            "normalized array is not ⋖′ below f: {failure:?}"
        )));
    }
    let original_bad = is_bad(g)?.bad_in_window;
    let normalized_bad = is_bad(&array)?.bad_in_window;
    if original_bad && !normalized_bad {
        return Err(Error::Postcondition("normalization destroyed badness".into()));
    }
    Ok(Normalization {
        array,
        original_bad,
        normalized_bad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{samples, Window};
    use crate::relations::rado_order;

    fn seq(v: &[u32]) -> FinSeq {
        FinSeq::new(v.to_vec()).unwrap()
    }

    /// `0 < 1` as a ranking of the full relation on two points.
    fn chain2() -> Arc<Target> {
        let r = FiniteRelation::from_fn(vec!["lo".into(), "hi".into()], |_, _| true);
        let rk = PartialRanking::from_relation(FiniteRelation::from_fn(vec!["lo".into(), "hi".into()], |p, q| p <= q));
        Arc::new(Target::new(r, rk).unwrap())
    }

    fn antichain(n: usize) -> Arc<Target> {
        Arc::new(Target::unranked(FiniteRelation::identity((0..n).map(|i| format!("a{i}")).collect())).unwrap())
    }

    fn rado_array(n: u32) -> BlockArray {
        let target = Arc::new(Target::unranked(rado_order(n as usize).unwrap()).unwrap());
        let block = WindowedBlock::uniform(Window::range(0, n - 1), 2);
        BlockArray::from_fn(block, target, |s| {
            crate::relations::rado_index(n as usize, s.as_slice()[0] as usize, s.as_slice()[1] as usize)
        })
        .unwrap()
    }

    #[test]
    fn evaluate_uses_the_unique_prefix() {
        let t = antichain(8);
        let singles = BlockArray::from_fn(WindowedBlock::singletons(Window::range(0, 6)), t.clone(), |s| {
            s.as_slice()[0] as usize
        })
        .unwrap();
        assert_eq!(singles.evaluate(&[3, 4, 5]).unwrap(), 3);
        let schreier = WindowedBlock::schreier(Window::range(0, 6), 4);
        let f = BlockArray::from_fn(schreier, t, |s| s.len()).unwrap();
        assert_eq!(f.evaluate(&[2, 4, 5, 6]).unwrap(), f.value_at(&[2, 4, 5]).unwrap());
        assert!(matches!(f.evaluate(&[2, 4]), Err(Error::Coverage(_))));
    }

    #[test]
    fn construction_rejects_bad_input() {
        let t = antichain(2);
        let b = WindowedBlock::singletons(Window::range(0, 2));
        assert!(matches!(
            BlockArray::new(b.clone(), vec![0, 1], t.clone()),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            BlockArray::new(b.clone(), vec![0, 1, 2], t.clone()),
            Err(Error::Structural(_))
        ));
        let invalid = WindowedBlock::new(Window::range(0, 2), 1, vec![seq(&[0])]);
        assert!(matches!(
            BlockArray::new(invalid, vec![0], t.clone()),
            Err(Error::Precondition(_))
        ));
        assert!(BlockArray::from_pairs(b, vec![(seq(&[0]), 0), (seq(&[1]), 1)], t).is_err());
    }

    #[test]
    fn rado_array_is_bad() {
        let f = rado_array(8);
        let verdict = is_bad(&f).unwrap();
        assert!(verdict.bad_in_window);
        assert_eq!(verdict.witness, None);
    }

    #[test]
    fn constant_array_is_good_with_least_witness() {
        let f = BlockArray::from_fn(WindowedBlock::uniform(Window::range(0, 4), 2), antichain(1), |_| 0).unwrap();
        let verdict = is_bad(&f).unwrap();
        assert!(!verdict.bad_in_window);
        assert_eq!(verdict.witness, Some((seq(&[0, 1]), seq(&[1, 2]))));
    }

    #[test]
    fn badness_needs_reflexive_target() {
        let target = Arc::new(Target::new_unchecked(
            FiniteRelation::unlabeled(2),
            PartialRanking::identity(2),
        ));
        let f = BlockArray::from_fn(WindowedBlock::singletons(Window::range(0, 1)), target, |_| 0).unwrap();
        assert!(matches!(is_bad(&f), Err(Error::Precondition(_))));
    }

    #[test]
    fn simpson_order_basics() {
        let t = chain2();
        let b = WindowedBlock::uniform(Window::range(0, 3), 2);
        let hi = BlockArray::from_fn(b.clone(), t.clone(), |_| 1).unwrap();
        let lo = BlockArray::from_fn(b, t.clone(), |_| 0).unwrap();
        assert!(le_prime(&hi, &hi).unwrap());
        assert!(!lt_prime(&hi, &hi).unwrap());
        assert!(lt_prime(&lo, &hi).unwrap());
        assert!(!lt_prime(&hi, &lo).unwrap());
        let singles = BlockArray::from_fn(WindowedBlock::singletons(Window::range(1, 3)), t, |_| 0).unwrap();
        assert!(lt_prime(&singles, &hi).unwrap());
        assert!(!le_prime(&hi, &singles).unwrap());
    }

    #[test]
    fn incomparable_values_defeat_both_orders() {
        let t = antichain(2);
        let b = WindowedBlock::singletons(Window::range(0, 2));
        let f = BlockArray::from_fn(b.clone(), t.clone(), |s| (s.as_slice()[0] == 1) as usize).unwrap();
        let g = BlockArray::from_fn(b, t, |_| 0).unwrap();
        assert!(!le_prime(&f, &g).unwrap());
        assert!(!lt_prime(&f, &g).unwrap());
    }

    #[test]
    fn different_targets_are_rejected() {
        let b = WindowedBlock::singletons(Window::range(0, 2));
        let f = BlockArray::from_fn(b.clone(), antichain(2), |_| 0).unwrap();
        let g = BlockArray::from_fn(b, antichain(3), |_| 0).unwrap();
        assert!(matches!(le_prime(&f, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn laver_order_examples() {
        let t = chain2();
        let singles = BlockArray::from_fn(WindowedBlock::singletons(Window::range(0, 3)), t.clone(), |_| 1).unwrap();
        assert!(le_dot_prime(&singles, &singles).unwrap());
        assert!(!lt_dot_prime(&singles, &singles).unwrap());

        let pairs_block = WindowedBlock::uniform(Window::range(0, 3), 2);
        let below = BlockArray::from_fn(pairs_block.clone(), t.clone(), |_| 0).unwrap();
        assert!(lt_dot_prime(&below, &singles).unwrap());

        let one_high = BlockArray::from_fn(pairs_block, t.clone(), |s| (s.as_slice() == [1, 3]) as usize).unwrap();
        assert_eq!(
            dot_prime_failure(&one_high, &singles, false).unwrap(),
            Some(DotFailure::NotBelow {
                s: seq(&[1]),
                t: seq(&[1, 3])
            })
        );

        let changed = BlockArray::from_fn(WindowedBlock::singletons(Window::range(0, 3)), t, |s| {
            (s.as_slice()[0] != 2) as usize
        })
        .unwrap();
        assert_eq!(
            dot_prime_failure(&changed, &singles, false).unwrap(),
            Some(DotFailure::SharedValue { element: seq(&[2]) })
        );
        assert_eq!(
            dot_prime_failure(&singles, &below, false).unwrap(),
            Some(DotFailure::Blocks)
        );
    }

    #[test]
    fn normalizing_an_elementwise_refinement_is_the_identity() {
        let t = chain2();
        let f = BlockArray::from_fn(WindowedBlock::singletons(Window::range(0, 4)), t.clone(), |_| 1).unwrap();
        let g = BlockArray::from_fn(WindowedBlock::uniform(Window::range(0, 4), 2), t, |_| 0).unwrap();
        let n = normalize_array(&f, &g).unwrap();
        assert_eq!(n.array.block().elements(), g.block().elements());
        assert_eq!(n.array.values(), g.values());
    }

    #[test]
    fn normalizing_a_coarser_array() {
        let t = antichain_with_chain();
        let w = Window::range(0, 5);
        let f = BlockArray::from_fn(WindowedBlock::uniform(w.clone(), 2), t.clone(), |s| {
            2 + (s.as_slice()[0] % 2) as usize
        })
        .unwrap();
        let g = BlockArray::from_fn(WindowedBlock::singletons(w.clone()), t, |s| {
            (s.as_slice()[0] % 2) as usize
        })
        .unwrap();
        assert!(lt_prime(&g, &f).unwrap());
        let n = normalize_array(&f, &g).unwrap();
        assert!(n.array.block().elements().iter().all(|e| e.len() == 3));
        assert!(lt_dot_prime(&n.array, &f).unwrap());
        for s in samples(&w, 3) {
            assert_eq!(
                n.array.evaluate(s.as_slice()).unwrap(),
                g.evaluate(s.as_slice()).unwrap()
            );
        }
    }

    /// Two chains `0 < 2` and `1 < 3`, relation the ranking itself.
    fn antichain_with_chain() -> Arc<Target> {
        let labels: Vec<String> = (0..4).map(|i| format!("q{i}")).collect();
        let le = FiniteRelation::from_fn(labels, |p, q| p == q || (p + 2 == q));
        Arc::new(Target::new(le.clone(), PartialRanking::from_relation(le)).unwrap())
    }

    #[test]
    fn normalize_requires_strict_simpson_order() {
        let t = chain2();
        let f = BlockArray::from_fn(WindowedBlock::singletons(Window::range(0, 2)), t, |_| 0).unwrap();
        assert!(matches!(normalize_array(&f, &f), Err(Error::Precondition(_))));
    }
}

//! Finite binary relations, partial rankings and the order liftings built on
//! top of them.
//!
//! Relations are stored as dense bit matrices so that the gadget spaces,
//! whose carriers run into the thousands, still answer membership queries
//! in constant time and subset checks a word at a time.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{precondition, structural, Error, Result};

/// A binary relation on a finite labeled carrier `0..size`.
///
/// Reflexivity is not an invariant; [`check_relation`] reports it.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteRelation {
    labels: Vec<String>,
    rows: Vec<FixedBitSet>,
}

impl FiniteRelation {
    /// The empty relation on a carrier with the given labels.
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        FiniteRelation {
            labels,
            rows: vec![FixedBitSet::with_capacity(n); n],
        }
    }

    /// Carrier `0..n` labeled by the decimal index.
    pub fn unlabeled(n: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn from_pairs(labels: Vec<String>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut r = Self::new(labels);
        for (p, q) in pairs {
            r.insert(p, q)?;
        }
        Ok(r)
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let mut r = Self::new(labels);
        for p in 0..r.size() {
            r.rows[p].insert(p);
        }
        r
    }

    /// Builds a relation by evaluating `holds` on every ordered pair.
    pub fn from_fn(labels: Vec<String>, mut holds: impl FnMut(usize, usize) -> bool) -> Self {
        let mut r = Self::new(labels);
        let n = r.size();
        for p in 0..n {
            for q in 0..n {
                if holds(p, q) {
                    r.rows[p].insert(q);
                }
            }
        }
        r
    }

    /// Builds a relation from precomputed rows, one bitset per element.
    pub(crate) fn from_rows(labels: Vec<String>, rows: Vec<FixedBitSet>) -> Self {
        debug_assert!(rows.len() == labels.len() && rows.iter().all(|r| r.len() == labels.len()));
        FiniteRelation { labels, rows }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, p: usize) -> &str {
        &self.labels[p]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn insert(&mut self, p: usize, q: usize) -> Result<()> {
        let n = self.size();
        if p >= n || q >= n {
            return Err(structural(format!(
                "pair ({p}, {q}) does not index into a carrier of size {n}"
            )));
        }
        self.rows[p].insert(q);
        Ok(())
    }

    #[inline]
    pub fn contains(&self, p: usize, q: usize) -> bool {
        self.rows[p].contains(q)
    }

    /// All `q` with `p R q`.
    pub fn row(&self, p: usize) -> &FixedBitSet {
        &self.rows[p]
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(p, row)| row.ones().map(move |q| (p, q)))
    }

    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.size()).all(|p| self.contains(p, p))
    }

    /// Column sets: `columns()[q]` holds every `p` with `p R q`.
    pub fn columns(&self) -> Vec<FixedBitSet> {
        let n = self.size();
        let mut cols = vec![FixedBitSet::with_capacity(n); n];
        for (p, q) in self.pairs() {
            cols[q].insert(p);
        }
        cols
    }

    /// Every pair of `self` is a pair of `other` over the same carrier size.
    pub fn is_subrelation_of(&self, other: &FiniteRelation) -> bool {
        self.size() == other.size() && self.rows.iter().zip(&other.rows).all(|(a, b)| a.is_subset(b))
    }

    /// Renames element `i` to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<FiniteRelation> {
        let n = self.size();
        check_permutation(perm, n)?;
        let mut labels = vec![String::new(); n];
        for (i, &j) in perm.iter().enumerate() {
            labels[j] = self.labels[i].clone();
        }
        let mut out = FiniteRelation::new(labels);
        for (p, q) in self.pairs() {
            out.rows[perm[p]].insert(perm[q]);
        }
        Ok(out)
    }

    /// The same pairs over a fresh label set.
    pub fn with_labels(&self, labels: Vec<String>) -> Result<FiniteRelation> {
        if labels.len() != self.size() {
            return Err(structural("label count does not match carrier size"));
        }
        Ok(FiniteRelation {
            labels,
            rows: self.rows.clone(),
        })
    }
}

impl fmt::Debug for FiniteRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteRelation")
            .field("carrier", &self.labels)
            .field(
                "pairs",
                &self
                    .pairs()
                    .map(|(p, q)| (self.label(p), self.label(q)))
                    .collect::<Vec<_>>(),
            )
            .finish()
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(structural("permutation length does not match carrier size"));
    }
    let mut seen = vec![false; n];
    for &j in perm {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(structural("not a permutation of the carrier"));
        }
    }
    Ok(())
}

/// Order-theoretic properties of a relation, each computed by definition,
/// together with the first witness of each failure in index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub reflexive: bool,
    pub transitive: bool,
    pub antisymmetric: bool,
    pub partial_order: bool,
    pub well_founded: bool,
    pub missing_reflexive: Option<usize>,
    pub intransitive_triple: Option<(usize, usize, usize)>,
    pub symmetric_pair: Option<(usize, usize)>,
}

pub fn check_relation(r: &FiniteRelation) -> RelationReport {
    let n = r.size();
    let missing_reflexive = (0..n).find(|&p| !r.contains(p, p));

    let mut intransitive_triple = None;
    'outer: for p in 0..n {
        for q in r.row(p).ones() {
            if !r.row(q).is_subset(r.row(p)) {
                let s = r.row(q).difference(r.row(p)).next().unwrap();
                intransitive_triple = Some((p, q, s));
                break 'outer;
            }
        }
    }

    let symmetric_pair = r.pairs().find(|&(p, q)| p != q && r.contains(q, p));

    let reflexive = missing_reflexive.is_none();
    let transitive = intransitive_triple.is_none();
    let antisymmetric = symmetric_pair.is_none();
    RelationReport {
        reflexive,
        transitive,
        antisymmetric,
        partial_order: reflexive && transitive && antisymmetric,
        well_founded: strict_part_acyclic(r),
        missing_reflexive,
        intransitive_triple,
        symmetric_pair,
    }
}

/// The strict part `p R q` and not `q R p` has no cycle.
fn strict_part_acyclic(r: &FiniteRelation) -> bool {
    let n = r.size();
    let mut indegree = vec![0usize; n];
    for (p, q) in r.pairs() {
        if !r.contains(q, p) {
            indegree[q] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&p| indegree[p] == 0).collect();
    let mut removed = 0;
    while let Some(p) = stack.pop() {
        removed += 1;
        for q in r.row(p).ones() {
            if !r.contains(q, p) {
                indegree[q] -= 1;
                if indegree[q] == 0 {
                    stack.push(q);
                }
            }
        }
    }
    removed == n
}

/// A well-founded partial order `≤′` on the carrier of some relation.
///
/// Construction does not validate; [`validate_partial_ranking`] does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialRanking {
    order: FiniteRelation,
}

impl PartialRanking {
    pub fn from_relation(order: FiniteRelation) -> Self {
        PartialRanking { order }
    }

    pub fn identity(n: usize) -> Self {
        PartialRanking {
            order: FiniteRelation::identity((0..n).map(|i| i.to_string()).collect()),
        }
    }

    /// Identity ranking sharing the labels of `r`.
    pub fn identity_on(r: &FiniteRelation) -> Self {
        PartialRanking {
            order: FiniteRelation::identity(r.labels().to_vec()),
        }
    }

    pub fn size(&self) -> usize {
        self.order.size()
    }

    pub fn relation(&self) -> &FiniteRelation {
        &self.order
    }

    #[inline]
    pub fn le(&self, p: usize, q: usize) -> bool {
        self.order.contains(p, q)
    }

    #[inline]
    pub fn lt(&self, p: usize, q: usize) -> bool {
        p != q && self.order.contains(p, q)
    }

    /// Every `p` with `p <′ q`, ascending.
    pub fn strictly_below(&self, q: usize) -> Vec<usize> {
        (0..self.size()).filter(|&p| self.lt(p, q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.order.pairs().all(|(p, q)| p == q)
    }

    pub fn is_valid_order(&self) -> bool {
        let rep = check_relation(&self.order);
        rep.partial_order && rep.well_founded
    }
}

/// Why a ranking fails to be a partial ranking of a relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RankingViolation {
    /// The ranking itself is not a well-founded partial order.
    NotPartialOrder,
    /// `p R q ≤′ s` holds but `p R s` does not.
    Triple(usize, usize, usize),
}

/// The first violation in canonical `(p, q, s)` order, or `None` when `rk`
/// is a partial ranking of `r`.
pub fn ranking_violation(r: &FiniteRelation, rk: &PartialRanking) -> Result<Option<RankingViolation>> {
    if r.size() != rk.size() {
        return Err(structural(format!(
            "relation carrier has {} elements but ranking carrier has {}",
            r.size(),
            rk.size()
        )));
    }
    if !r.is_reflexive() {
        return Err(precondition("relation is not reflexive"));
    }
    if !rk.is_valid_order() {
        return Ok(Some(RankingViolation::NotPartialOrder));
    }
    let cols = r.columns();
    let mut best: Option<(usize, usize, usize)> = None;
    for (q, s) in rk.relation().pairs() {
        if q == s {
            continue;
        }
        if let Some(p) = cols[q].difference(&cols[s]).next() {
            if best.is_none_or(|b| (p, q, s) < b) {
                best = Some((p, q, s));
            }
        }
    }
    Ok(best.map(|(p, q, s)| RankingViolation::Triple(p, q, s)))
}

/// True iff `rk` is a well-founded partial order with `p R q ≤′ s ⇒ p R s`.
pub fn validate_partial_ranking(r: &FiniteRelation, rk: &PartialRanking) -> Result<bool> {
    Ok(ranking_violation(r, rk)?.is_none())
}

/// A bijection from the carrier onto `0..n` that is monotone for a ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Enumeration {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl Enumeration {
    /// `order[i]` is the element receiving rank `i`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        check_permutation(&order, n)?;
        let mut rank = vec![0; n];
        for (i, &p) in order.iter().enumerate() {
            rank[p] = i;
        }
        Ok(Enumeration { order, rank })
    }

    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn rank_of(&self, p: usize) -> usize {
        self.rank[p]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn linearizes(&self, rk: &PartialRanking) -> bool {
        self.size() == rk.size() && rk.relation().pairs().all(|(p, q)| self.rank[p] <= self.rank[q])
    }
}

/// Topological order of `rk`; among the elements whose predecessors are all
/// placed, the lowest carrier index goes next.
pub fn linearize_ranking(rk: &PartialRanking) -> Result<Enumeration> {
    let n = rk.size();
    let mut indegree = vec![0usize; n];
    for (p, q) in rk.relation().pairs() {
        if p != q {
            indegree[q] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&p| indegree[p] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(p)) = ready.pop() {
        order.push(p);
        for q in rk.relation().row(p).ones() {
            if q != p {
                indegree[q] -= 1;
                if indegree[q] == 0 {
                    ready.push(Reverse(q));
                }
            }
        }
    }
    if order.len() != n {
        return Err(precondition("ranking has a cycle in its strict part"));
    }
    Enumeration::from_order(order)
}

/// Pouzet's lifting: the well-founded partial order `≤_Q` with
/// `≤′ ⊆ ≤_Q ⊆ R`, where
/// `p <_Q q` iff `o(p) < o(q)`, `p R q`, and every `r <_Q p` has `r <_Q q`.
///
/// The recursion runs over targets `q` in enumeration order and, for each,
/// over sources `p` in enumeration order, so every `r <_Q p` and `r <_Q q`
/// with `o(r) < o(p)` is already known when `p <_Q q` is decided.
pub fn pouzet_lift(r: &FiniteRelation, rk: &PartialRanking, o: &Enumeration) -> Result<FiniteRelation> {
    if !validate_partial_ranking(r, rk)? {
        return Err(precondition("ranking is not a partial ranking of the relation"));
    }
    if !o.linearizes(rk) {
        return Err(precondition("enumeration does not linearize the ranking"));
    }
    let n = r.size();
    let mut below = vec![FixedBitSet::with_capacity(n); n];
    for (qi, &q) in o.order().iter().enumerate() {
        for &p in &o.order()[..qi] {
            if r.contains(p, q) && below[p].is_subset(&below[q]) {
                below[q].insert(p);
            }
        }
    }
    let mut out = FiniteRelation::identity(r.labels().to_vec());
    for (q, set) in below.iter().enumerate() {
        for p in set.ones() {
            out.insert(p, q)?;
        }
    }
    Ok(out)
}

/// `X ≤ Y` iff every `p ∈ X` has some `q ∈ Y` with `p R q`, on an explicit
/// list of subsets.
pub fn powerset_lift(r: &FiniteRelation, subsets: &[Vec<usize>]) -> Result<FiniteRelation> {
    if !r.is_reflexive() {
        return Err(precondition("relation is not reflexive"));
    }
    let n = r.size();
    let mut sets = Vec::with_capacity(subsets.len());
    for x in subsets {
        let mut set = FixedBitSet::with_capacity(n);
        for &p in x {
            if p >= n {
                return Err(structural(format!(
                    "subset element {p} lies outside a carrier of size {n}"
                )));
            }
            set.insert(p);
        }
        sets.push(set);
    }
    let labels = subsets
        .iter()
        .map(|x| {
            let inner: Vec<&str> = x.iter().map(|&p| r.label(p)).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect();
    Ok(FiniteRelation::from_fn(labels, |a, b| {
        sets[a].ones().all(|p| r.row(p).intersection(&sets[b]).next().is_some())
    }))
}

/// Position of `(i, j)` in the carrier of [`rado_order`].
pub fn rado_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // Rows 0..i contribute (n-1) + (n-2) + ... + (n-i) elements.
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Rado's structure on `{(i, j) : i < j < n}` with
/// `(i, j) ≤ (k, l)` iff `i = k ∧ j ≤ l`, or `j < k`.
pub fn rado_order(n: usize) -> Result<FiniteRelation> {
    if n < 2 {
        return Err(Error::Domain(format!("Rado order needs n >= 2, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let labels = pairs.iter().map(|(i, j)| format!("({i},{j})")).collect();
    Ok(FiniteRelation::from_fn(labels, |a, b| {
        let (i, j) = pairs[a];
        let (k, l) = pairs[b];
        (i == k && j <= l) || j < k
    }))
}

/// The nonempty rows `X_m = {(m, j) : m < j < n}` for `m = 0..n-1`.
pub fn rado_rows(n: usize) -> Vec<Vec<usize>> {
    (0..n.saturating_sub(1))
        .map(|m| (m + 1..n).map(|j| rado_index(n, m, j)).collect())
        .collect()
}

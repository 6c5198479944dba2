//! The sequence-space gadget that turns a family of relations into a single
//! relation whose minimal bad arrays record which family members are better.
//!
//! Each coordinate set `Q_i* = Q_i ⊔ ω*` extends `Q_i` by a copy of the
//! reversed naturals, truncated to `{0..=N}`. The space consists of all
//! sequences `σ` of length at most the family size with `σ_i ∈ Q_i*`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::Rng;
use rayon::prelude::*;

use crate::arrays::{is_bad, lt_prime, BlockArray, Target};
use crate::blocks::{is_prefix, triangle_raw, FinSeq, Window, WindowedBlock};
use crate::error::{precondition, BudgetReport, Error, Result};
use crate::relations::{check_relation, FiniteRelation, PartialRanking};

/// Label of the ω* element `m`.
pub fn star_label(m: u32) -> String {
    format!("*{m}")
}

/// The reversed order `{(m, n) : m ≥ n}` on `{0..=bound}`.
pub fn omega_star(bound: u32) -> FiniteRelation {
    let labels = (0..=bound).map(star_label).collect();
    FiniteRelation::from_fn(labels, |m, n| m >= n)
}

/// `Q_n* = Q_n ⊔ ω*` with `R_n* = R_n ∪ ≤* ∪ (Q_n × ω*)`. The elements of
/// `Q_n` come first, followed by `*0, …, *N`.
pub fn build_extended(rn: &FiniteRelation, omega_bound: u32) -> Result<FiniteRelation> {
    if !rn.is_reflexive() {
        return Err(precondition("family relations must be reflexive"));
    }
    let q = rn.size();
    let labels = rn
        .labels()
        .iter()
        .cloned()
        .chain((0..=omega_bound).map(star_label))
        .collect();
    Ok(FiniteRelation::from_fn(labels, |a, b| match (a < q, b < q) {
        (true, true) => rn.contains(a, b),
        (true, false) => true,
        (false, true) => false,
        (false, false) => a >= b,
    }))
}

/// One coordinate of a sequence in the space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    /// An element of the family member's own carrier.
    Base(usize),
    /// An element of ω*.
    Star(u32),
}

/// The family `(Q_n, R_n)` together with the ω* truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetFamily {
    members: Vec<FiniteRelation>,
    omega_bound: u32,
}

impl GadgetFamily {
    pub fn new(members: Vec<FiniteRelation>, omega_bound: u32) -> Result<Self> {
        if let Some(i) = members.iter().position(|r| !r.is_reflexive()) {
            return Err(precondition(format!("family member {i} is not reflexive")));
        }
        Ok(GadgetFamily { members, omega_bound })
    }

    /// A family of `size` random reflexive relations on at most `max_points` points.
    pub fn random(rng: &mut impl Rng, size: usize, max_points: usize, omega_bound: u32) -> Self {
        let members = (0..size)
            .map(|i| {
                let n = rng.random_range(1..=max_points);
                let density = rng.random_range(0.0..0.6);
                let labels = (0..n).map(|p| format!("{}{p}", (b'a' + i as u8) as char)).collect();
                FiniteRelation::from_fn(labels, |p, q| p == q || rng.random_bool(density))
            })
            .collect();
        GadgetFamily { members, omega_bound }
    }

    pub fn members(&self) -> &[FiniteRelation] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn omega_bound(&self) -> u32 {
        self.omega_bound
    }
}

/// The materialized space of sequences with its relation `R` and ranking `≤′`.
#[derive(Debug, Clone)]
pub struct GadgetSpace {
    family: GadgetFamily,
    sequences: Vec<Vec<Coord>>,
    index: HashMap<Vec<Coord>, usize>,
    target: Arc<Target>,
}

/// The number of sequences in the space of `family`, if it fits in `u64`.
pub fn carrier_size(family: &GadgetFamily) -> Option<u64> {
    let mut total: u64 = 1;
    let mut layer: u64 = 1;
    for r in family.members() {
        let width = r.size() as u64 + family.omega_bound() as u64 + 1;
        layer = layer.checked_mul(width)?;
        total = total.checked_add(layer)?;
    }
    Some(total)
}

impl GadgetSpace {
    /// Materializes the space; refuses carriers larger than `cap`.
    pub fn build(family: GadgetFamily, cap: u64) -> Result<Self> {
        let size = carrier_size(&family).unwrap_or(u64::MAX);
        if size > cap {
            return Err(Error::Budget(BudgetReport {
                context: "gadget carrier".into(),
                explored: size,
                limit: cap,
            }));
        }
        let mut sequences: Vec<Vec<Coord>> = vec![Vec::new()];
        let mut layer: Vec<Vec<Coord>> = vec![Vec::new()];
        for r in family.members() {
            let coords: Vec<Coord> = (0..r.size())
                .map(Coord::Base)
                .chain((0..=family.omega_bound).map(Coord::Star))
                .collect();
            layer = layer
                .iter()
                .flat_map(|prefix| {
                    coords.iter().map(move |&c| {
                        let mut s = prefix.clone();
                        s.push(c);
                        s
                    })
                })
                .collect();
            sequences.extend(layer.iter().cloned());
        }
        let index = sequences.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let labels: Vec<String> = sequences.iter().map(|s| sequence_label(&family, s)).collect();
        let n = sequences.len();
        let relation_rows: Vec<FixedBitSet> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut row = FixedBitSet::with_capacity(n);
                for b in 0..n {
                    if related(&family, &sequences[a], &sequences[b]) {
                        row.insert(b);
                    }
                }
                row
            })
            .collect();
        let ranking_rows: Vec<FixedBitSet> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut row = FixedBitSet::with_capacity(n);
                for b in 0..n {
                    if ranked_below(&sequences[a], &sequences[b]) {
                        row.insert(b);
                    }
                }
                row
            })
            .collect();
        let relation = FiniteRelation::from_rows(labels.clone(), relation_rows);
        let ranking = PartialRanking::from_relation(FiniteRelation::from_rows(labels, ranking_rows));
        Ok(GadgetSpace {
            family,
            sequences,
            index,
            target: Arc::new(Target::new_unchecked(relation, ranking)),
        })
    }

    pub fn family(&self) -> &GadgetFamily {
        &self.family
    }

    pub fn target(&self) -> &Arc<Target> {
        &self.target
    }

    pub fn relation(&self) -> &FiniteRelation {
        self.target.relation()
    }

    pub fn ranking(&self) -> &PartialRanking {
        self.target.ranking()
    }

    pub fn size(&self) -> usize {
        self.sequences.len()
    }

    pub fn sequence(&self, idx: usize) -> &[Coord] {
        &self.sequences[idx]
    }

    pub fn index_of(&self, seq: &[Coord]) -> Option<usize> {
        self.index.get(seq).copied()
    }

    /// Whether `R` is a well-founded partial ranking target for `≤′`.
    pub fn validate(&self) -> Result<bool> {
        crate::relations::validate_partial_ranking(self.relation(), self.ranking())
    }

    /// The first triple `σ R τ R ρ` without `σ R ρ`.
    pub fn non_transitivity_witness(&self) -> Option<(usize, usize, usize)> {
        check_relation(self.relation()).intransitive_triple
    }

    /// The array sending `s` to the constant sequence `⟨*min s, …⟩` of length
    /// `min s + 1`, on the Schreier block over `window` at its least valid rank.
    pub fn canonical_bad_array(&self, window: &Window) -> Result<BlockArray> {
        let block = (1..=window.len())
            .map(|k| WindowedBlock::schreier(window.clone(), k))
            .find(WindowedBlock::is_valid)
            .ok_or_else(|| precondition(format!("no Schreier block is valid over {window}")))?;
        let values = block
            .elements()
            .iter()
            .map(|s| {
                let m = s.least().expect("block elements are nonempty");
                let len = m as usize + 1;
                if len > self.family.len() || m > self.family.omega_bound {
                    return Err(precondition(format!(
                        "value at {s} needs length {len} and ω* bound {m}, the space has {} and {}",
                        self.family.len(),
                        self.family.omega_bound
                    )));
                }
                Ok(self.index[&vec![Coord::Star(m); len]])
            })
            .collect::<Result<Vec<_>>>()?;
        BlockArray::new(block, values, self.target.clone())
    }

    fn require_own(&self, f: &BlockArray) -> Result<()> {
        if Arc::ptr_eq(f.target(), &self.target) || **f.target() == *self.target {
            Ok(())
        } else {
            Err(precondition("the array does not take values in this space"))
        }
    }

    /// Whether every value of `f` with more than `i` coordinates has its
    /// `i`-th coordinate in ω*.
    pub fn decode(&self, f: &BlockArray, i: usize) -> Result<bool> {
        self.require_own(f)?;
        Ok(f.values().iter().all(|&v| star_or_short(&self.sequences[v], i)))
    }

    /// As [`GadgetSpace::decode`], but only over elements that have a
    /// `◁`-successor inside the block. Elements at the top of a window take
    /// part in no badness constraint, so their values are unconstrained.
    pub fn decode_constrained(&self, f: &BlockArray, i: usize) -> Result<bool> {
        self.require_own(f)?;
        let els = f.block().elements();
        Ok(els.iter().zip(f.values()).all(|(s, &v)| {
            let constrained = els.iter().any(|t| triangle_raw(s.as_slice(), t.as_slice()));
            !constrained || star_or_short(&self.sequences[v], i)
        }))
    }

    /// Replaces the `i`-th coordinate of `f` by the values of a bad array `h`
    /// into `Q_i`.
    ///
    /// The result lives on the common refinement of both blocks over the
    /// window of `h` and is checked to be bad and `<′ f`.
    pub fn substitute(&self, f: &BlockArray, i: usize, h: &BlockArray) -> Result<BlockArray> {
        self.require_own(f)?;
        let member = self
            .family
            .members
            .get(i)
            .ok_or_else(|| precondition(format!("no family member {i}")))?;
        if h.target().relation() != member {
            return Err(precondition(format!("h does not take values in family member {i}")));
        }
        if !is_bad(h)?.bad_in_window {
            return Err(precondition("h is not bad"));
        }
        let wh = h.block().window();
        if !wh.is_subset_of(f.block().window()) {
            return Err(precondition(format!(
                "window {wh} of h is not inside window {} of f",
                f.block().window()
            )));
        }
        let rank = f.block().rank().max(h.block().rank());
        if wh.len() < rank {
            return Err(precondition(format!("window {wh} is too small for rank {rank}")));
        }
        let mut elements: Vec<FinSeq> = Vec::new();
        for a in f.block().elements() {
            for b in h.block().elements() {
                let longer = if a.len() >= b.len() { a } else { b };
                let comparable = is_prefix(a.as_slice(), b.as_slice()) || is_prefix(b.as_slice(), a.as_slice());
                if comparable && longer.is_subset_of(wh.points()) {
                    elements.push(longer.clone());
                }
            }
        }
        let block = WindowedBlock::new(wh.clone(), rank, elements);
        let values = block
            .elements()
            .iter()
            .map(|t| {
                let old = &self.sequences[f.evaluate(t.as_slice())?];
                match old.get(i) {
                    Some(Coord::Star(_)) => {
                        let mut new = old.clone();
                        new[i] = Coord::Base(h.evaluate(t.as_slice())?);
                        Ok(self.index[&new])
                    }
                    Some(Coord::Base(_)) => Err(precondition(format!(
                        "coordinate {i} of f at {t} already lies in the family member"
                    ))),
                    None => Err(precondition(format!("f at {t} has no coordinate {i}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let g = BlockArray::new(block, values, self.target.clone())?;
        if let Some((s, t)) = is_bad(&g)?.witness {
            return Err(Error::Postcondition(format!("substituted array is not bad: {s} ◁ {t}")));
        }
        if !lt_prime(&g, f)? {
            return Err(Error::Postcondition("substituted array is not <′ f".into()));
        }
        Ok(g)
    }
}

fn star_or_short(seq: &[Coord], i: usize) -> bool {
    !matches!(seq.get(i), Some(Coord::Base(_)))
}

fn coord_related(r: &FiniteRelation, a: Coord, b: Coord) -> bool {
    match (a, b) {
        (Coord::Base(p), Coord::Base(q)) => r.contains(p, q),
        (Coord::Base(_), Coord::Star(_)) => true,
        (Coord::Star(_), Coord::Base(_)) => false,
        (Coord::Star(m), Coord::Star(n)) => m >= n,
    }
}

/// `σ R τ` iff `l(σ) ≥ l(τ)`, or some `i < l(σ) < l(τ)` has `σ_i R_i* τ_i`.
fn related(family: &GadgetFamily, sigma: &[Coord], tau: &[Coord]) -> bool {
    sigma.len() >= tau.len()
        || sigma
            .iter()
            .zip(tau)
            .zip(family.members())
            .any(|((&a, &b), r)| coord_related(r, a, b))
}

/// `σ ≤′ τ` iff the lengths agree and each coordinate is equal or drops
/// from ω* into the family member.
fn ranked_below(sigma: &[Coord], tau: &[Coord]) -> bool {
    sigma.len() == tau.len()
        && sigma
            .iter()
            .zip(tau)
            .all(|(a, b)| a == b || matches!((a, b), (Coord::Base(_), Coord::Star(_))))
}

fn sequence_label(family: &GadgetFamily, seq: &[Coord]) -> String {
    let parts: Vec<String> = seq
        .iter()
        .zip(family.members())
        .map(|(c, r)| match *c {
            Coord::Base(p) => r.label(p).to_string(),
            Coord::Star(m) => star_label(m),
        })
        .collect();
    format!("<{}>", parts.join(","))
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Base(p) => write!(f, "{p}"),
            Coord::Star(m) => write!(f, "*{m}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::rado_order;

    fn point() -> FiniteRelation {
        FiniteRelation::identity(vec!["p".into()])
    }

    #[test]
    fn extended_relation_follows_the_union() {
        let ext = build_extended(&FiniteRelation::identity(vec![]), 3).unwrap();
        assert_eq!(ext, omega_star(3));
        let ext = build_extended(&point(), 3).unwrap();
        assert!(ext.contains(0, 1) && !ext.contains(1, 0));
        assert!(ext.contains(3, 2) && !ext.contains(2, 3));
        assert!(ext.is_reflexive());
    }

    #[test]
    fn empty_family_has_one_sequence() {
        let space = GadgetSpace::build(GadgetFamily::new(vec![], 4).unwrap(), 100).unwrap();
        assert_eq!(space.size(), 1);
        assert_eq!(space.relation().label(0), "<>");
        assert!(space.relation().contains(0, 0));
    }

    #[test]
    fn relation_and_ranking_rules() {
        let fam = GadgetFamily::new(vec![point(), rado_order(3).unwrap()], 2).unwrap();
        let space = GadgetSpace::build(fam, 1000).unwrap();
        assert_eq!(space.size() as u64, carrier_size(space.family()).unwrap());
        let idx = |s: &[Coord]| space.index_of(s).unwrap();
        let short = idx(&[Coord::Star(0)]);
        let long = idx(&[Coord::Star(1), Coord::Star(0)]);
        assert!(!space.relation().contains(short, long));
        assert!(space.relation().contains(long, short));
        let witness = idx(&[Coord::Star(1)]);
        assert!(space.relation().contains(witness, long));
        let lowered = idx(&[Coord::Base(0), Coord::Star(0)]);
        assert!(space.ranking().lt(lowered, long));
        assert!(!space.ranking().le(short, long));
        assert!(space.validate().unwrap());
        let (a, b, c) = space.non_transitivity_witness().unwrap();
        let r = space.relation();
        assert!(r.contains(a, b) && r.contains(b, c) && !r.contains(a, c));
    }

    #[test]
    fn carrier_cap_is_a_budget_error() {
        let fam = GadgetFamily::new(vec![point(); 3], 8).unwrap();
        assert!(matches!(GadgetSpace::build(fam, 10), Err(Error::Budget(_))));
    }

    #[test]
    fn canonical_array_is_bad_and_decodes_to_star() {
        let fam = GadgetFamily::new(vec![point(); 4], 6).unwrap();
        let space = GadgetSpace::build(fam, 1 << 16).unwrap();
        let f = space.canonical_bad_array(&Window::range(0, 6)).unwrap();
        assert_eq!(f.block().rank(), 4);
        assert!(is_bad(&f).unwrap().bad_in_window);
        assert_eq!(space.relation().label(f.value_at(&[0]).unwrap()), "<*0>");
        for i in 0..4 {
            assert!(space.decode(&f, i).unwrap());
        }
        let small = GadgetSpace::build(GadgetFamily::new(vec![point(); 2], 6).unwrap(), 1 << 16).unwrap();
        assert!(matches!(
            small.canonical_bad_array(&Window::range(0, 6)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn substitution_lowers_one_coordinate() {
        let rado = rado_order(3).unwrap();
        let fam = GadgetFamily::new(vec![point(), rado.clone()], 4).unwrap();
        let space = GadgetSpace::build(fam, 1 << 16).unwrap();
        let f = space.canonical_bad_array(&Window::range(0, 3)).unwrap();
        let rado_target = Arc::new(Target::unranked(rado).unwrap());
        let hb = WindowedBlock::uniform(Window::range(1, 3), 2);
        let h = BlockArray::from_fn(hb, rado_target, |s| {
            crate::relations::rado_index(3, s.as_slice()[0] as usize - 1, s.as_slice()[1] as usize - 1)
        })
        .unwrap();
        assert!(is_bad(&h).unwrap().bad_in_window);
        let g = space.substitute(&f, 1, &h).unwrap();
        assert!(lt_prime(&g, &f).unwrap());
        assert!(!space.decode(&g, 1).unwrap());
        assert!(matches!(space.substitute(&g, 1, &h), Err(Error::Precondition(_))));
        assert!(matches!(space.substitute(&f, 5, &h), Err(Error::Precondition(_))));
    }
}

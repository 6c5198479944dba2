//! Finite increasing sequences, window-truncated blocks, and the block
//! operations used by the minimal bad array constructions.
//!
//! A [`WindowedBlock`] stands for a block over an infinite base `V`,
//! truncated to `V ∩ [0, max W]` where `W` is the declared window. The
//! window plays the role of the base `⋃B` everywhere: validity is checked
//! against the length-`rank` subsets of the window, and set-comprehensions
//! that mention the base read the window.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{precondition, structural, Error, Result};

/// `a ⊑ b`: `a` is a (not necessarily proper) initial segment of `b`.
#[inline]
pub fn is_prefix(a: &[u32], b: &[u32]) -> bool {
    a.len() <= b.len() && b[..a.len()] == *a
}

#[inline]
pub fn is_proper_prefix(a: &[u32], b: &[u32]) -> bool {
    a.len() < b.len() && b[..a.len()] == *a
}

fn check_increasing(v: &[u32]) -> Result<()> {
    match v.windows(2).position(|w| w[0] >= w[1]) {
        None => Ok(()),
        Some(i) => Err(structural(format!(
            "sequence {v:?} is not strictly increasing at position {}",
            i + 1
        ))),
    }
}

fn write_braces(f: &mut fmt::Formatter<'_>, v: &[u32]) -> fmt::Result {
    write!(f, "{{{}}}", v.iter().join(","))
}

/// A finite strictly increasing sequence of naturals, identified with the
/// set it enumerates. Ordered length-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FinSeq(Vec<u32>);

impl FinSeq {
    pub fn new(elements: Vec<u32>) -> Result<Self> {
        check_increasing(&elements)?;
        Ok(FinSeq(elements))
    }

    pub(crate) fn from_increasing(elements: Vec<u32>) -> Self {
        debug_assert!(check_increasing(&elements).is_ok());
        FinSeq(elements)
    }

    pub fn empty() -> Self {
        FinSeq(Vec::new())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn least(&self) -> Option<u32> {
        self.0.first().copied()
    }

    pub fn greatest(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// The sequence with its least element removed.
    pub fn tail(&self) -> &[u32] {
        self.0.get(1..).unwrap_or(&[])
    }

    pub fn is_prefix_of(&self, other: &[u32]) -> bool {
        is_prefix(&self.0, other)
    }

    pub fn is_proper_prefix_of(&self, other: &[u32]) -> bool {
        is_proper_prefix(&self.0, other)
    }

    pub fn is_subset_of(&self, other: &[u32]) -> bool {
        self.0.iter().all(|x| other.binary_search(x).is_ok())
    }

    /// `s⌢n`, defined when `n` exceeds every element of `s`.
    pub fn extended(&self, n: u32) -> Result<FinSeq> {
        if self.greatest().is_some_and(|m| m >= n) {
            return Err(structural(format!("cannot append {n} to {self}")));
        }
        let mut v = self.0.clone();
        v.push(n);
        Ok(FinSeq(v))
    }
}

impl Ord for FinSeq {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for FinSeq {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_braces(f, &self.0)
    }
}

impl fmt::Debug for FinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_braces(f, &self.0)
    }
}

impl TryFrom<Vec<u32>> for FinSeq {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        FinSeq::new(v)
    }
}

impl Serialize for FinSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// The finite base of a windowed block: a strictly increasing set of naturals.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Window(Vec<u32>);

impl Window {
    pub fn new(points: Vec<u32>) -> Result<Self> {
        check_increasing(&points)?;
        Ok(Window(points))
    }

    /// `{lo, lo+1, ..., hi}`.
    pub fn range(lo: u32, hi: u32) -> Self {
        Window((lo..=hi).collect())
    }

    pub(crate) fn from_increasing(points: Vec<u32>) -> Self {
        debug_assert!(check_increasing(&points).is_ok());
        Window(points)
    }

    pub fn points(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn contains(&self, x: u32) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    /// Points strictly greater than `x`.
    pub fn above(&self, x: u32) -> &[u32] {
        let i = self.0.partition_point(|&p| p <= x);
        &self.0[i..]
    }

    pub fn is_subset_of(&self, other: &Window) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }

    pub fn union(&self, extra: impl IntoIterator<Item = u32>) -> Window {
        let set: BTreeSet<u32> = self.0.iter().copied().chain(extra).collect();
        Window(set.into_iter().collect())
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_braces(f, &self.0)
    }
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_braces(f, &self.0)
    }
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// A block truncated to a finite window, with a rank bound `k`.
///
/// Elements are kept sorted length-lexicographically. Construction does not
/// validate; [`WindowedBlock::validate`] reports the block invariants.
#[derive(Clone)]
pub struct WindowedBlock {
    window: Window,
    rank: usize,
    elements: Vec<FinSeq>,
    index: HashMap<Vec<u32>, usize>,
    max_len: usize,
}

impl PartialEq for WindowedBlock {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.rank == other.rank && self.elements == other.elements
    }
}

impl Eq for WindowedBlock {}

impl WindowedBlock {
    pub fn new(window: Window, rank: usize, elements: impl IntoIterator<Item = FinSeq>) -> Self {
        let mut elements: Vec<FinSeq> = elements.into_iter().collect();
        elements.sort();
        elements.dedup();
        let index = elements.iter().enumerate().map(|(i, e)| (e.0.clone(), i)).collect();
        let max_len = elements.iter().map(FinSeq::len).max().unwrap_or(0);
        WindowedBlock {
            window,
            rank,
            elements,
            index,
            max_len,
        }
    }

    /// `{{w} : w ∈ W}` with rank 1.
    pub fn singletons(window: Window) -> Self {
        let elements = window.points().iter().map(|&w| FinSeq(vec![w])).collect::<Vec<_>>();
        WindowedBlock::new(window, 1, elements)
    }

    /// `[W]^k`, every `k`-subset of the window.
    pub fn uniform(window: Window, k: usize) -> Self {
        let elements = window
            .points()
            .iter()
            .copied()
            .combinations(k)
            .map(FinSeq)
            .collect::<Vec<_>>();
        WindowedBlock::new(window, k, elements)
    }

    /// The Schreier block `{s ⊆ W : |s| = min(s) + 1}` at the given rank.
    pub fn schreier(window: Window, rank: usize) -> Self {
        let pts = window.points().to_vec();
        let mut elements = Vec::new();
        for (i, &m) in pts.iter().enumerate() {
            let len = m as usize + 1;
            if len > rank {
                continue;
            }
            for rest in pts[i + 1..].iter().copied().combinations(len - 1) {
                let mut v = vec![m];
                v.extend(rest);
                elements.push(FinSeq(v));
            }
        }
        WindowedBlock::new(window, rank, elements)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn elements(&self) -> &[FinSeq] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, s: &[u32]) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &[u32]) -> bool {
        self.index.contains_key(s)
    }

    /// Index of the element `e ⊑ s`, if any. Unique when the block is an antichain.
    pub fn prefix_of(&self, s: &[u32]) -> Option<usize> {
        (1..=s.len().min(self.max_len)).find_map(|l| self.position(&s[..l]))
    }

    /// Index of an element `e ⊏ s`.
    pub fn proper_prefix_of(&self, s: &[u32]) -> Option<usize> {
        (1..s.len().min(self.max_len + 1)).find_map(|l| self.position(&s[..l]))
    }

    /// `⋃B` as it appears in the element list; may be smaller than the window.
    pub fn element_union(&self) -> BTreeSet<u32> {
        self.elements.iter().flat_map(|e| e.0.iter().copied()).collect()
    }

    pub fn with_rank(&self, rank: usize) -> WindowedBlock {
        let mut b = self.clone();
        b.rank = rank;
        b
    }

    pub fn validate(&self) -> BlockReport {
        let stray = self
            .elements
            .iter()
            .find(|e| e.is_empty() || e.len() > self.rank || !e.is_subset_of(self.window.points()));

        let mut prefix_pair = None;
        'outer: for e in &self.elements {
            for l in 1..e.len() {
                if let Some(i) = self.position(&e.0[..l]) {
                    prefix_pair = Some((self.elements[i].clone(), e.clone()));
                    break 'outer;
                }
            }
        }

        let mut coverage_gap = None;
        if self.rank == 0 || self.window.len() < self.rank {
            coverage_gap = Some(CoverageGap::WindowTooSmall);
        } else {
            for sample in self.window.0.iter().copied().combinations(self.rank) {
                let hits = (1..=self.rank).filter(|&l| self.contains(&sample[..l])).count();
                if hits != 1 {
                    coverage_gap = Some(CoverageGap::Sample {
                        sample: FinSeq(sample),
                        prefixes: hits,
                    });
                    break;
                }
            }
        }

        BlockReport {
            antichain: prefix_pair.is_none(),
            coverage: coverage_gap.is_none(),
            window_consistent: stray.is_none(),
            prefix_pair,
            coverage_gap,
            stray_element: stray.cloned(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_valid()
    }

    /// Whether some `s ◁ t` holds between elements, so that badness over
    /// this block is not vacuous.
    pub fn has_triangle_pair(&self) -> bool {
        self.elements
            .iter()
            .any(|s| self.elements.iter().any(|t| triangle_raw(&s.0, &t.0)))
    }

    /// True iff no element is a proper subset of another.
    pub fn is_barrier(&self) -> Result<bool> {
        let rep = self.validate();
        if !rep.is_valid() {
            return Err(precondition(format!("not a valid block: {}", rep.summary())));
        }
        for a in &self.elements {
            for b in &self.elements {
                if a.len() < b.len() && a.is_subset_of(&b.0) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

impl fmt::Display for WindowedBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.elements.iter().join(", "))
    }
}

impl fmt::Debug for WindowedBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "WindowedBlock {{ window: {}, rank: {}, elements: {} }}",
            self.window, self.rank, self
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CoverageGap {
    /// The window has fewer than `rank` points, or the rank is zero.
    WindowTooSmall,
    /// A length-`rank` sample with the wrong number of prefixes in the block.
    Sample { sample: FinSeq, prefixes: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockReport {
    pub antichain: bool,
    pub coverage: bool,
    pub window_consistent: bool,
    pub prefix_pair: Option<(FinSeq, FinSeq)>,
    pub coverage_gap: Option<CoverageGap>,
    pub stray_element: Option<FinSeq>,
}

impl BlockReport {
    pub fn is_valid(&self) -> bool {
        self.antichain && self.coverage && self.window_consistent
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some((a, b)) = &self.prefix_pair {
            parts.push(format!("{a} is a proper initial segment of {b}"));
        }
        match &self.coverage_gap {
            Some(CoverageGap::WindowTooSmall) => parts.push("window smaller than rank".into()),
            Some(CoverageGap::Sample { sample, prefixes }) => {
                parts.push(format!("{sample} has {prefixes} prefixes in the block"))
            }
            None => {}
        }
        if let Some(e) = &self.stray_element {
            parts.push(format!("{e} is empty, too long, or leaves the window"));
        }
        if parts.is_empty() {
            "valid".into()
        } else {
            parts.join("; ")
        }
    }
}

fn require_valid(b: &WindowedBlock, what: &str) -> Result<()> {
    let rep = b.validate();
    if rep.is_valid() {
        Ok(())
    } else {
        Err(precondition(format!("{what} is not a valid block: {}", rep.summary())))
    }
}

/// `s ◁ t` in its finite form: `t ⊑ tail(s)`, or `tail(s) ⊑ t` with every
/// further element of `t` above `max(s)`. Both arguments must be nonempty.
#[inline]
pub fn triangle_raw(s: &[u32], t: &[u32]) -> bool {
    let tail = &s[1..];
    if is_prefix(t, tail) {
        return true;
    }
    is_prefix(tail, t) && t[tail.len()] > s[s.len() - 1]
}

/// `s ◁ t`: some infinite `X` over the base has `s ⊏ X` and `t ⊏ X⁻`.
pub fn triangle(s: &FinSeq, t: &FinSeq, window: &Window) -> Result<bool> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::Domain("triangle needs nonempty sequences".into()));
    }
    if !s.is_subset_of(window.points()) || !t.is_subset_of(window.points()) {
        return Err(precondition(format!("{s} or {t} leaves the window {window}")));
    }
    Ok(triangle_raw(s.as_slice(), t.as_slice()))
}

/// `B ≤̇ C`: the window of `b` lies inside that of `c` and every element of
/// `b` has an initial segment in `c`.
pub fn le_dot(b: &WindowedBlock, c: &WindowedBlock) -> bool {
    b.window.is_subset_of(&c.window) && b.elements.iter().all(|t| c.prefix_of(&t.0).is_some())
}

/// `B ⋖ C`: `B ≤̇ C` and `B ⊄ C`.
pub fn lt_dot(b: &WindowedBlock, c: &WindowedBlock) -> bool {
    le_dot(b, c) && b.elements.iter().any(|t| !c.contains(&t.0))
}

/// The elements of `b` that fit inside `[0, n] ∪ base(c)` without fitting
/// inside `base(c)`; the material grafted onto `c` by [`surgery`].
pub fn extension_elements(c: &WindowedBlock, b: &WindowedBlock, n: u32) -> Result<Vec<FinSeq>> {
    if !lt_dot(c, b) {
        return Err(precondition("extension elements need c ⋖ b"));
    }
    Ok(extension_unchecked(c, b, n))
}

fn extension_unchecked(c: &WindowedBlock, b: &WindowedBlock, n: u32) -> Vec<FinSeq> {
    b.elements
        .iter()
        .filter(|t| t.0.iter().all(|&x| x <= n || c.window.contains(x)) && !t.is_subset_of(c.window.points()))
        .cloned()
        .collect()
}

/// Maxima of the elements of `b` that lie inside `base(c)` but are not
/// elements of `c`: the points where `c` departs from `b`.
pub fn departure_points(c: &WindowedBlock, b: &WindowedBlock) -> BTreeSet<u32> {
    b.elements
        .iter()
        .filter(|t| t.is_subset_of(c.window.points()) && !c.contains(&t.0))
        .filter_map(FinSeq::greatest)
        .collect()
}

/// The least departure point; nonempty exactly when `c ⋖ b` (given `c ≤̇ b`).
pub fn first_departure(c: &WindowedBlock, b: &WindowedBlock) -> Result<u32> {
    departure_points(c, b)
        .first()
        .copied()
        .ok_or_else(|| Error::Domain(format!("no departure point: {c} does not refine {b} strictly")))
}

/// Output of [`surgery`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surgery {
    pub block: WindowedBlock,
    /// The output window is smaller than the window of `b`.
    pub window_shrunk: bool,
}

/// `D = C ∪ E(C, B, n)` for `C ⋖ B` and `n ≤ m(C, B)`.
///
/// The window of `D` is `base(C) ∪ ⋃E`, which lies inside the window of `B`
/// and has the same maximum as the window of `C`; its rank is the larger of
/// the rank of `C` and the longest grafted element.
pub fn surgery(c: &WindowedBlock, b: &WindowedBlock, n: u32) -> Result<Surgery> {
    if !lt_dot(c, b) {
        return Err(precondition("surgery needs c ⋖ b"));
    }
    let m = first_departure(c, b)?;
    if n > m {
        return Err(precondition(format!(
            "cut point {n} exceeds the first departure point {m}"
        )));
    }
    let grafted = extension_unchecked(c, b, n);
    let rank = grafted.iter().map(FinSeq::len).fold(c.rank, usize::max);
    let window = c.window.union(grafted.iter().flat_map(|t| t.0.clone()));
    let window_shrunk = window != b.window;
    let block = WindowedBlock::new(window, rank, c.elements.iter().cloned().chain(grafted));
    Ok(Surgery { block, window_shrunk })
}

/// `B/s`: the elements whose least point lies above `max(s)`, over the
/// window points above `max(s)`. The empty `s` leaves `b` unchanged.
pub fn block_after(b: &WindowedBlock, s: &[u32]) -> WindowedBlock {
    let Some(&top) = s.last() else {
        return b.clone();
    };
    let window = Window(b.window.above(top).to_vec());
    let elements = b.elements.iter().filter(|t| t.0[0] > top).cloned().collect::<Vec<_>>();
    WindowedBlock::new(window, b.rank, elements)
}

/// Re-expresses `c` as a block each of whose elements strictly extends an
/// element of `b`, keeping the base of `c`.
///
/// Elements of `c` that already extend some element of `b` strictly are
/// kept; every `s ∈ b` inside `base(c)` that extends an element of `c` is
/// replaced by its one-point extensions `s⌢n`, `n ∈ base(c)` above `max(s)`.
pub fn normalize_refinement(b: &WindowedBlock, c: &WindowedBlock) -> Result<WindowedBlock> {
    require_valid(b, "b")?;
    require_valid(c, "c")?;
    if !c.window.is_subset_of(&b.window) {
        return Err(precondition(format!(
            "window {} is not inside window {}",
            c.window, b.window
        )));
    }
    let wc = c.window.points();
    let kept = c
        .elements
        .iter()
        .filter(|t| b.proper_prefix_of(&t.0).is_some())
        .cloned();
    let split: Vec<&FinSeq> = b
        .elements
        .iter()
        .filter(|s| s.is_subset_of(wc) && c.prefix_of(&s.0).is_some())
        .collect();
    let mut extended = Vec::new();
    for s in &split {
        let top = s.greatest().expect("block elements are nonempty");
        for &n in c.window.above(top) {
            extended.push(s.extended(n)?);
        }
    }
    let elements: Vec<FinSeq> = kept.chain(extended).collect();
    let rank = elements.iter().map(FinSeq::len).fold(c.rank.max(b.rank), usize::max);
    let out = WindowedBlock::new(c.window.clone(), rank, elements);
    let rep = out.validate();
    if !rep.is_valid() {
        return Err(precondition(format!(
            "window {} leaves no room to extend: {}",
            c.window,
            rep.summary()
        )));
    }
    Ok(out)
}

/// Every `k`-subset of `window`, in lexicographic order.
pub fn samples(window: &Window, k: usize) -> impl Iterator<Item = FinSeq> + '_ {
    window.0.iter().copied().combinations(k).map(FinSeq)
}

/// Every subset of `window` (including the empty one), ordered length-lexicographically.
pub fn all_subsets(window: &Window) -> Vec<FinSeq> {
    (0..=window.len()).flat_map(|k| samples(window, k)).collect()
}

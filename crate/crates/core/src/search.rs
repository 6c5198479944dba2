//! Exhaustive searches for bad sequences, bad arrays, minimal bad arrays and
//! the descent towards a minimal bad array.
//!
//! Every search visits candidates in a fixed canonical order and reports the
//! first success, so results do not depend on the number of worker threads.
//! Blocks are ordered by the window points they drop from the ambient window
//! and then by their element lists, both length-lexicographically; value
//! maps are ordered lexicographically along the block's element order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

pub use crate::enumerate::Budget;

use crate::arrays::{dot_prime_failure, is_bad, le_dot_prime, lt_prime, triangle_pairs, BlockArray, Target};
use crate::blocks::{first_departure, is_prefix, lt_dot, surgery, FinSeq, Window, WindowedBlock};
use crate::enumerate::{blocks_up_to_rank, refinements, subwindows};
use crate::error::{precondition, Error, Result};
use crate::relations::FiniteRelation;

/// Budget and parallelism shared by the searches of one run.
#[derive(Debug, Clone)]
pub struct SearchContext {
    pub budget: Budget,
    pub jobs: usize,
    /// Whether candidates below an array may live on proper subwindows of
    /// its window. When false, only the window itself is searched.
    pub shrink_windows: bool,
}

impl SearchContext {
    pub fn new(limit: u64, jobs: usize) -> Self {
        SearchContext {
            budget: Budget::new(limit),
            jobs: jobs.max(1),
            shrink_windows: true,
        }
    }

    pub fn unlimited() -> Self {
        SearchContext {
            budget: Budget::unlimited(),
            jobs: 1,
            shrink_windows: true,
        }
    }

    pub fn with_fixed_window(mut self) -> Self {
        self.shrink_windows = false;
        self
    }

    fn candidate_windows(&self, window: &Window) -> Vec<Window> {
        if self.shrink_windows {
            subwindows(window)
        } else {
            vec![window.clone()]
        }
    }

    /// Runs `solve` over `items` in order and returns the first success.
    ///
    /// Each call receives the remaining budget and reports the work it did.
    /// Parallel runs evaluate a window of items at once but account for them
    /// in item order, so the outcome matches the sequential run exactly.
    fn first_success<I: Sync, T: Send>(
        &mut self,
        items: &[I],
        context: &str,
        solve: impl Fn(&I, u64) -> (Option<T>, u64) + Sync,
    ) -> Result<Option<(usize, T)>> {
        if self.jobs <= 1 || items.len() <= 1 {
            for (k, item) in items.iter().enumerate() {
                let (found, used) = solve(item, self.budget.remaining());
                self.budget.charge(used, context)?;
                if let Some(t) = found {
                    return Ok(Some((k, t)));
                }
            }
            return Ok(None);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start {} workers: {e}", self.jobs)))?;
        let width = self.jobs * 4;
        for (c, group) in items.chunks(width).enumerate() {
            let limit = self.budget.remaining();
            let results: Vec<(Option<T>, u64)> =
                pool.install(|| group.par_iter().map(|item| solve(item, limit)).collect());
            for (off, (found, used)) in results.into_iter().enumerate() {
                self.budget.charge(used, context)?;
                if let Some(t) = found {
                    return Ok(Some((c * width + off, t)));
                }
            }
        }
        Ok(None)
    }
}

/// Compares blocks in canonical order relative to an ambient window.
pub fn canonical_cmp(a: &WindowedBlock, b: &WindowedBlock, ambient: &Window) -> Ordering {
    let removed = |x: &WindowedBlock| -> FinSeq {
        FinSeq::from_increasing(
            ambient
                .points()
                .iter()
                .copied()
                .filter(|&p| !x.window().contains(p))
                .collect(),
        )
    };
    removed(a)
        .cmp(&removed(b))
        .then_with(|| a.len().cmp(&b.len()))
        .then_with(|| a.elements().cmp(b.elements()))
}

/// A value-assignment problem: one domain per block element, and the
/// requirement that `f(s) R f(t)` fails for every `s ◁ t`.
struct BadAssignment<'a> {
    relation: &'a FiniteRelation,
    domains: Vec<Vec<usize>>,
    /// For element `i`: earlier elements `j` with `j ◁ i` and with `i ◁ j`.
    before: Vec<Vec<usize>>,
    after: Vec<Vec<usize>>,
}

impl<'a> BadAssignment<'a> {
    fn new(block: &WindowedBlock, relation: &'a FiniteRelation, domains: Vec<Vec<usize>>) -> Self {
        let n = block.len();
        let mut before = vec![Vec::new(); n];
        let mut after = vec![Vec::new(); n];
        for (i, j) in triangle_pairs(block) {
            if i < j {
                before[j].push(i);
            } else {
                after[i].push(j);
            }
        }
        BadAssignment {
            relation,
            domains,
            before,
            after,
        }
    }

    /// The lexicographically least solution, or `None`; the second component
    /// counts tried values and exceeds `limit` only when the search was cut off.
    fn solve(&self, limit: u64) -> (Option<Vec<usize>>, u64) {
        let mut nodes = 0u64;
        let mut values = Vec::with_capacity(self.domains.len());
        let found = self.extend(&mut values, &mut nodes, limit);
        (found.then_some(values), nodes)
    }

    fn extend(&self, values: &mut Vec<usize>, nodes: &mut u64, limit: u64) -> bool {
        let i = values.len();
        if i == self.domains.len() {
            return true;
        }
        for &v in &self.domains[i] {
            *nodes += 1;
            if *nodes > limit {
                return false;
            }
            let ok = self.before[i].iter().all(|&j| !self.relation.contains(values[j], v))
                && self.after[i].iter().all(|&j| !self.relation.contains(v, values[j]));
            if ok {
                values.push(v);
                if self.extend(values, nodes, limit) {
                    return true;
                }
                values.pop();
            }
            if *nodes > limit {
                return false;
            }
        }
        false
    }
}

fn require_reflexive(r: &FiniteRelation) -> Result<()> {
    if r.is_reflexive() {
        Ok(())
    } else {
        Err(precondition("the relation is not reflexive"))
    }
}

fn require_bad(f: &BlockArray) -> Result<()> {
    if is_bad(f)?.bad_in_window {
        Ok(())
    } else {
        Err(precondition("the array is not bad"))
    }
}

/// A sequence `q₀, …, q_{L−1}` with no `i < j` such that `q_i R q_j`; the
/// lexicographically least one is returned.
pub fn find_bad_sequence(r: &FiniteRelation, max_len: usize, ctx: &mut SearchContext) -> Result<Option<Vec<usize>>> {
    require_reflexive(r)?;
    fn extend(r: &FiniteRelation, seq: &mut Vec<usize>, len: usize, ctx: &mut SearchContext) -> Result<bool> {
        if seq.len() == len {
            return Ok(true);
        }
        for q in 0..r.size() {
            ctx.budget.charge(1, "bad sequence search")?;
            if seq.iter().all(|&p| !r.contains(p, q)) {
                seq.push(q);
                if extend(r, seq, len, ctx)? {
                    return Ok(true);
                }
                seq.pop();
            }
        }
        Ok(false)
    }
    let mut seq = Vec::new();
    Ok(extend(r, &mut seq, max_len, ctx)?.then_some(seq))
}

/// The canonically first bad array on a block over exactly `window` with
/// rank at most `rank`.
pub fn find_bad_array(
    target: &Arc<Target>,
    window: &Window,
    rank: usize,
    ctx: &mut SearchContext,
) -> Result<Option<BlockArray>> {
    require_reflexive(target.relation())?;
    if rank == 0 || window.len() < rank {
        return Err(precondition(format!("window {window} is too small for rank {rank}")));
    }
    let mut blocks = blocks_up_to_rank(window, rank, &mut ctx.budget)?;
    blocks.retain(WindowedBlock::has_triangle_pair);
    blocks.sort_by(|a, b| canonical_cmp(a, b, window));
    let all: Vec<usize> = (0..target.size()).collect();
    let found = ctx.first_success(&blocks, "bad array search", |b, limit| {
        BadAssignment::new(b, target.relation(), vec![all.clone(); b.len()]).solve(limit)
    })?;
    found
        .map(|(k, values)| BlockArray::new(blocks[k].clone(), values, target.clone()))
        .transpose()
}

/// Outcome of a minimality check.
#[derive(Debug, Clone)]
pub struct Minimality {
    pub minimal: bool,
    /// The canonically first bad array strictly below, when one exists.
    pub counterexample: Option<BlockArray>,
}

fn minimality(counterexample: Option<BlockArray>) -> Minimality {
    Minimality {
        minimal: counterexample.is_none(),
        counterexample,
    }
}

/// Candidate blocks `C ⋖ base` over the subwindows of its window, each with
/// its departure point `m(C, base)`. Blocks without a triangle pair are
/// skipped: every array on them is bad for no reason.
fn strict_refinements(base: &WindowedBlock, rank: usize, ctx: &mut SearchContext) -> Result<Vec<(u32, WindowedBlock)>> {
    let mut out = Vec::new();
    for w in ctx.candidate_windows(base.window()) {
        for c in refinements(base, &w, rank, &mut ctx.budget)? {
            if lt_dot(&c, base) && c.has_triangle_pair() {
                out.push((first_departure(&c, base)?, c));
            }
        }
    }
    Ok(out)
}

/// Values allowed for `g ⋖′ f` on `block`: `f(t)` on shared elements and
/// anything strictly below `f(s)` on elements `t` with `s ⊏ t`.
fn laver_domains(f: &BlockArray, block: &WindowedBlock) -> Vec<Vec<usize>> {
    let rk = f.target().ranking();
    block
        .elements()
        .iter()
        .map(|t| match f.value_at(t.as_slice()) {
            Some(v) => vec![v],
            None => {
                let s = f.block().prefix_of(t.as_slice()).expect("refinements extend the base");
                rk.strictly_below(f.values()[s])
            }
        })
        .collect()
}

/// Whether `f` admits no bad `g ⋖′ f` whose block lies over a subwindow and
/// has rank at most `rank`.
pub fn is_laver_minimal(f: &BlockArray, rank: usize, ctx: &mut SearchContext) -> Result<Minimality> {
    require_bad(f)?;
    let mut candidates = strict_refinements(f.block(), rank, ctx)?;
    candidates.sort_by(|(_, a), (_, b)| canonical_cmp(a, b, f.block().window()));
    let relation = f.target().relation();
    let found = ctx.first_success(&candidates, "Laver minimality search", |(_, c), limit| {
        BadAssignment::new(c, relation, laver_domains(f, c)).solve(limit)
    })?;
    let g = found
        .map(|(k, values)| BlockArray::new(candidates[k].1.clone(), values, f.target().clone()))
        .transpose()?;
    if let Some(g) = &g {
        if let Some(failure) = dot_prime_failure(g, f, true)? {
            return Err(Error::Postcondition(format!(
                "counterexample is not ⋖′ below: {failure:?}"
            )));
        }
    }
    Ok(minimality(g))
}

/// Values allowed for `g <′ f` on `block`: strictly below `f(a)` for every
/// element `a` of `f` comparable with `t` under `⊑` inside the window of `g`.
fn simpson_domains(f: &BlockArray, block: &WindowedBlock) -> Vec<Vec<usize>> {
    let n = f.target().size();
    let rk = f.target().ranking();
    let window = block.window().points();
    block
        .elements()
        .iter()
        .map(|t| {
            let mut allowed = FixedBitSet::with_capacity(n);
            allowed.insert_range(..);
            for (a, v) in f.iter() {
                let longer = if a.len() >= t.len() { a } else { t };
                let comparable = is_prefix(a.as_slice(), t.as_slice()) || is_prefix(t.as_slice(), a.as_slice());
                if comparable && longer.is_subset_of(window) {
                    let mut below = FixedBitSet::with_capacity(n);
                    below.extend(rk.strictly_below(v));
                    allowed.intersect_with(&below);
                }
            }
            allowed.ones().collect()
        })
        .collect()
}

/// Whether `f` admits no bad `g <′ f` on a block over a subwindow with rank
/// at most `rank`. Blocks without a triangle pair are not candidates.
pub fn is_simpson_minimal(f: &BlockArray, rank: usize, ctx: &mut SearchContext) -> Result<Minimality> {
    require_bad(f)?;
    let ambient = f.block().window();
    let mut candidates = Vec::new();
    for w in ctx.candidate_windows(ambient) {
        for c in blocks_up_to_rank(&w, rank, &mut ctx.budget)? {
            if w.len() >= c.rank().max(f.block().rank()) && c.has_triangle_pair() {
                candidates.push(c);
            }
        }
    }
    candidates.sort_by(|a, b| canonical_cmp(a, b, ambient));
    let relation = f.target().relation();
    let found = ctx.first_success(&candidates, "Simpson minimality search", |c, limit| {
        BadAssignment::new(c, relation, simpson_domains(f, c)).solve(limit)
    })?;
    let g = found
        .map(|(k, values)| BlockArray::new(candidates[k].clone(), values, f.target().clone()))
        .transpose()?;
    if let Some(g) = &g {
        if !lt_prime(g, f)? {
            return Err(Error::Postcondition("counterexample is not <′ below".into()));
        }
    }
    Ok(minimality(g))
}

/// One step of the descent.
#[derive(Debug, Clone)]
pub struct DescentStep {
    /// The bad `g ⋖′ f_i` with the least departure point.
    pub candidate: BlockArray,
    /// The candidate extended by the grafted elements of the previous block.
    pub next: BlockArray,
    /// `m(block(next), block(f_i))`.
    pub p: u32,
}

/// What [`descent_step`] found.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Step(Box<DescentStep>),
    /// Strict refinements exist but none carries a bad array.
    Minimal,
    /// The window admits no strict refinement at this rank.
    Exhausted,
}

/// Chooses a bad `g ⋖′ f_i` with the least departure point (ties broken
/// canonically) and grafts onto it the elements of `f_i`'s block that fit
/// below that point.
pub fn descent_step(fi: &BlockArray, rank: usize, ctx: &mut SearchContext) -> Result<StepOutcome> {
    require_bad(fi)?;
    let bi = fi.block();
    let mut candidates = strict_refinements(bi, rank, ctx)?;
    if candidates.is_empty() {
        return Ok(StepOutcome::Exhausted);
    }
    candidates.sort_by(|(ma, a), (mb, b)| ma.cmp(mb).then_with(|| canonical_cmp(a, b, bi.window())));
    let relation = fi.target().relation();
    let found = ctx.first_success(&candidates, "descent candidate search", |(_, c), limit| {
        BadAssignment::new(c, relation, laver_domains(fi, c)).solve(limit)
    })?;
    let Some((k, values)) = found else {
        return Ok(StepOutcome::Minimal);
    };
    let (m, c) = &candidates[k];
    let candidate = BlockArray::new(c.clone(), values, fi.target().clone())?;
    let grafted = surgery(c, bi, *m)?.block;
    let next_values = grafted
        .elements()
        .iter()
        .map(|t| candidate.value_at(t.as_slice()).or_else(|| fi.value_at(t.as_slice())))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Postcondition("grafted element without a value".into()))?;
    let next = BlockArray::new(grafted, next_values, fi.target().clone())?;
    check_step(fi, &next, *m)?;
    Ok(StepOutcome::Step(Box::new(DescentStep { candidate, next, p: *m })))
}

fn check_step(fi: &BlockArray, next: &BlockArray, m: u32) -> Result<()> {
    if let Some(w) = is_bad(next)?.witness {
        return Err(Error::Postcondition(format!(
            "descent output is not bad: {} ◁ {}",
            w.0, w.1
        )));
    }
    if let Some(failure) = dot_prime_failure(next, fi, true)? {
        return Err(Error::Postcondition(format!(
            "descent output is not ⋖′ below: {failure:?}"
        )));
    }
    let lost: Vec<u32> = fi
        .block()
        .window()
        .points()
        .iter()
        .copied()
        .filter(|&n| n <= m && !next.block().window().contains(n))
        .collect();
    if !lost.is_empty() {
        return Err(Error::Postcondition(format!(
            "points {lost:?} at most {m} were dropped"
        )));
    }
    let m_next = first_departure(next.block(), fi.block())?;
    if m_next != m {
        return Err(Error::Postcondition(format!(
            "departure point moved from {m} to {m_next}"
        )));
    }
    Ok(())
}

/// The properties every descent step is required to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepVerdicts {
    pub bad: bool,
    /// `next ⋖̇′ previous`.
    pub strictly_below: bool,
    /// Every window point `≤ p` of the previous array survives.
    pub keeps_low_points: bool,
    /// `m(next, previous) = p`.
    pub departure_preserved: bool,
}

impl StepVerdicts {
    pub fn all(&self) -> bool {
        self.bad && self.strictly_below && self.keeps_low_points && self.departure_preserved
    }
}

/// Rechecks one step of a recorded chain.
pub fn step_verdicts(previous: &BlockArray, next: &BlockArray, p: u32) -> Result<StepVerdicts> {
    let window = next.block().window();
    Ok(StepVerdicts {
        bad: is_bad(next)?.bad_in_window,
        strictly_below: dot_prime_failure(next, previous, true)?.is_none(),
        keeps_low_points: previous
            .block()
            .window()
            .points()
            .iter()
            .all(|&n| n > p || window.contains(n)),
        departure_preserved: first_departure(next.block(), previous.block()).ok() == Some(p),
    })
}

/// How a descent ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentStatus {
    TerminatedMinimal,
    StepLimit,
    WindowExhausted,
}

/// The chain `f₀ ⋗′ f₁ ⋗′ …` with `p(i) = m(B_{i+1}, B_i)`.
#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub chain: Vec<BlockArray>,
    pub p_values: Vec<u32>,
    pub status: DescentStatus,
}

impl DescentTrace {
    /// Whether `p` never decreases.
    pub fn p_non_decreasing(&self) -> bool {
        self.p_values.windows(2).all(|w| w[0] <= w[1])
    }

    /// The first `n` with more than `2ⁿ` steps at `p = n`.
    pub fn p_fibre_overflow(&self) -> Option<u32> {
        let mut fibres: BTreeMap<u32, u64> = BTreeMap::new();
        for &p in &self.p_values {
            *fibres.entry(p).or_default() += 1;
        }
        fibres
            .into_iter()
            .find(|&(n, count)| n < 64 && count > 1u64 << n)
            .map(|(n, _)| n)
    }
}

/// Iterates [`descent_step`] from a bad `f₀` with one rank bound throughout,
/// asserting the monotonicity and fibre bounds on `p` after every step.
pub fn run_descent(f0: &BlockArray, max_steps: usize, rank: usize, ctx: &mut SearchContext) -> Result<DescentTrace> {
    require_bad(f0)?;
    let mut trace = DescentTrace {
        chain: vec![f0.clone()],
        p_values: Vec::new(),
        status: DescentStatus::StepLimit,
    };
    for _ in 0..max_steps {
        let last = trace.chain.last().expect("chain starts nonempty");
        match descent_step(last, rank, ctx)? {
            StepOutcome::Minimal => {
                trace.status = DescentStatus::TerminatedMinimal;
                return Ok(trace);
            }
            StepOutcome::Exhausted => {
                trace.status = DescentStatus::WindowExhausted;
                return Ok(trace);
            }
            StepOutcome::Step(step) => {
                if !le_dot_prime(&step.next, f0)? {
                    return Err(Error::Postcondition("descent left the cone below f₀".into()));
                }
                trace.chain.push(step.next);
                trace.p_values.push(step.p);
            }
        }
        if !trace.p_non_decreasing() {
            return Err(Error::Postcondition(format!("p decreased: {:?}", trace.p_values)));
        }
        if let Some(n) = trace.p_fibre_overflow() {
            return Err(Error::Postcondition(format!("more than 2^{n} steps with p = {n}")));
        }
    }
    Ok(trace)
}

/// The block and values a descent settles on.
#[derive(Debug, Clone)]
pub struct Limit {
    /// Elements kept by the last step.
    pub elements: Vec<FinSeq>,
    /// Their values in the last array of the chain.
    pub values: Vec<usize>,
    pub stable: bool,
    /// The limit array, present when the descent has settled.
    pub array: Option<BlockArray>,
    /// `is_bad` of the limit array.
    pub bad: Option<bool>,
    /// Whether the limit array is `≤̇′` below every array in the chain.
    pub below_chain: Option<bool>,
}

/// Reads off the limit of a descent.
///
/// A descent that stopped on its own, or never moved, has settled on its last
/// array. Otherwise the limit is only approximated by the elements the last
/// step kept, and it is reported as unstable.
pub fn limit_block(trace: &DescentTrace) -> Result<Limit> {
    let last = trace.chain.last().ok_or_else(|| precondition("the trace is empty"))?;
    let settled = trace.chain.len() == 1 || trace.status != DescentStatus::StepLimit;
    if settled {
        let bad = is_bad(last)?.bad_in_window;
        let below_chain = trace
            .chain
            .iter()
            .map(|fi| le_dot_prime(last, fi))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .all(|x| x);
        return Ok(Limit {
            elements: last.block().elements().to_vec(),
            values: last.values().to_vec(),
            stable: true,
            array: Some(last.clone()),
            bad: Some(bad),
            below_chain: Some(below_chain),
        });
    }
    let previous = &trace.chain[trace.chain.len() - 2];
    let (elements, values) = last
        .iter()
        .filter(|(t, _)| previous.block().contains(t.as_slice()))
        .map(|(t, v)| (t.clone(), v))
        .unzip();
    Ok(Limit {
        elements,
        values,
        stable: false,
        array: None,
        bad: None,
        below_chain: None,
    })
}

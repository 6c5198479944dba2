//! Canonical enumeration of windowed blocks.
//!
//! Blocks are generated as prefix trees: every node is either an element
//! (stop), or passes on to its one-point extensions inside the window
//! (descend). Descending from a node with no room above it yields nothing,
//! which is how elements near the top of a window may be absent.

use std::collections::HashSet;

use crate::blocks::{le_dot, FinSeq, Window, WindowedBlock};
use crate::error::{BudgetReport, Error, Result};

/// A hard cap on enumerated candidates. Exceeding it is an error distinct
/// from an exhausted search.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used)
    }

    /// Records `n` units of work. On overflow nothing is recorded and the
    /// report gives the work done before this charge.
    pub fn charge(&mut self, n: u64, context: &str) -> Result<()> {
        match self.used.checked_add(n) {
            Some(total) if total <= self.limit => {
                self.used = total;
                Ok(())
            }
            _ => Err(Error::Budget(BudgetReport {
                context: context.to_string(),
                explored: self.used,
                limit: self.limit,
            })),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum NodeRule {
    /// May be an element or be refined further.
    Free,
    /// Must be refined: it is a proper prefix of an element of the base block.
    MustDescend,
    /// Cannot contribute an element.
    Absent,
}

struct TreeGen<'a> {
    window: &'a Window,
    rank: usize,
    rule: &'a dyn Fn(&[u32]) -> NodeRule,
    chosen: Vec<FinSeq>,
    out: Vec<Vec<FinSeq>>,
    budget: &'a mut Budget,
}

impl TreeGen<'_> {
    fn run(&mut self, frontier: &mut Vec<Vec<u32>>) -> Result<()> {
        let Some(node) = frontier.pop() else {
            self.budget.charge(1, "block enumeration")?;
            self.out.push(self.chosen.clone());
            return Ok(());
        };
        let rule = if node.is_empty() {
            NodeRule::MustDescend
        } else {
            (self.rule)(&node)
        };
        match rule {
            NodeRule::Absent => self.run(frontier)?,
            NodeRule::Free | NodeRule::MustDescend => {
                if rule == NodeRule::Free {
                    self.chosen.push(FinSeq::new(node.clone())?);
                    self.run(frontier)?;
                    self.chosen.pop();
                }
                if node.len() < self.rank {
                    let above = match node.last() {
                        Some(&top) => self.window.above(top),
                        None => self.window.points(),
                    };
                    let before = frontier.len();
                    for &p in above.iter().rev() {
                        let mut child = node.clone();
                        child.push(p);
                        frontier.push(child);
                    }
                    self.run(frontier)?;
                    frontier.truncate(before);
                }
            }
        }
        frontier.push(node);
        Ok(())
    }
}

fn generate(
    window: &Window,
    rank: usize,
    rule: &dyn Fn(&[u32]) -> NodeRule,
    budget: &mut Budget,
) -> Result<Vec<Vec<FinSeq>>> {
    let mut gen = TreeGen {
        window,
        rank,
        rule,
        chosen: Vec::new(),
        out: Vec::new(),
        budget,
    };
    gen.run(&mut vec![Vec::new()])?;
    Ok(gen.out)
}

/// Every valid block over `window` at exactly `rank`, in generation order.
pub fn blocks_at_rank(window: &Window, rank: usize, budget: &mut Budget) -> Result<Vec<WindowedBlock>> {
    if rank == 0 || window.len() < rank {
        return Ok(Vec::new());
    }
    let sets = generate(window, rank, &|_| NodeRule::Free, budget)?;
    Ok(sets
        .into_iter()
        .map(|els| WindowedBlock::new(window.clone(), rank, els))
        .filter(WindowedBlock::is_valid)
        .collect())
}

/// Every element set that is a valid block over `window` at some rank
/// `≤ max_rank`, each reported once at its least valid rank. Ordered by rank,
/// then generation order.
pub fn blocks_up_to_rank(window: &Window, max_rank: usize, budget: &mut Budget) -> Result<Vec<WindowedBlock>> {
    let mut seen: HashSet<Vec<FinSeq>> = HashSet::new();
    let mut out = Vec::new();
    for rank in 1..=max_rank.min(window.len()) {
        for b in blocks_at_rank(window, rank, budget)? {
            if seen.insert(b.elements().to_vec()) {
                out.push(b);
            }
        }
    }
    Ok(out)
}

/// Blocks `C` over `window` with `C ≤̇ base`, valid at some rank
/// `≤ max_rank`, each once at its least valid rank.
pub fn refinements(
    base: &WindowedBlock,
    window: &Window,
    max_rank: usize,
    budget: &mut Budget,
) -> Result<Vec<WindowedBlock>> {
    if !window.is_subset_of(base.window()) {
        return Ok(Vec::new());
    }
    let rule = |q: &[u32]| -> NodeRule {
        if base.prefix_of(q).is_some() {
            NodeRule::Free
        } else if base
            .elements()
            .iter()
            .any(|e| q.len() < e.len() && e.as_slice()[..q.len()] == *q)
        {
            NodeRule::MustDescend
        } else {
            NodeRule::Absent
        }
    };
    let mut seen: HashSet<Vec<FinSeq>> = HashSet::new();
    let mut out = Vec::new();
    for rank in 1..=max_rank.min(window.len()) {
        for els in generate(window, rank, &rule, budget)? {
            if seen.contains(&els) {
                continue;
            }
            let b = WindowedBlock::new(window.clone(), rank, els);
            if b.is_valid() && le_dot(&b, base) {
                seen.insert(b.elements().to_vec());
                out.push(b);
            }
        }
    }
    Ok(out)
}

/// Every nonempty subset of `window`, ordered by the number of removed
/// points and then length-lexicographically by the removed points.
pub fn subwindows(window: &Window) -> Vec<Window> {
    crate::blocks::all_subsets(window)
        .into_iter()
        .map(|removed| {
            Window::from_increasing(
                window
                    .points()
                    .iter()
                    .copied()
                    .filter(|p| !removed.as_slice().contains(p))
                    .collect(),
            )
        })
        .filter(|w| !w.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{all_subsets, lt_dot, samples};

    /// Independent enumerator: every subset of `[W]^{1..=k}`, filtered by validation.
    fn naive_blocks(window: &Window, rank: usize) -> HashSet<Vec<FinSeq>> {
        let universe: Vec<FinSeq> = (1..=rank).flat_map(|l| samples(window, l)).collect();
        assert!(universe.len() <= 20);
        let mut out = HashSet::new();
        for mask in 0u32..(1 << universe.len()) {
            let els: Vec<FinSeq> = universe
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, e)| e.clone())
                .collect();
            let b = WindowedBlock::new(window.clone(), rank, els);
            if b.is_valid() {
                out.insert(b.elements().to_vec());
            }
        }
        out
    }

    #[test]
    fn tree_generator_matches_naive_enumeration() {
        for (window, rank) in [
            (Window::range(0, 3), 1),
            (Window::range(0, 3), 2),
            (Window::range(0, 4), 2),
            (Window::new(vec![1, 3, 4]).unwrap(), 3),
            (Window::range(0, 3), 3),
        ] {
            let fast: HashSet<Vec<FinSeq>> = blocks_at_rank(&window, rank, &mut Budget::unlimited())
                .unwrap()
                .into_iter()
                .map(|b| b.elements().to_vec())
                .collect();
            assert_eq!(fast, naive_blocks(&window, rank), "window {window}, rank {rank}");
        }
    }

    #[test]
    fn generation_is_duplicate_free() {
        let all = blocks_at_rank(&Window::range(0, 4), 3, &mut Budget::unlimited()).unwrap();
        let distinct: HashSet<_> = all.iter().map(|b| b.elements().to_vec()).collect();
        assert_eq!(all.len(), distinct.len());
    }

    #[test]
    fn refinements_are_exactly_the_dominated_blocks() {
        let base = WindowedBlock::schreier(Window::range(0, 4), 3);
        assert!(base.is_valid());
        for window in subwindows(base.window()).into_iter().take(12) {
            let got: HashSet<Vec<FinSeq>> = refinements(&base, &window, 3, &mut Budget::unlimited())
                .unwrap()
                .into_iter()
                .map(|b| b.elements().to_vec())
                .collect();
            let want: HashSet<Vec<FinSeq>> = blocks_up_to_rank(&window, 3, &mut Budget::unlimited())
                .unwrap()
                .into_iter()
                .filter(|c| le_dot(c, &base))
                .map(|b| b.elements().to_vec())
                .collect();
            assert_eq!(got, want, "window {window}");
        }
    }

    #[test]
    fn rank_one_rado_window_has_a_single_block() {
        let bs = blocks_at_rank(&Window::range(0, 7), 1, &mut Budget::unlimited()).unwrap();
        assert_eq!(bs.len(), 1);
        assert_eq!(bs[0], WindowedBlock::singletons(Window::range(0, 7)));
    }

    #[test]
    fn budget_is_enforced() {
        let mut budget = Budget::new(5);
        let err = blocks_at_rank(&Window::range(0, 5), 2, &mut budget).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }

    #[test]
    fn subwindows_remove_few_points_first() {
        let w = Window::range(0, 2);
        let subs = subwindows(&w);
        assert_eq!(subs.len(), 7);
        assert_eq!(subs[0], w);
        assert_eq!(subs[1].points(), &[1, 2]);
        assert_eq!(all_subsets(&w).len(), 8);
        let strict = refinements(&WindowedBlock::singletons(w.clone()), &w, 2, &mut Budget::unlimited()).unwrap();
        assert!(strict.iter().any(|c| lt_dot(c, &WindowedBlock::singletons(w.clone()))));
    }
}

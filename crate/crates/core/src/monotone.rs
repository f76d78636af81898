//! Monotonicity constants of linear orders on finite metric spaces.
//!
//! A space is `C`-monotone under an order when every closed order-interval
//! satisfies `diam([a, b]) <= C * d(a, b)`. The smallest such `C` for a given
//! order is the largest ratio `diam([a, b]) / d(a, b)` over pairs `a < b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::{FiniteMetricSpace, LinearOrder};

/// Default point cap for exact search.
pub const DEFAULT_EXACT_CAP: usize = 10;
/// Largest space [`brute_force_min_c`] accepts.
pub const BRUTE_FORCE_CAP: usize = 8;

/// An order together with its monotonicity constant and the pair of points
/// (smaller first) attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderAssignment {
    pub order: LinearOrder,
    pub c: f64,
    pub certificate: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monotonicity {
    pub c: f64,
    pub certificate: Option<(usize, usize)>,
}

/// `max_{a<b} diam([a, b]) / d(a, b)`; 1 for spaces with fewer than two
/// points.
pub fn monotonicity_constant(
    space: &FiniteMetricSpace,
    order: &LinearOrder,
) -> Result<Monotonicity> {
    order.check_covers(space)?;
    let mut scratch = IntervalTable::new(space.len());
    let (c, pair) = scratch.evaluate(space, order.sequence());
    Ok(Monotonicity {
        c,
        certificate: pair,
    })
}

/// Incrementally maintained interval diameters for a prefix of an order:
/// `diam[i][j]` is the diameter of the points at positions `i..=j`.
struct IntervalTable {
    diam: Vec<Vec<f64>>,
}

impl IntervalTable {
    fn new(n: usize) -> Self {
        Self {
            diam: vec![vec![0.0; n]; n],
        }
    }

    /// Fill column `j` for `point` placed after `prefix[..j]`; returns the
    /// largest interval ratio ending at `j` and the position it starts at.
    fn extend(
        &mut self,
        space: &FiniteMetricSpace,
        prefix: &[usize],
        j: usize,
        point: usize,
    ) -> (f64, Option<usize>) {
        self.diam[j][j] = 0.0;
        let mut best = (f64::NEG_INFINITY, None);
        for i in (0..j).rev() {
            let d = space.distance(prefix[i], point);
            let inner = self.diam[i + 1][j];
            let left = self.diam[i][j - 1];
            let diam = d.max(inner).max(left);
            self.diam[i][j] = diam;
            let ratio = diam / d;
            if ratio > best.0 {
                best = (ratio, Some(i));
            }
        }
        best
    }

    fn evaluate(&mut self, space: &FiniteMetricSpace, seq: &[usize]) -> (f64, Option<(usize, usize)>) {
        let mut c = 1.0;
        let mut pair = None;
        for j in 0..seq.len() {
            let (ratio, start) = self.extend(space, seq, j, seq[j]);
            if let Some(i) = start {
                if pair.is_none() || ratio > c {
                    c = ratio;
                    pair = Some((seq[i], seq[j]));
                }
            }
        }
        (c, pair)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: SearchMode,
    /// Maximum number of swap evaluations in heuristic local search.
    pub budget: usize,
    pub exact_cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            mode: SearchMode::Exact,
            budget: 10_000,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

/// Finds an order with small monotonicity constant.
///
/// Exact mode returns a global minimizer, the lexicographically smallest one
/// when several orders tie. Heuristic mode returns a locally optimal order.
pub fn search_min_c(space: &FiniteMetricSpace, options: SearchOptions) -> Result<OrderAssignment> {
    let n = space.len();
    let assignment = match options.mode {
        SearchMode::Exact => {
            if n > options.exact_cap {
                return Err(Error::ExactSearchCap {
                    n,
                    cap: options.exact_cap,
                });
            }
            let seed = heuristic(space, options.budget);
            BranchAndBound::new(space, seed.1).run().unwrap_or(seed.0)
        }
        SearchMode::Heuristic => heuristic(space, options.budget).0,
    };
    let order = LinearOrder::new(assignment)?;
    let m = monotonicity_constant(space, &order)?;
    Ok(OrderAssignment {
        order,
        c: m.c,
        certificate: m.certificate,
    })
}

fn constant_of(space: &FiniteMetricSpace, table: &mut IntervalTable, seq: &[usize]) -> f64 {
    table.evaluate(space, seq).0
}

/// Greedy insertion then first-improvement pairwise swaps.
fn heuristic(space: &FiniteMetricSpace, budget: usize) -> (Vec<usize>, f64) {
    let n = space.len();
    let mut table = IntervalTable::new(n);
    let mut seq: Vec<usize> = Vec::with_capacity(n);
    let mut candidate = Vec::with_capacity(n);
    for p in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for pos in 0..=seq.len() {
            candidate.clear();
            candidate.extend_from_slice(&seq[..pos]);
            candidate.push(p);
            candidate.extend_from_slice(&seq[pos..]);
            let c = constant_of(space, &mut table, &candidate);
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, pos));
            }
        }
        let (_, pos) = best.expect("at least one insertion position");
        seq.insert(pos, p);
    }

    let mut current = constant_of(space, &mut table, &seq);
    let mut evaluations = 0usize;
    'search: loop {
        for i in 0..n {
            for j in i + 1..n {
                if evaluations >= budget {
                    break 'search;
                }
                seq.swap(i, j);
                evaluations += 1;
                let c = constant_of(space, &mut table, &seq);
                if c < current {
                    current = c;
                    continue 'search;
                }
                seq.swap(i, j);
            }
        }
        break;
    }
    (seq, current)
}

struct BranchAndBound<'a> {
    space: &'a FiniteMetricSpace,
    table: IntervalTable,
    prefix: Vec<usize>,
    used: Vec<bool>,
    best: f64,
    best_order: Option<Vec<usize>>,
}

impl<'a> BranchAndBound<'a> {
    fn new(space: &'a FiniteMetricSpace, upper_bound: f64) -> Self {
        let n = space.len();
        Self {
            space,
            table: IntervalTable::new(n),
            prefix: Vec::with_capacity(n),
            used: vec![false; n],
            best: upper_bound,
            best_order: None,
        }
    }

    fn run(mut self) -> Option<Vec<usize>> {
        self.descend(1.0);
        self.best_order
    }

    /// Depth-first in lexicographic order. A prefix's constant only grows as
    /// points are appended, so prefixes already worse than the incumbent are
    /// cut. Before the first complete order is found the heuristic bound is
    /// only an upper bound, so ties with it are still explored.
    fn descend(&mut self, partial: f64) {
        let n = self.space.len();
        let j = self.prefix.len();
        if j == n {
            if self.best_order.is_none() || partial < self.best {
                self.best = partial;
                self.best_order = Some(self.prefix.clone());
            }
            return;
        }
        for p in 0..n {
            if self.used[p] {
                continue;
            }
            let (ratio, _) = self.table.extend(self.space, &self.prefix, j, p);
            let next = partial.max(ratio);
            let cut = if self.best_order.is_some() {
                next >= self.best
            } else {
                next > self.best
            };
            if cut {
                continue;
            }
            self.used[p] = true;
            self.prefix.push(p);
            self.descend(next);
            self.prefix.pop();
            self.used[p] = false;
        }
    }
}

/// Minimum monotonicity constant over all `n!` orders (test oracle).
///
/// Deliberately naive: every order is enumerated and every interval diameter
/// recomputed from scratch.
pub fn brute_force_min_c(space: &FiniteMetricSpace) -> Result<f64> {
    let n = space.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            what: "brute-force order enumeration",
            limit: BRUTE_FORCE_CAP,
            actual: n,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |order| {
        best = best.min(naive_constant(space, order));
    });
    Ok(best)
}

fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

fn naive_constant(space: &FiniteMetricSpace, order: &[usize]) -> f64 {
    let mut c = 1.0f64;
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            let members = &order[a..=b];
            let mut diam = 0.0f64;
            for (i, &x) in members.iter().enumerate() {
                for &y in &members[i + 1..] {
                    diam = diam.max(space.distance(x, y));
                }
            }
            c = c.max(diam / space.distance(order[a], order[b]));
        }
    }
    c
}

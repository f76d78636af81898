//! The map `g(x) = μ((−∞, x))` from a coded ultrametric space to the line.
//!
//! With `μ` a Frostman measure and the lexicographic (1-monotone) order,
//! `g(b) − g(a) = μ([a, b)) <= diam([a, b])^s = d(a, b)^s`, so `g` is
//! `s`-Hölder with constant 1.
//!
//! On truncated trees a leaf stands for a whole subtree whose points map into
//! the leaf's mass interval `[g, g + μ(leaf)]`. Hölder ratios between two
//! leaves are taken over the hull of both intervals, which is the supremum
//! over the points they represent.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frostman::{max_mass, MassDistribution};
use crate::sampling::{best_by_index, indexed_rng};
use crate::ultra_tree::{DiamTree, TreeAddress};

/// Leaves beyond which exhaustive pair enumeration is refused.
pub const EXHAUSTIVE_LEAF_LIMIT: usize = 1 << 13;
/// Node enumeration cap for [`HolderMap::range_coverage`].
pub const COVERAGE_NODE_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct HolderMap {
    tree: DiamTree,
    measure: MassDistribution,
    s: f64,
    order_constant: f64,
}

/// `g` at a node: the left end of its mass interval and the interval length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValue {
    pub value: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub max_ratio: f64,
    pub attaining_pair: Option<(TreeAddress, TreeAddress)>,
    pub pairs: usize,
}

impl HolderMap {
    /// Builds `g` from the maximal Frostman measure of exponent `s`.
    pub fn new(tree: DiamTree, s: f64) -> Result<Self> {
        let measure = max_mass(&tree, s)?;
        Self::with_measure(tree, measure)
    }

    pub fn with_measure(tree: DiamTree, measure: MassDistribution) -> Result<Self> {
        // shape check
        measure.locate(&tree, &[])?;
        let s = measure.s();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::NonPositiveExponent(s));
        }
        Ok(Self {
            tree,
            measure,
            s,
            // the lexicographic order on a coding tree is 1-monotone
            order_constant: 1.0,
        })
    }

    pub fn tree(&self) -> &DiamTree {
        &self.tree
    }

    pub fn measure(&self) -> &MassDistribution {
        &self.measure
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn total(&self) -> f64 {
        self.measure.total()
    }

    pub fn order_constant(&self) -> f64 {
        self.order_constant
    }

    /// `C^s`, the Hölder constant `g` is guaranteed to respect.
    pub fn holder_constant_bound(&self) -> f64 {
        self.order_constant.powf(self.s)
    }

    pub fn eval_g(&self, address: &[u32]) -> Result<GValue> {
        let (value, uncertainty) = self.measure.locate(&self.tree, address)?;
        Ok(GValue { value, uncertainty })
    }

    /// Hölder ratio between two leaves over the hull of their mass
    /// intervals. Identical addresses give `None`.
    pub fn pair_ratio(&self, a: &[u32], b: &[u32]) -> Result<Option<f64>> {
        if a == b {
            return Ok(None);
        }
        let d = self.tree.tree_distance(a, b)?;
        let (ga, gb) = (self.eval_g(a)?, self.eval_g(b)?);
        let (lo, hi) = if a < b { (ga, gb) } else { (gb, ga) };
        let spread = hi.value + hi.uncertainty - lo.value;
        Ok(Some(spread / d.powf(self.s)))
    }

    /// Largest pair ratio over `pair_count` random leaf pairs. Pair `i` is
    /// drawn from its own generator seeded by `(seed, i)`, so the result does
    /// not depend on scheduling.
    pub fn holder_estimate(&self, pair_count: usize, seed: u64) -> Result<HolderEstimate> {
        if pair_count == 0 {
            return Err(Error::InvalidConfig("pair_count must be at least 1".into()));
        }
        if self.tree.leaf_count() < 2 {
            return Ok(HolderEstimate {
                max_ratio: 0.0,
                attaining_pair: None,
                pairs: 0,
            });
        }
        let results: Vec<Result<Option<(f64, TreeAddress, TreeAddress)>>> = (0..pair_count)
            .into_par_iter()
            .map(|i| {
                let mut rng = indexed_rng(seed, STREAM_G_PAIRS, i as u64);
                let a = self.tree.sample_leaf(&mut rng);
                let b = self.tree.sample_leaf(&mut rng);
                Ok(self
                    .pair_ratio(a.digits(), b.digits())?
                    .map(|r| (r, a, b)))
            })
            .collect();
        let mut scored = Vec::with_capacity(results.len());
        for r in results {
            scored.push(r?);
        }
        let pairs = scored.iter().filter(|s| s.is_some()).count();
        Ok(summarize(best_by_index(&scored), pairs))
    }

    /// Largest pair ratio over every pair of leaves.
    pub fn holder_exhaustive(&self) -> Result<HolderEstimate> {
        let leaves = self.tree.leaf_addresses(EXHAUSTIVE_LEAF_LIMIT)?;
        let spans: Vec<GValue> = leaves
            .iter()
            .map(|l| self.eval_g(l.digits()))
            .collect::<Result<_>>()?;
        let rows: Vec<Option<(f64, usize, usize)>> = (0..leaves.len())
            .into_par_iter()
            .map(|i| {
                let mut best: Option<(f64, usize, usize)> = None;
                for j in i + 1..leaves.len() {
                    // leaves are in lexicographic order, so i < j
                    let d = self
                        .tree
                        .tree_distance(leaves[i].digits(), leaves[j].digits())
                        .expect("leaf addresses");
                    let spread = spans[j].value + spans[j].uncertainty - spans[i].value;
                    let ratio = spread / d.powf(self.s);
                    if best.is_none_or(|(b, _, _)| ratio > b) {
                        best = Some((ratio, i, j));
                    }
                }
                best
            })
            .collect();
        let n = leaves.len();
        let best = best_by_index(&rows).map(|(r, i, j)| (r, leaves[i].clone(), leaves[j].clone()));
        Ok(summarize(best, n * n.saturating_sub(1) / 2))
    }

    /// Values of `g` at every node of depth `m` (leaves above depth `m` are
    /// taken as they are), in lexicographic order.
    pub fn level_values(&self, m: usize) -> Result<Vec<GValue>> {
        if let DiamTree::SelfSimilar(rule) = &self.tree {
            if m > rule.depth() {
                return Err(Error::InvalidConfig(format!(
                    "depth {m} exceeds the tree horizon {}",
                    rule.depth()
                )));
            }
        }
        let mut values = Vec::new();
        let mut count = 0usize;
        let mut stack = vec![TreeAddress::root()];
        while let Some(addr) = stack.pop() {
            count += 1;
            if count > COVERAGE_NODE_LIMIT {
                return Err(Error::TooLarge {
                    what: "level enumeration",
                    limit: COVERAGE_NODE_LIMIT,
                    actual: count,
                });
            }
            let info = self.tree.resolve(addr.digits())?;
            if addr.len() == m || info.is_leaf() {
                values.push(self.eval_g(addr.digits())?);
            } else {
                for i in (0..info.child_count as u32).rev() {
                    stack.push(addr.child(i));
                }
            }
        }
        Ok(values)
    }

    /// Largest gap between consecutive values of `g` at depth `m`, counting
    /// the final gap up to the total mass.
    pub fn range_coverage(&self, m: usize) -> Result<f64> {
        let values = self.level_values(m)?;
        let mut gap = 0.0f64;
        for w in values.windows(2) {
            gap = gap.max(w[1].value - w[0].value);
        }
        if let Some(last) = values.last() {
            gap = gap.max(self.total() - last.value);
        }
        Ok(gap)
    }
}

const STREAM_G_PAIRS: u64 = 0x6761;

fn summarize(best: Option<(f64, TreeAddress, TreeAddress)>, pairs: usize) -> HolderEstimate {
    match best {
        Some((max_ratio, a, b)) => HolderEstimate {
            max_ratio,
            attaining_pair: Some((a, b)),
            pairs,
        },
        None => HolderEstimate {
            max_ratio: 0.0,
            attaining_pair: None,
            pairs,
        },
    }
}

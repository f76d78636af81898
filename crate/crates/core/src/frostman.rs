//! Frostman-type mass distributions on diameter trees.
//!
//! In an ultrametric space every set lies in a ball (a tree node) of the
//! same diameter, so `μ(E) <= diam(E)^s` for all sets reduces to
//! `μ(N) <= diam(N)^s` for every node `N`. The largest admissible total mass
//! then follows from a bottom-up pass: `cap(leaf) = diam^s` and
//! `cap(N) = min(diam(N)^s, Σ cap(children))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric_core::DERIVED_TOLERANCE;
use crate::ultra_tree::{DiamTree, TreeAddress};

/// Node count above which [`verify_frostman`] refuses to enumerate.
pub const VERIFY_NODE_LIMIT: usize = 1 << 22;
/// Largest tree [`antichain_oracle`] enumerates subsets of.
pub const ANTICHAIN_NODE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
enum MassRepr {
    /// Mass per arena node id.
    Explicit(Vec<f64>),
    /// Child `i` receives `weights[i]` of its parent's mass at every level.
    SelfSimilar {
        total: f64,
        weights: Vec<f64>,
        /// `offsets[i] = Σ_{j<i} weights[j]`.
        offsets: Vec<f64>,
        depth: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassDistribution {
    s: f64,
    repr: MassRepr,
}

impl MassDistribution {
    /// A measure given node by node, indexed like the explicit tree's arena.
    pub fn from_node_masses(s: f64, masses: Vec<f64>) -> Self {
        Self {
            s,
            repr: MassRepr::Explicit(masses),
        }
    }

    /// A self-similar measure: the root carries `total` and each child takes
    /// the fraction `weights[i]` of its parent.
    pub fn self_similar(s: f64, total: f64, weights: Vec<f64>, depth: usize) -> Self {
        let offsets = weights
            .iter()
            .scan(0.0, |acc, &w| {
                let start = *acc;
                *acc += w;
                Some(start)
            })
            .collect();
        Self {
            s,
            repr: MassRepr::SelfSimilar {
                total,
                weights,
                offsets,
                depth,
            },
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn total(&self) -> f64 {
        match &self.repr {
            MassRepr::Explicit(m) => m.first().copied().unwrap_or(0.0),
            MassRepr::SelfSimilar { total, .. } => *total,
        }
    }

    fn check_shape(&self, tree: &DiamTree) -> Result<()> {
        match (&self.repr, tree) {
            (MassRepr::Explicit(m), DiamTree::Explicit(t)) if m.len() == t.len() => Ok(()),
            (MassRepr::Explicit(m), DiamTree::Explicit(t)) => Err(Error::ShapeMismatch(format!(
                "{} masses for {} nodes",
                m.len(),
                t.len()
            ))),
            (MassRepr::SelfSimilar { weights, depth, .. }, DiamTree::SelfSimilar(rule))
                if weights.len() == rule.branching() && *depth == rule.depth() =>
            {
                Ok(())
            }
            (MassRepr::SelfSimilar { .. }, DiamTree::SelfSimilar(_)) => Err(
                Error::ShapeMismatch("branching or depth differs from the rule".into()),
            ),
            _ => Err(Error::ShapeMismatch(
                "explicit measures need explicit trees and rule measures need rule trees".into(),
            )),
        }
    }

    /// Mass of the node at `address`.
    pub fn mass_at(&self, tree: &DiamTree, address: &[u32]) -> Result<f64> {
        self.locate(tree, address).map(|(_, mass)| mass)
    }

    /// `(μ of everything strictly before the node in lexicographic order,
    /// μ(node))`, accumulated from earlier-sibling masses along the path.
    ///
    /// Offsets are folded from the node upwards and clamped to each
    /// ancestor's mass, which keeps the result monotone in the address under
    /// rounding.
    pub fn locate(&self, tree: &DiamTree, address: &[u32]) -> Result<(f64, f64)> {
        self.check_shape(tree)?;
        tree.resolve(address)?;
        // (earlier-sibling mass, parent mass) per level
        let mut levels = Vec::with_capacity(address.len());
        let mass = match (&self.repr, tree) {
            (MassRepr::Explicit(masses), DiamTree::Explicit(t)) => {
                let mut id = 0;
                for &digit in address {
                    let children = &t.node(id).children;
                    let earlier: f64 = children[..digit as usize].iter().map(|&c| masses[c]).sum();
                    levels.push((earlier, masses[id]));
                    id = children[digit as usize];
                }
                masses[id]
            }
            (MassRepr::SelfSimilar { total, weights, .. }, _) => {
                let mut mass = *total;
                for &digit in address {
                    let earlier: f64 = weights[..digit as usize].iter().map(|w| mass * w).sum();
                    levels.push((earlier, mass));
                    mass *= weights[digit as usize];
                }
                mass
            }
            _ => unreachable!("shape checked above"),
        };
        let before = levels
            .iter()
            .rev()
            .fold(0.0, |off, &(earlier, parent)| (earlier + off).min(parent));
        Ok((before, mass))
    }
}

/// The measure of largest total mass satisfying `μ(N) <= diam(N)^s` at every
/// node; children split their parent's mass in proportion to their caps.
pub fn max_mass(tree: &DiamTree, s: f64) -> Result<MassDistribution> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::NonPositiveExponent(s));
    }
    match tree {
        DiamTree::Explicit(t) => {
            let mut cap = vec![0.0; t.len()];
            for id in t.post_order() {
                let node = t.node(id);
                let own = node.diam.powf(s);
                cap[id] = if node.children.is_empty() {
                    own
                } else {
                    own.min(node.children.iter().map(|&c| cap[c]).sum())
                };
            }
            let mut mass = vec![0.0; t.len()];
            mass[0] = cap[0];
            let mut stack = vec![0usize];
            while let Some(id) = stack.pop() {
                let children = &t.node(id).children;
                let budget: f64 = children.iter().map(|&c| cap[c]).sum();
                for &c in children {
                    mass[c] = if budget > 0.0 {
                        mass[id] * cap[c] / budget
                    } else {
                        0.0
                    };
                    stack.push(c);
                }
            }
            Ok(MassDistribution::from_node_masses(s, mass))
        }
        DiamTree::SelfSimilar(rule) => {
            // cap is homogeneous of degree s in the diameter, so
            // cap(node) = diam(node)^s * factor(levels below the node).
            let scaled: Vec<f64> = rule.ratios().iter().map(|r| r.powf(s)).collect();
            let spread: f64 = scaled.iter().sum();
            let mut factor = 1.0f64;
            for _ in 0..rule.depth() {
                factor = (spread * factor).min(1.0);
            }
            let total = rule.root_diam().powf(s) * factor;
            let weights = scaled.iter().map(|w| w / spread).collect();
            Ok(MassDistribution::self_similar(s, total, weights, rule.depth()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrostmanCheck {
    pub ok: bool,
    /// Node with the least slack `diam^s − mass`.
    pub worst_node: TreeAddress,
    pub slack: f64,
    /// Largest `|mass(N) − Σ mass(children)|` over internal nodes.
    pub additivity_error: f64,
}

/// Re-checks the node caps `mass <= diam^s` and additivity at every node,
/// both to [`DERIVED_TOLERANCE`].
pub fn verify_frostman(
    tree: &DiamTree,
    measure: &MassDistribution,
    s: f64,
) -> Result<FrostmanCheck> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::NonPositiveExponent(s));
    }
    measure.check_shape(tree)?;
    let mut worst = (f64::INFINITY, TreeAddress::root());
    let mut additivity_error = 0.0f64;
    let mut failure = None;
    let mut child = Vec::new();
    tree.visit(VERIFY_NODE_LIMIT, |addr, info| {
        let mass = match measure.mass_at(tree, addr) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        let slack = info.diam.powf(s) - mass;
        if slack < worst.0 {
            worst = (slack, TreeAddress::new(addr.to_vec()));
        }
        if info.child_count > 0 {
            child.clear();
            child.extend_from_slice(addr);
            child.push(0);
            let mut sum = 0.0;
            for i in 0..info.child_count as u32 {
                *child.last_mut().expect("pushed") = i;
                sum += measure.mass_at(tree, &child).unwrap_or(f64::NAN);
            }
            additivity_error = additivity_error.max((mass - sum).abs());
        }
        if mass < 0.0 {
            additivity_error = f64::INFINITY;
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let ok = worst.0 >= -DERIVED_TOLERANCE && additivity_error <= DERIVED_TOLERANCE;
    Ok(FrostmanCheck {
        ok,
        worst_node: worst.1,
        slack: worst.0,
        additivity_error,
    })
}

/// Minimum of `Σ_{N∈A} diam(N)^s` over antichains `A` meeting every
/// root-to-leaf path (test oracle for [`max_mass`]).
pub fn antichain_oracle(tree: &DiamTree, s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::NonPositiveExponent(s));
    }
    let count = tree.node_count();
    if count > ANTICHAIN_NODE_LIMIT {
        return Err(Error::TooLarge {
            what: "antichain enumeration",
            limit: ANTICHAIN_NODE_LIMIT,
            actual: count,
        });
    }
    let t = tree.to_explicit(ANTICHAIN_NODE_LIMIT)?;
    let n = t.len();
    // ancestors[v] includes v itself
    let mut ancestors = vec![0u32; n];
    let mut stack = vec![(0usize, 0u32)];
    while let Some((id, above)) = stack.pop() {
        ancestors[id] = above | (1 << id);
        for &c in &t.node(id).children {
            stack.push((c, ancestors[id]));
        }
    }
    let leaves: Vec<usize> = (0..n).filter(|&v| t.node(v).children.is_empty()).collect();
    let weight: Vec<f64> = (0..n).map(|v| t.node(v).diam.powf(s)).collect();

    let mut best = f64::INFINITY;
    for set in 1u32..(1u32 << n) {
        let is_antichain = (0..n)
            .filter(|&v| set & (1 << v) != 0)
            .all(|v| set & ancestors[v] == 1 << v);
        let covers = leaves.iter().all(|&leaf| set & ancestors[leaf] != 0);
        if is_antichain && covers {
            let sum: f64 = (0..n)
                .filter(|&v| set & (1 << v) != 0)
                .map(|v| weight[v])
                .sum();
            best = best.min(sum);
        }
    }
    Ok(best)
}

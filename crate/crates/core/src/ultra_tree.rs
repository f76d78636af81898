//! Diameter-labelled trees coding compact ultrametric spaces.
//!
//! A point is coded by the sequence of child indices on its root-to-leaf
//! path. Two points whose codes first differ below node `N` are exactly
//! `diam(N)` apart, and ordering points lexicographically by code gives an
//! order in which every interval has the diameter of its endpoints.
//!
//! Trees are either explicit (an arena of nodes) or generated on demand from
//! a [`SelfSimilarRule`]. Leaves of positive diameter are truncation leaves:
//! they stand for an unexpanded subtree, so results computed on such trees
//! hold "at precision m" for the horizon `m`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::{common_prefix_len, validate_metric, FiniteMetricSpace, LinearOrder};
use crate::monotone::{monotonicity_constant, OrderAssignment};

/// Largest number of leaves [`lex_order`] will turn into a metric space.
pub const LEX_ORDER_LEAF_LIMIT: usize = 512;

/// The code of a node: child indices from the root down.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeAddress(Vec<u32>);

impl TreeAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn new(digits: Vec<u32>) -> Self {
        Self(digits)
    }

    pub fn digits(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: u32) -> Self {
        let mut digits = self.0.clone();
        digits.push(index);
        Self(digits)
    }

    pub fn common_prefix_len(&self, other: &TreeAddress) -> usize {
        common_prefix_len(&self.0, &other.0)
    }
}

impl From<Vec<u32>> for TreeAddress {
    fn from(digits: Vec<u32>) -> Self {
        Self(digits)
    }
}

impl fmt::Display for TreeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("()");
        }
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitNode {
    pub diam: f64,
    #[serde(default)]
    pub children: Vec<usize>,
    /// The point of the coded space sitting at this leaf, if any.
    #[serde(default)]
    pub point: Option<usize>,
}

/// An arena-backed tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTree {
    nodes: Vec<ExplicitNode>,
}

impl ExplicitTree {
    pub fn new(nodes: Vec<ExplicitNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidTree("no nodes".into()));
        }
        let mut parent = vec![None; nodes.len()];
        let mut points = std::collections::HashSet::new();
        for (id, node) in nodes.iter().enumerate() {
            if !(node.diam.is_finite() && node.diam >= 0.0) {
                return Err(Error::InvalidTree(format!(
                    "node {id} has invalid diameter {}",
                    node.diam
                )));
            }
            if let Some(p) = node.point {
                if !node.children.is_empty() {
                    return Err(Error::InvalidTree(format!(
                        "internal node {id} carries point {p}"
                    )));
                }
                if !points.insert(p) {
                    return Err(Error::InvalidTree(format!("point {p} appears twice")));
                }
            }
            for &child in &node.children {
                if child >= nodes.len() || child == 0 {
                    return Err(Error::InvalidTree(format!(
                        "node {id} has invalid child {child}"
                    )));
                }
                if parent[child].replace(id).is_some() {
                    return Err(Error::InvalidTree(format!(
                        "node {child} has two parents"
                    )));
                }
                if nodes[child].diam >= node.diam {
                    return Err(Error::InvalidTree(format!(
                        "child {child} (diam {}) is not smaller than parent {id} (diam {})",
                        nodes[child].diam, node.diam
                    )));
                }
            }
        }
        // Every non-root node has a parent and strict diameter decrease rules
        // out cycles, so all nodes hang off the root.
        if let Some(orphan) = (1..nodes.len()).find(|&id| parent[id].is_none()) {
            return Err(Error::InvalidTree(format!("node {orphan} is unreachable")));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[ExplicitNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &ExplicitNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids such that children come before their parent.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
            } else {
                stack.push((id, true));
                for &c in self.nodes[id].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Node id at `address`.
    pub fn locate(&self, address: &[u32]) -> Result<usize> {
        let mut id = 0;
        for (depth, &digit) in address.iter().enumerate() {
            let children = &self.nodes[id].children;
            id = *children.get(digit as usize).ok_or_else(|| Error::InvalidAddress {
                address: TreeAddress::new(address.to_vec()).to_string(),
                reason: format!(
                    "digit {digit} at depth {depth} but the node has {} children",
                    children.len()
                ),
            })?;
        }
        Ok(id)
    }
}

/// A uniform-branching tree where child `i` scales its parent's diameter by
/// `ratios[i]`, expanded to a fixed depth horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarRule {
    ratios: Vec<f64>,
    d0: f64,
    depth: usize,
}

impl SelfSimilarRule {
    /// `b` children per node, all with ratio `r`.
    pub fn uniform(b: usize, r: f64, d0: f64, depth: usize) -> Result<Self> {
        Self::with_ratios(vec![r; b], d0, depth)
    }

    pub fn with_ratios(ratios: Vec<f64>, d0: f64, depth: usize) -> Result<Self> {
        if ratios.len() < 2 {
            return Err(Error::InvalidTree(format!(
                "branching must be at least 2, got {}",
                ratios.len()
            )));
        }
        if ratios.len() > u32::MAX as usize {
            return Err(Error::InvalidTree("branching too large".into()));
        }
        if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::InvalidTree(format!("ratio {r} is not in (0, 1)")));
        }
        if !(d0.is_finite() && d0 > 0.0) {
            return Err(Error::InvalidTree(format!(
                "root diameter must be positive, got {d0}"
            )));
        }
        Ok(Self { ratios, d0, depth })
    }

    pub fn branching(&self) -> usize {
        self.ratios.len()
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn root_diam(&self) -> f64 {
        self.d0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The common ratio when all children scale alike.
    pub fn uniform_ratio(&self) -> Option<f64> {
        let r = self.ratios[0];
        self.ratios.iter().all(|&x| x == r).then_some(r)
    }

    pub fn with_depth(&self, depth: usize) -> Self {
        Self {
            depth,
            ..self.clone()
        }
    }

    fn diam_at(&self, address: &[u32]) -> f64 {
        match self.uniform_ratio() {
            Some(r) => self.d0 * r.powi(address.len() as i32),
            None => address
                .iter()
                .fold(self.d0, |d, &i| d * self.ratios[i as usize]),
        }
    }
}

/// Facts about one node, as seen from its address.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeInfo {
    pub diam: f64,
    pub child_count: usize,
    pub point: Option<usize>,
    /// Arena id for explicit trees.
    pub id: Option<usize>,
}

impl NodeInfo {
    pub fn is_leaf(&self) -> bool {
        self.child_count == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiamTree {
    Explicit(ExplicitTree),
    SelfSimilar(SelfSimilarRule),
}

impl From<ExplicitTree> for DiamTree {
    fn from(tree: ExplicitTree) -> Self {
        DiamTree::Explicit(tree)
    }
}

impl From<SelfSimilarRule> for DiamTree {
    fn from(rule: SelfSimilarRule) -> Self {
        DiamTree::SelfSimilar(rule)
    }
}

impl DiamTree {
    pub fn root_diam(&self) -> f64 {
        match self {
            DiamTree::Explicit(t) => t.nodes[0].diam,
            DiamTree::SelfSimilar(rule) => rule.d0,
        }
    }

    /// Length of the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        match self {
            DiamTree::Explicit(t) => {
                let mut best = 0;
                let mut stack = vec![(0usize, 0usize)];
                while let Some((id, depth)) = stack.pop() {
                    best = best.max(depth);
                    stack.extend(t.nodes[id].children.iter().map(|&c| (c, depth + 1)));
                }
                best
            }
            DiamTree::SelfSimilar(rule) => rule.depth,
        }
    }

    /// Total node count, saturating at `usize::MAX`.
    pub fn node_count(&self) -> usize {
        match self {
            DiamTree::Explicit(t) => t.nodes.len(),
            DiamTree::SelfSimilar(rule) => {
                let b = rule.branching();
                let mut level = 1usize;
                let mut total = 1usize;
                for _ in 0..rule.depth {
                    level = level.saturating_mul(b);
                    total = total.saturating_add(level);
                }
                total
            }
        }
    }

    /// Leaf count, saturating at `usize::MAX`.
    pub fn leaf_count(&self) -> usize {
        match self {
            DiamTree::Explicit(t) => t.nodes.iter().filter(|n| n.children.is_empty()).count(),
            DiamTree::SelfSimilar(rule) => (0..rule.depth)
                .fold(1usize, |acc, _| acc.saturating_mul(rule.branching())),
        }
    }

    pub fn resolve(&self, address: &[u32]) -> Result<NodeInfo> {
        match self {
            DiamTree::Explicit(t) => {
                let id = t.locate(address)?;
                let node = &t.nodes[id];
                Ok(NodeInfo {
                    diam: node.diam,
                    child_count: node.children.len(),
                    point: node.point,
                    id: Some(id),
                })
            }
            DiamTree::SelfSimilar(rule) => {
                check_rule_address(rule, address)?;
                Ok(NodeInfo {
                    diam: rule.diam_at(address),
                    child_count: if address.len() < rule.depth {
                        rule.branching()
                    } else {
                        0
                    },
                    point: None,
                    id: None,
                })
            }
        }
    }

    pub fn node_diam(&self, address: &[u32]) -> Result<f64> {
        self.resolve(address).map(|n| n.diam)
    }

    /// The leaf at `address`; errors if the address names an internal node.
    pub fn point_at(&self, address: &[u32]) -> Result<NodeInfo> {
        let info = self.resolve(address)?;
        if !info.is_leaf() {
            return Err(Error::InvalidAddress {
                address: TreeAddress::new(address.to_vec()).to_string(),
                reason: format!("names an internal node with {} children", info.child_count),
            });
        }
        Ok(info)
    }

    /// Diameter of the node at the longest common prefix of the two
    /// addresses, or 0 for identical addresses.
    ///
    /// Addresses where one properly extends the other name nested nodes, not
    /// two points, and are reported as [`Error::Undecided`].
    pub fn tree_distance(&self, a: &[u32], b: &[u32]) -> Result<f64> {
        self.resolve(a)?;
        self.resolve(b)?;
        if a == b {
            return Ok(0.0);
        }
        let common = common_prefix_len(a, b);
        if common == a.len().min(b.len()) {
            return Err(Error::Undecided { depth: common });
        }
        self.node_diam(&a[..common])
    }

    /// Pre-order walk over every node, refusing trees with more than
    /// `limit` nodes.
    pub fn visit(&self, limit: usize, mut f: impl FnMut(&[u32], &NodeInfo)) -> Result<()> {
        let count = self.node_count();
        if count > limit {
            return Err(Error::TooLarge {
                what: "node enumeration",
                limit,
                actual: count,
            });
        }
        let mut address = Vec::new();
        self.visit_from(&mut address, &mut f);
        Ok(())
    }

    fn visit_from(&self, address: &mut Vec<u32>, f: &mut impl FnMut(&[u32], &NodeInfo)) {
        // Addresses produced here are valid by construction.
        let info = self.resolve(address).expect("address from traversal");
        f(address, &info);
        for i in 0..info.child_count as u32 {
            address.push(i);
            self.visit_from(address, f);
            address.pop();
        }
    }

    /// Leaf addresses in lexicographic order.
    pub fn leaf_addresses(&self, limit: usize) -> Result<Vec<TreeAddress>> {
        let count = self.leaf_count();
        if count > limit {
            return Err(Error::TooLarge {
                what: "leaf enumeration",
                limit,
                actual: count,
            });
        }
        let mut leaves = Vec::with_capacity(count);
        self.visit(usize::MAX, |addr, info| {
            if info.is_leaf() {
                leaves.push(TreeAddress::new(addr.to_vec()));
            }
        })?;
        Ok(leaves)
    }

    /// A uniformly random root-to-leaf walk.
    pub fn sample_leaf<R: Rng + ?Sized>(&self, rng: &mut R) -> TreeAddress {
        let mut digits = Vec::new();
        match self {
            DiamTree::Explicit(t) => {
                let mut id = 0;
                while !t.nodes[id].children.is_empty() {
                    let children = &t.nodes[id].children;
                    let i = rng.random_range(0..children.len());
                    digits.push(i as u32);
                    id = children[i];
                }
            }
            DiamTree::SelfSimilar(rule) => {
                let b = rule.branching() as u32;
                digits.extend((0..rule.depth).map(|_| rng.random_range(0..b)));
            }
        }
        TreeAddress(digits)
    }

    /// Materialize the tree as an arena (pre-order ids).
    pub fn to_explicit(&self, limit: usize) -> Result<ExplicitTree> {
        if let DiamTree::Explicit(t) = self {
            return Ok(t.clone());
        }
        let mut nodes: Vec<ExplicitNode> = Vec::new();
        let mut stack: Vec<usize> = Vec::new(); // ids along the current path
        self.visit(limit, |addr, info| {
            stack.truncate(addr.len());
            let id = nodes.len();
            nodes.push(ExplicitNode {
                diam: info.diam,
                children: Vec::new(),
                point: info.point,
            });
            if let Some(&parent) = stack.last() {
                nodes[parent].children.push(id);
            }
            stack.push(id);
        })?;
        ExplicitTree::new(nodes)
    }

    /// Every diameter multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidTree(format!("invalid scale factor {factor}")));
        }
        Ok(match self {
            DiamTree::Explicit(t) => {
                let nodes = t
                    .nodes
                    .iter()
                    .map(|n| ExplicitNode {
                        diam: n.diam * factor,
                        ..n.clone()
                    })
                    .collect();
                DiamTree::Explicit(ExplicitTree::new(nodes)?)
            }
            DiamTree::SelfSimilar(rule) => DiamTree::SelfSimilar(SelfSimilarRule {
                d0: rule.d0 * factor,
                ..rule.clone()
            }),
        })
    }

    /// Check that diameters along every root-to-leaf path strictly decrease.
    pub fn check_diameter_decay(&self, limit: usize) -> Result<()> {
        let mut path: Vec<f64> = Vec::new();
        let mut failure = None;
        self.visit(limit, |addr, info| {
            path.truncate(addr.len());
            if let Some(&parent) = path.last() {
                if info.diam >= parent && failure.is_none() {
                    failure = Some(TreeAddress::new(addr.to_vec()));
                }
            }
            path.push(info.diam);
        })?;
        match failure {
            Some(addr) => Err(Error::InvalidTree(format!(
                "diameter does not decrease at {addr}"
            ))),
            None => Ok(()),
        }
    }
}

fn check_rule_address(rule: &SelfSimilarRule, address: &[u32]) -> Result<()> {
    let invalid = |reason: String| Error::InvalidAddress {
        address: TreeAddress::new(address.to_vec()).to_string(),
        reason,
    };
    if address.len() > rule.depth {
        return Err(invalid(format!(
            "length {} exceeds the depth horizon {}",
            address.len(),
            rule.depth
        )));
    }
    if let Some(&d) = address.iter().find(|&&d| d as usize >= rule.branching()) {
        return Err(invalid(format!(
            "digit {d} out of range for branching {}",
            rule.branching()
        )));
    }
    Ok(())
}

/// A tree built from a finite ultrametric space, with each point's code.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    pub tree: DiamTree,
    pub addresses: Vec<TreeAddress>,
}

/// Splits the space into the classes of `d(x, y) < diam`, recursively.
///
/// Children are ordered by decreasing diameter, ties broken by the smallest
/// point index they contain.
pub fn build_partition_tree(space: &FiniteMetricSpace) -> Result<PartitionTree> {
    let report = validate_metric(space.matrix())?;
    if !report.ultrametric {
        return Err(Error::NotUltrametric(report.witness.expect("witness")));
    }
    let mut nodes = Vec::new();
    let mut addresses = vec![TreeAddress::root(); space.len()];
    let all: Vec<usize> = (0..space.len()).collect();
    let mut path = Vec::new();
    partition(space, &all, &mut nodes, &mut addresses, &mut path);
    Ok(PartitionTree {
        tree: DiamTree::Explicit(ExplicitTree::new(nodes)?),
        addresses,
    })
}

fn subset_diameter(space: &FiniteMetricSpace, members: &[usize]) -> f64 {
    let mut diam = 0.0f64;
    for (i, &x) in members.iter().enumerate() {
        for &y in &members[i + 1..] {
            diam = diam.max(space.distance(x, y));
        }
    }
    diam
}

fn partition(
    space: &FiniteMetricSpace,
    members: &[usize],
    nodes: &mut Vec<ExplicitNode>,
    addresses: &mut [TreeAddress],
    path: &mut Vec<u32>,
) -> usize {
    let id = nodes.len();
    let diam = subset_diameter(space, members);
    if members.len() == 1 {
        nodes.push(ExplicitNode {
            diam: 0.0,
            children: Vec::new(),
            point: Some(members[0]),
        });
        addresses[members[0]] = TreeAddress::new(path.clone());
        return id;
    }
    nodes.push(ExplicitNode {
        diam,
        children: Vec::new(),
        point: None,
    });

    // `d < diam` is an equivalence relation in an ultrametric space, so
    // comparing against one representative per class suffices.
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &p in members {
        match classes
            .iter_mut()
            .find(|class| space.distance(class[0], p) < diam)
        {
            Some(class) => class.push(p),
            None => classes.push(vec![p]),
        }
    }
    let mut keyed: Vec<(f64, usize, Vec<usize>)> = classes
        .into_iter()
        .map(|c| (subset_diameter(space, &c), c[0], c))
        .collect();
    // members are ascending, so c[0] is the smallest index in the class
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    for (i, (_, _, class)) in keyed.into_iter().enumerate() {
        path.push(i as u32);
        let child = partition(space, &class, nodes, addresses, path);
        path.pop();
        nodes[id].children.push(child);
    }
    id
}

/// The order of leaves by lexicographic address, with its monotonicity
/// constant measured on the tree's own ultrametric.
///
/// Leaves carrying points are ordered by point index; other leaves are
/// numbered in address order.
pub fn lex_order(tree: &DiamTree) -> Result<OrderAssignment> {
    let leaves = tree.leaf_addresses(LEX_ORDER_LEAF_LIMIT)?;
    let labels: Vec<usize> = leaves
        .iter()
        .enumerate()
        .map(|(i, addr)| tree.resolve(addr.digits()).map(|n| n.point.unwrap_or(i)))
        .collect::<Result<_>>()?;
    let n = leaves.len();
    // slot[label] = index into `leaves`
    let mut slot = vec![usize::MAX; n];
    for (i, &label) in labels.iter().enumerate() {
        if label >= n || slot[label] != usize::MAX {
            return Err(Error::InvalidTree(format!(
                "leaf points must be 0..{n} without gaps"
            )));
        }
        slot[label] = i;
    }
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let d = tree.tree_distance(leaves[slot[a]].digits(), leaves[slot[b]].digits())?;
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    let space = FiniteMetricSpace::new(dist)?;
    let order = LinearOrder::new(labels)?;
    let m = monotonicity_constant(&space, &order)?;
    Ok(OrderAssignment {
        order,
        c: m.c,
        certificate: m.certificate,
    })
}

/// `tree.json`: a recursive `{"diam", "children", "point"?}` object or
/// `{"selfsimilar": {"b", "r", "d0", "depth"}}`. A `ratios` array may replace
/// `b`/`r` for per-child ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeFile {
    SelfSimilar { selfsimilar: SelfSimilarFile },
    Node(NodeFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfSimilarFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    pub d0: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeFile {
    pub diam: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
}

impl TreeFile {
    pub fn into_tree(self) -> Result<DiamTree> {
        match self {
            TreeFile::SelfSimilar { selfsimilar: s } => {
                let rule = match (s.ratios, s.b, s.r) {
                    (Some(ratios), None, None) => {
                        SelfSimilarRule::with_ratios(ratios, s.d0, s.depth)?
                    }
                    (None, Some(b), Some(r)) => SelfSimilarRule::uniform(b, r, s.d0, s.depth)?,
                    _ => {
                        return Err(Error::InvalidTree(
                            "selfsimilar needs either `b` and `r` or `ratios`".into(),
                        ))
                    }
                };
                Ok(DiamTree::SelfSimilar(rule))
            }
            TreeFile::Node(root) => {
                let mut nodes = Vec::new();
                flatten(&root, &mut nodes);
                Ok(DiamTree::Explicit(ExplicitTree::new(nodes)?))
            }
        }
    }

    pub fn from_tree(tree: &DiamTree) -> Self {
        match tree {
            DiamTree::Explicit(t) => TreeFile::Node(nest(t, 0)),
            DiamTree::SelfSimilar(rule) => {
                let (b, r, ratios) = match rule.uniform_ratio() {
                    Some(r) => (Some(rule.branching()), Some(r), None),
                    None => (None, None, Some(rule.ratios.clone())),
                };
                TreeFile::SelfSimilar {
                    selfsimilar: SelfSimilarFile {
                        b,
                        r,
                        ratios,
                        d0: rule.d0,
                        depth: rule.depth,
                    },
                }
            }
        }
    }
}

fn flatten(node: &NodeFile, nodes: &mut Vec<ExplicitNode>) -> usize {
    let id = nodes.len();
    nodes.push(ExplicitNode {
        diam: node.diam,
        children: Vec::new(),
        point: node.point,
    });
    for child in &node.children {
        let c = flatten(child, nodes);
        nodes[id].children.push(c);
    }
    id
}

fn nest(tree: &ExplicitTree, id: usize) -> NodeFile {
    let node = &tree.nodes[id];
    NodeFile {
        diam: node.diam,
        children: node.children.iter().map(|&c| nest(tree, c)).collect(),
        point: node.point,
    }
}

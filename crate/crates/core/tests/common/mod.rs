//! Random instance generators and brute-force oracles shared by the
//! integration suites. Nothing here calls into the code under test beyond
//! constructors.
#![allow(dead_code)]

use cubemap_core::metric_core::FiniteMetricSpace;
use cubemap_core::ultra_tree::{DiamTree, ExplicitNode, ExplicitTree};
use rand::seq::SliceRandom;
use rand::Rng;

/// Ultrametric on `n` points from a random dendrogram whose merge heights
/// come from a small random value set.
pub fn random_ultrametric<R: Rng>(rng: &mut R, n: usize) -> FiniteMetricSpace {
    let levels = rng.random_range(1..=6);
    let mut values: Vec<f64> = (0..levels)
        .map(|_| (rng.random_range(1..=40) as f64) / 8.0)
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.dedup();
    let mut dist = vec![vec![0.0; n]; n];
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    split(rng, &labels, &values, 0, &mut dist);
    FiniteMetricSpace::new(dist).expect("ultrametric")
}

fn split<R: Rng>(rng: &mut R, members: &[usize], values: &[f64], level: usize, dist: &mut [Vec<f64>]) {
    if members.len() < 2 {
        return;
    }
    if level == values.len() - 1 {
        // everything left is at the smallest distance
        for &a in members {
            for &b in members {
                if a != b {
                    dist[a][b] = values[level];
                }
            }
        }
        return;
    }
    let parts = rng.random_range(1..=members.len().min(4));
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for &m in members {
        groups[rng.random_range(0..parts)].push(m);
    }
    groups.retain(|g| !g.is_empty());
    for (i, g) in groups.iter().enumerate() {
        for h in &groups[i + 1..] {
            for &a in g {
                for &b in h {
                    dist[a][b] = values[level];
                    dist[b][a] = values[level];
                }
            }
        }
    }
    for g in &groups {
        split(rng, g, values, level + 1, dist);
    }
}

pub fn random_euclidean<R: Rng>(rng: &mut R, n: usize, dim: usize) -> FiniteMetricSpace {
    loop {
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-40..=40) as f64 / 10.0).collect())
            .collect();
        // coincident points are not a metric space
        if let Ok(space) = FiniteMetricSpace::euclidean(&points) {
            return space;
        }
    }
}

/// Random explicit tree with at most `max_nodes` nodes and strictly
/// shrinking diameters; some leaves are points of diameter 0.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> DiamTree {
    let count = rng.random_range(1..=max_nodes);
    let mut parent = vec![usize::MAX; count];
    let mut diam = vec![rng.random_range(0.5..2.0); count];
    for i in 1..count {
        parent[i] = rng.random_range(0..i);
        diam[i] = diam[parent[i]] * rng.random_range(0.05..0.95);
    }
    let mut nodes: Vec<ExplicitNode> = diam
        .iter()
        .map(|&d| ExplicitNode {
            diam: d,
            children: Vec::new(),
            point: None,
        })
        .collect();
    for i in 1..count {
        nodes[parent[i]].children.push(i);
    }
    for node in nodes.iter_mut() {
        if node.children.is_empty() && rng.random_bool(0.25) {
            node.diam = 0.0;
        }
    }
    DiamTree::Explicit(ExplicitTree::new(nodes).expect("valid tree"))
}

/// `max_{a<b} diam([a,b]) / d(a,b)` by direct enumeration of every interval.
pub fn naive_constant(space: &FiniteMetricSpace, seq: &[usize]) -> f64 {
    let mut c: f64 = 1.0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            let mut diam: f64 = 0.0;
            for x in i..=j {
                for y in x + 1..=j {
                    diam = diam.max(space.distance(seq[x], seq[y]));
                }
            }
            c = c.max(diam / space.distance(seq[i], seq[j]));
        }
    }
    c
}

/// Minimal constant over all `n!` orders (Heap's algorithm).
pub fn brute_force(space: &FiniteMetricSpace) -> f64 {
    let n = space.len();
    let mut seq: Vec<usize> = (0..n).collect();
    let mut best = naive_constant(space, &seq);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                seq.swap(0, i);
            } else {
                seq.swap(c[i], i);
            }
            best = best.min(naive_constant(space, &seq));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Every pair `(a, b)` of the order with `diam([a, b]) != d(a, b)`, found by
/// an incremental sweep from each left end.
pub fn interval_mismatches(space: &FiniteMetricSpace, seq: &[usize]) -> usize {
    let mut bad = 0;
    for i in 0..seq.len() {
        let mut diam: f64 = 0.0;
        for j in i + 1..seq.len() {
            for x in i..j {
                diam = diam.max(space.distance(seq[x], seq[j]));
            }
            if diam != space.distance(seq[i], seq[j]) {
                bad += 1;
            }
        }
    }
    bad
}

/// Minimum over antichains covering every leaf of `Σ diam^s`, by subset
/// enumeration over the explicit node list.
pub fn antichain_min(tree: &DiamTree, s: f64) -> f64 {
    let DiamTree::Explicit(t) = tree else {
        panic!("explicit tree expected")
    };
    let n = t.len();
    assert!(n <= 20);
    let mut parent = vec![usize::MAX; n];
    for (i, node) in t.nodes().iter().enumerate() {
        for &c in &node.children {
            parent[c] = i;
        }
    }
    let ancestors = |mut v: usize| {
        let mut mask = 1u32 << v;
        while parent[v] != usize::MAX {
            v = parent[v];
            mask |= 1 << v;
        }
        mask
    };
    let anc: Vec<u32> = (0..n).map(ancestors).collect();
    let leaves: Vec<usize> = (0..n).filter(|&i| t.node(i).children.is_empty()).collect();
    let mut best = f64::INFINITY;
    for set in 1u32..(1 << n) {
        // antichain: no member is a proper ancestor of another
        let members: Vec<usize> = (0..n).filter(|i| set >> i & 1 == 1).collect();
        if members.iter().any(|&v| anc[v] & set & !(1 << v) != 0) {
            continue;
        }
        if leaves.iter().any(|&l| anc[l] & set == 0) {
            continue;
        }
        let cost: f64 = members.iter().map(|&v| t.node(v).diam.powf(s)).sum();
        best = best.min(cost);
    }
    best
}

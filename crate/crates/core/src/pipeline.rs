//! The composition `F = h ∘ (g / total)` from a coded space onto `[0,1]^k`,
//! and its verification.
//!
//! With `μ` an `s`-Frostman measure, `g` is `s`-Hölder with constant `C^s`,
//! and the Hilbert curve `h` is `1/k`-Hölder with constant `K_h`, so `F` is
//! `s/k`-Hölder with constant `K_h · C^{s/k} · total^{-1/k}`; Lipschitz when
//! `s = k`. For an IFS source the coding tree is compared with the euclidean
//! metric through the certified separation gap, which contributes the factor
//! `(d0 / gap)^{s/k}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::holder_map::HolderMap;
use crate::ifs::{bilipschitz_estimate, check_strong_separation, coding_tree, IfsSpec};
use crate::metric_core::euclidean_distance;
use crate::peano::{HilbertCurve, MAX_DEPTH};
use crate::sampling::{best_by_index, indexed_rng};
use crate::ultra_tree::{DiamTree, TreeAddress};

/// Relative slack allowed before an empirical constant counts as a violation.
pub const BOUND_TOLERANCE: f64 = 1e-9;
/// Parameter bits used by the curve; `f64` carries 52 fractional bits.
pub const PARAMETER_BITS: usize = 52;
/// Largest `k·q` for the coverage grid.
pub const COVERAGE_GRID_BITS: usize = 26;
/// Nodes enumerated for the coverage cover.
pub const COVERAGE_NODE_LIMIT: usize = 1 << 24;
/// Parameter bits enumerated exhaustively when measuring `K_h`.
pub const CURVE_EXHAUSTIVE_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Tree(DiamTree),
    Ifs(IfsSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source: Source,
    pub k: usize,
    /// Frostman exponent; defaults to `k`.
    pub s: Option<f64>,
    /// Horizon for self-similar and IFS sources.
    pub depth: usize,
    pub pairs: usize,
    pub seed: u64,
    /// Coverage grid resolution `2^{-q}`.
    pub coverage_depth: usize,
}

impl PipelineConfig {
    pub fn new(source: Source, k: usize, depth: usize) -> Self {
        Self {
            source,
            k,
            s: None,
            depth,
            pairs: 10_000,
            seed: 0,
            coverage_depth: 6,
        }
    }

    pub fn exponent(&self) -> f64 {
        self.s.unwrap_or(self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct IfsBridge {
    spec: IfsSpec,
    anchor: Vec<f64>,
    d0: f64,
    gap: f64,
}

/// A built `F`.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    g: HolderMap,
    curve: Option<HilbertCurve>,
    ifs: Option<IfsBridge>,
    warnings: Vec<String>,
}

/// `F` at a leaf: the normalized parameter interval and the image point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FValue {
    pub t: f64,
    pub t_width: f64,
    pub point: Vec<f64>,
}

pub fn build_pipeline(config: PipelineConfig) -> Result<Pipeline> {
    let s = config.exponent();
    if config.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if config.depth == 0 {
        return Err(Error::InvalidConfig("depth must be at least 1".into()));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::NonPositiveExponent(s));
    }
    let (tree, ifs) = match &config.source {
        Source::Tree(DiamTree::SelfSimilar(rule)) => (rule.with_depth(config.depth).into(), None),
        Source::Tree(tree) => (tree.clone(), None),
        Source::Ifs(spec) => {
            let tree = coding_tree(spec, config.depth)?;
            let sep = check_strong_separation(spec, 0)?;
            let bounds = spec.bounds();
            let bridge = IfsBridge {
                spec: spec.clone(),
                anchor: bounds.center(),
                d0: bounds.diam(),
                gap: sep.gap,
            };
            (tree, Some(bridge))
        }
    };
    let g = HolderMap::new(tree, s)?;
    if !(g.total() > 0.0) {
        return Err(Error::ZeroMass {
            s,
            depth: g.tree().height(),
        });
    }
    let curve = if config.k == 1 {
        None
    } else {
        Some(HilbertCurve::new(config.k, (PARAMETER_BITS / config.k).min(MAX_DEPTH))?)
    };
    let mut warnings = Vec::new();
    let k = config.k as f64;
    if s < k {
        warnings.push(format!(
            "s = {s} < k = {}: F is only Hölder of exponent s/k = {}",
            config.k,
            s / k
        ));
    } else if s > k {
        warnings.push(format!(
            "s = {s} > k = {}: ratios use exponent s/k = {}",
            config.k,
            s / k
        ));
    }
    Ok(Pipeline {
        config,
        g,
        curve,
        ifs,
        warnings,
    })
}

impl Pipeline {
    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn holder_map(&self) -> &HolderMap {
        &self.g
    }

    pub fn tree(&self) -> &DiamTree {
        self.g.tree()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn s(&self) -> f64 {
        self.g.s()
    }

    /// Exponent of the Hölder bound `F` satisfies.
    pub fn exponent(&self) -> f64 {
        self.s() / self.config.k as f64
    }

    pub fn curve_depth(&self) -> usize {
        self.curve.map_or(PARAMETER_BITS, |c| c.depth())
    }

    pub fn eval(&self, address: &[u32]) -> Result<FValue> {
        let gv = self.g.eval_g(address)?;
        let total = self.g.total();
        let t = (gv.value / total).min(1.0);
        let point = match &self.curve {
            None => vec![t],
            Some(c) => c.eval_corner(t)?,
        };
        Ok(FValue {
            t,
            t_width: gv.uncertainty / total,
            point,
        })
    }

    /// Distance between two leaves in the source metric: the tree metric, or
    /// the euclidean distance of attractor points for IFS sources.
    pub fn source_distance(&self, a: &[u32], b: &[u32]) -> Result<f64> {
        match &self.ifs {
            None => self.tree().tree_distance(a, b),
            Some(bridge) => {
                let pa = bridge.spec.compose(a, &bridge.anchor)?;
                let pb = bridge.spec.compose(b, &bridge.anchor)?;
                Ok(euclidean_distance(&pa, &pb))
            }
        }
    }

    /// `|F(b) − F(a)|_∞ / d(a, b)^{s/k}`. With `k = 1` the image difference
    /// spans both leaves' parameter intervals.
    pub fn pair_ratio(&self, a: &[u32], b: &[u32]) -> Result<Option<f64>> {
        if a == b {
            return Ok(None);
        }
        let d = self.source_distance(a, b)?;
        let (fa, fb) = (self.eval(a)?, self.eval(b)?);
        let diff = match self.curve {
            None => {
                let (lo, hi) = if a < b { (&fa, &fb) } else { (&fb, &fa) };
                hi.t + hi.t_width - lo.t
            }
            Some(_) => fa
                .point
                .iter()
                .zip(&fb.point)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        };
        Ok(Some(diff / d.powf(self.exponent())))
    }

    /// Hölder constant of the curve: exact over small depths, sampled at the
    /// evaluation depth, whichever is larger.
    pub fn curve_constant(&self) -> Result<CurveConstant> {
        let Some(curve) = self.curve else {
            return Ok(CurveConstant {
                measured: 1.0,
                exhaustive_depth: self.curve_depth(),
                exhaustive: 1.0,
                sampled: 1.0,
            });
        };
        let k = curve.k();
        let small_depth = (CURVE_EXHAUSTIVE_BITS / k).max(1);
        let exhaustive = HilbertCurve::new(k, small_depth)?.holder_exhaustive()?.max_ratio;
        let sampled = curve
            .holder_estimate(self.config.pairs.max(1), self.config.seed)?
            .max_ratio;
        Ok(CurveConstant {
            measured: exhaustive.max(sampled),
            exhaustive_depth: small_depth,
            exhaustive,
            sampled,
        })
    }

    /// Certified separation factor `(d0 / gap)^{s/k}`; 1 for tree sources.
    pub fn separation_factor(&self) -> f64 {
        self.ifs
            .as_ref()
            .map_or(1.0, |b| (b.d0 / b.gap).powf(self.exponent()))
    }

    pub fn predicted_bound(&self, curve_constant: f64) -> f64 {
        curve_constant
            * self.g.order_constant().powf(self.exponent())
            * self.g.total().powf(-1.0 / self.config.k as f64)
            * self.separation_factor()
    }

    /// Fraction of the `2^{-q}` grid cells hit by `F` over the address cover
    /// at the pipeline depth.
    pub fn coverage_fraction(&self, q: usize) -> Result<f64> {
        let k = self.config.k;
        if q == 0 || k * q > COVERAGE_GRID_BITS || q > self.curve_depth() {
            return Err(Error::InvalidConfig(format!(
                "coverage depth {q} unsupported for k = {k}"
            )));
        }
        let cells = 1usize << (k * q);
        let scale = ((k * q) as f64).exp2();
        let total = self.g.total();
        let words = cells.div_ceil(64);
        let mark = |bits: &mut Vec<u64>, addr: &[u32]| -> Result<()> {
            let t = (self.g.eval_g(addr)?.value / total).min(1.0);
            let cell = ((t * scale).floor() as usize).min(cells - 1);
            bits[cell / 64] |= 1 << (cell % 64);
            Ok(())
        };
        let marks = match self.tree() {
            DiamTree::SelfSimilar(rule) => {
                let (b, depth) = (rule.branching(), rule.depth());
                let count = b
                    .checked_pow(depth as u32)
                    .filter(|&c| c <= COVERAGE_NODE_LIMIT)
                    .ok_or(Error::TooLarge {
                        what: "coverage cover",
                        limit: COVERAGE_NODE_LIMIT,
                        actual: usize::MAX,
                    })?;
                let chunk = 1usize << 14;
                (0..count.div_ceil(chunk))
                    .into_par_iter()
                    .map(|c| -> Result<Vec<u64>> {
                        let mut bits = vec![0u64; words];
                        let mut addr = vec![0u32; depth];
                        for leaf in c * chunk..((c + 1) * chunk).min(count) {
                            let mut w = leaf;
                            for slot in addr.iter_mut().rev() {
                                *slot = (w % b) as u32;
                                w /= b;
                            }
                            mark(&mut bits, &addr)?;
                        }
                        Ok(bits)
                    })
                    .try_reduce(
                        || vec![0u64; words],
                        |mut a, b| {
                            a.iter_mut().zip(&b).for_each(|(x, y)| *x |= y);
                            Ok(a)
                        },
                    )?
            }
            tree => {
                let mut leaves = Vec::new();
                tree.visit(COVERAGE_NODE_LIMIT, |addr, info| {
                    if info.is_leaf() {
                        leaves.push(addr.to_vec());
                    }
                })?;
                let mut bits = vec![0u64; words];
                for addr in &leaves {
                    mark(&mut bits, addr)?;
                }
                bits
            }
        };
        let hit: u32 = marks.iter().map(|w| w.count_ones()).sum();
        Ok(hit as f64 / cells as f64)
    }

    pub fn verify(&self) -> Result<VerificationReport> {
        let cfg = &self.config;
        if cfg.pairs == 0 {
            return Err(Error::InvalidConfig("pair count must be at least 1".into()));
        }
        let curve = self.curve_constant()?;
        let predicted = self.predicted_bound(curve.measured);

        let g_est = self.g.holder_estimate(cfg.pairs, cfg.seed)?;
        let g_bound = self.g.holder_constant_bound();

        let scored: Vec<Option<(f64, TreeAddress, TreeAddress)>> = (0..cfg.pairs)
            .into_par_iter()
            .map(|i| {
                let mut rng = indexed_rng(cfg.seed, STREAM_F_PAIRS, i as u64);
                let a = self.tree().sample_leaf(&mut rng);
                let b = self.tree().sample_leaf(&mut rng);
                Ok(self.pair_ratio(a.digits(), b.digits())?.map(|r| (r, a, b)))
            })
            .collect::<Result<_>>()?;
        let limit = predicted * (1.0 + BOUND_TOLERANCE);
        let violations = scored.iter().flatten().filter(|(r, _, _)| *r > limit).count();
        let sampled_pairs = scored.iter().flatten().count();
        let best = best_by_index(&scored);

        let bilipschitz = match &self.ifs {
            None => None,
            Some(bridge) => {
                let est = bilipschitz_estimate(&bridge.spec, self.tree(), cfg.pairs, cfg.seed)?;
                Some(BiLipschitzSummary {
                    d0: bridge.d0,
                    gap: bridge.gap,
                    certified_lower: bridge.gap / bridge.d0,
                    factor: self.separation_factor(),
                    measured_min: est.min_ratio,
                    measured_max: est.max_ratio,
                })
            }
        };

        let coverage = self.coverage_fraction(cfg.coverage_depth)?;
        let g_ok = g_est.max_ratio <= g_bound + BOUND_TOLERANCE;
        Ok(VerificationReport {
            source: self.source_summary(),
            k: cfg.k,
            s: self.s(),
            exponent: self.exponent(),
            lipschitz: self.s() == cfg.k as f64,
            depth: self.tree().height(),
            curve_depth: self.curve_depth(),
            coverage_depth: cfg.coverage_depth,
            seed: cfg.seed,
            pairs: sampled_pairs,
            total_mass: self.g.total(),
            normalization: 1.0 / self.g.total(),
            order_constant: self.g.order_constant(),
            g_holder: GHolderSummary {
                max_ratio: g_est.max_ratio,
                bound: g_bound,
                attaining_pair: g_est.attaining_pair,
            },
            curve_holder: curve,
            bilipschitz,
            predicted_bound: predicted,
            empirical_constant: best.as_ref().map_or(0.0, |b| b.0),
            attaining_pair: best.map(|(_, a, b)| (a, b)),
            violations,
            coverage_fraction: coverage,
            warnings: self.warnings.clone(),
            ok: violations == 0 && g_ok,
        })
    }

    fn source_summary(&self) -> SourceSummary {
        match (&self.config.source, self.tree()) {
            (Source::Ifs(spec), _) => SourceSummary {
                kind: "ifs",
                branching: Some(spec.maps().len()),
                ratios: Some(spec.ratios()),
                root_diam: self.tree().root_diam(),
                leaves: self.tree().leaf_count(),
            },
            (Source::Tree(_), DiamTree::SelfSimilar(rule)) => SourceSummary {
                kind: "self_similar_tree",
                branching: Some(rule.branching()),
                ratios: Some(rule.ratios().to_vec()),
                root_diam: rule.root_diam(),
                leaves: self.tree().leaf_count(),
            },
            (Source::Tree(_), tree) => SourceSummary {
                kind: "explicit_tree",
                branching: None,
                ratios: None,
                root_diam: tree.root_diam(),
                leaves: tree.leaf_count(),
            },
        }
    }
}

const STREAM_F_PAIRS: u64 = 0x4670;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSummary {
    pub kind: &'static str,
    pub branching: Option<usize>,
    pub ratios: Option<Vec<f64>>,
    pub root_diam: f64,
    pub leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveConstant {
    pub measured: f64,
    pub exhaustive_depth: usize,
    pub exhaustive: f64,
    pub sampled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GHolderSummary {
    pub max_ratio: f64,
    pub bound: f64,
    pub attaining_pair: Option<(TreeAddress, TreeAddress)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiLipschitzSummary {
    pub d0: f64,
    pub gap: f64,
    pub certified_lower: f64,
    pub factor: f64,
    pub measured_min: f64,
    pub measured_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub source: SourceSummary,
    pub k: usize,
    pub s: f64,
    pub exponent: f64,
    pub lipschitz: bool,
    pub depth: usize,
    pub curve_depth: usize,
    pub coverage_depth: usize,
    pub seed: u64,
    pub pairs: usize,
    pub total_mass: f64,
    pub normalization: f64,
    pub order_constant: f64,
    pub g_holder: GHolderSummary,
    pub curve_holder: CurveConstant,
    pub bilipschitz: Option<BiLipschitzSummary>,
    pub predicted_bound: f64,
    pub empirical_constant: f64,
    pub attaining_pair: Option<(TreeAddress, TreeAddress)>,
    pub violations: usize,
    pub coverage_fraction: f64,
    pub warnings: Vec<String>,
    pub ok: bool,
}

pub fn verify_pipeline(pipeline: &Pipeline) -> Result<VerificationReport> {
    pipeline.verify()
}

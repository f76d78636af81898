//! Self-similar sets in `R^n` with the strong separation condition, their
//! coding trees, and box-counting dimension estimates.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::metric_core::euclidean_distance;
use crate::sampling::indexed_rng;
use crate::ultra_tree::{DiamTree, SelfSimilarRule};

/// Tolerance for orthogonality of the linear parts.
pub const ORTHOGONAL_TOLERANCE: f64 = 1e-9;
/// Cap on piece pairs compared by [`check_strong_separation`].
pub const SEPARATION_PAIR_LIMIT: usize = 1 << 22;
/// Cap on codes enumerated by exhaustive routines and point clouds.
pub const CODE_LIMIT: usize = 1 << 20;

/// `x ↦ ratio·O·x + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub ratio: f64,
    pub translation: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orthogonal: Option<Vec<Vec<f64>>>,
}

impl Similarity {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let rotated = match &self.orthogonal {
            None => x.to_vec(),
            Some(o) => o
                .iter()
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
        };
        rotated
            .iter()
            .zip(&self.translation)
            .map(|(v, t)| self.ratio * v + t)
            .collect()
    }

    fn is_identity(&self) -> bool {
        self.orthogonal.as_ref().is_none_or(|o| {
            o.iter()
                .enumerate()
                .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == f64::from(i == j)))
        })
    }

    /// Signed permutation matrices send boxes to boxes.
    fn is_signed_permutation(&self) -> bool {
        self.orthogonal.as_ref().is_none_or(|o| {
            o.iter().all(|row| {
                row.iter().filter(|v| **v != 0.0).count() == 1
                    && row.iter().all(|v| *v == 0.0 || v.abs() == 1.0)
            })
        })
    }

    /// Row `i` of `|O|` as the axis it reads from.
    fn source_axis(&self, i: usize) -> usize {
        match &self.orthogonal {
            None => i,
            Some(o) => o[i].iter().position(|v| *v != 0.0).expect("signed permutation"),
        }
    }
}

/// A set of at least two contracting similarities of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IfsFile", into = "IfsFile")]
pub struct IfsSpec {
    n: usize,
    maps: Vec<Similarity>,
}

/// The `ifs.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsFile {
    pub n: usize,
    pub maps: Vec<Similarity>,
}

impl TryFrom<IfsFile> for IfsSpec {
    type Error = Error;

    fn try_from(file: IfsFile) -> Result<Self> {
        IfsSpec::new(file.n, file.maps)
    }
}

impl From<IfsSpec> for IfsFile {
    fn from(spec: IfsSpec) -> Self {
        IfsFile {
            n: spec.n,
            maps: spec.maps,
        }
    }
}

impl IfsSpec {
    pub fn new(n: usize, maps: Vec<Similarity>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidIfs("ambient dimension must be positive".into()));
        }
        if maps.len() < 2 {
            return Err(Error::InvalidIfs("need at least two maps".into()));
        }
        for (i, f) in maps.iter().enumerate() {
            if !(f.ratio > 0.0 && f.ratio < 1.0) {
                return Err(Error::InvalidIfs(format!(
                    "map {i}: ratio {} not in (0, 1)",
                    f.ratio
                )));
            }
            if f.translation.len() != n || f.translation.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidIfs(format!(
                    "map {i}: translation must be {n} finite numbers"
                )));
            }
            if let Some(o) = &f.orthogonal {
                check_orthogonal(o, n).map_err(|e| Error::InvalidIfs(format!("map {i}: {e}")))?;
            }
        }
        Ok(Self { n, maps })
    }

    /// Maps `x ↦ r·x + t_i` for each translation.
    pub fn homogeneous(ratio: f64, translations: Vec<Vec<f64>>) -> Result<Self> {
        let n = translations.first().map_or(0, Vec::len);
        let maps = translations
            .into_iter()
            .map(|translation| Similarity {
                ratio,
                translation,
                orthogonal: None,
            })
            .collect();
        Self::new(n, maps)
    }

    /// `{x/3, x/3 + 2/3}` on the line.
    pub fn middle_thirds() -> Self {
        Self::homogeneous(1.0 / 3.0, vec![vec![0.0], vec![2.0 / 3.0]]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|f| f.ratio).collect()
    }

    /// The common ratio, if all maps share it.
    pub fn uniform_ratio(&self) -> Option<f64> {
        let r = self.maps[0].ratio;
        self.maps.iter().all(|f| f.ratio == r).then_some(r)
    }

    /// Solution of `Σ r_i^s = 1`, the dimension of the attractor under
    /// strong separation.
    pub fn similarity_dimension(&self) -> f64 {
        if let Some(r) = self.uniform_ratio() {
            return (self.maps.len() as f64).ln() / (1.0 / r).ln();
        }
        let pressure = |s: f64| self.maps.iter().map(|f| f.ratio.powf(s)).sum::<f64>() - 1.0;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while pressure(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pressure(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `f_{w_1} ∘ … ∘ f_{w_m}(x)`.
    pub fn compose(&self, code: &[u32], x: &[f64]) -> Result<Vec<f64>> {
        self.check_code(code)?;
        let mut p = x.to_vec();
        for &i in code.iter().rev() {
            p = self.maps[i as usize].apply(&p);
        }
        Ok(p)
    }

    fn check_code(&self, code: &[u32]) -> Result<()> {
        match code.iter().find(|&&i| i as usize >= self.maps.len()) {
            Some(i) => Err(Error::InvalidAddress {
                address: format!("{code:?}"),
                reason: format!("map index {i} out of range"),
            }),
            None => Ok(()),
        }
    }

    /// A compact set mapped into itself by every map.
    pub fn bounds(&self) -> Bounds {
        if self.maps.iter().all(Similarity::is_identity) {
            // box spanned by the fixed points t_i / (1 - r_i)
            let mut lo = vec![f64::INFINITY; self.n];
            let mut hi = vec![f64::NEG_INFINITY; self.n];
            for f in &self.maps {
                for (j, t) in f.translation.iter().enumerate() {
                    let fixed = t / (1.0 - f.ratio);
                    lo[j] = lo[j].min(fixed);
                    hi[j] = hi[j].max(fixed);
                }
            }
            return Bounds::Box { lo, hi };
        }
        let ball = self.invariant_ball();
        if self.maps.iter().all(Similarity::is_signed_permutation) {
            // shrink the ball's bounding cube; each hull iterate is invariant
            let (c, r) = match &ball {
                Bounds::Ball { center, radius } => (center.clone(), *radius),
                Bounds::Box { .. } => unreachable!(),
            };
            let mut b = Bounds::Box {
                lo: c.iter().map(|x| x - r).collect(),
                hi: c.iter().map(|x| x + r).collect(),
            };
            for _ in 0..64 {
                let images: Vec<Bounds> = self.maps.iter().map(|f| b.image(f)).collect();
                b = Bounds::hull(&images);
            }
            return b;
        }
        ball
    }

    fn invariant_ball(&self) -> Bounds {
        let mut center = vec![0.0; self.n];
        for f in &self.maps {
            // fixed points are not needed exactly; any center works
            for (c, t) in center.iter_mut().zip(&f.translation) {
                *c += t / (1.0 - f.ratio);
            }
        }
        let k = self.maps.len() as f64;
        center.iter_mut().for_each(|c| *c /= k);
        let radius = self
            .maps
            .iter()
            .map(|f| euclidean_distance(&f.apply(&center), &center) / (1.0 - f.ratio))
            .fold(0.0f64, f64::max);
        Bounds::Ball { center, radius }
    }

    /// Diameter of [`IfsSpec::bounds`], an upper bound for the attractor's.
    pub fn root_diam(&self) -> f64 {
        self.bounds().diam()
    }
}

fn check_orthogonal(o: &[Vec<f64>], n: usize) -> std::result::Result<(), String> {
    if o.len() != n || o.iter().any(|row| row.len() != n) {
        return Err(format!("orthogonal part must be {n}x{n}"));
    }
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|l| o[i][l] * o[j][l]).sum();
            let want = f64::from(i == j);
            if !dot.is_finite() || (dot - want).abs() > ORTHOGONAL_TOLERANCE {
                return Err("orthogonal part is not orthogonal".into());
            }
        }
    }
    Ok(())
}

/// An invariant compact set: an axis-aligned box or a Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bounds {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Bounds {
    pub fn center(&self) -> Vec<f64> {
        match self {
            Bounds::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            Bounds::Ball { center, .. } => center.clone(),
        }
    }

    pub fn diam(&self) -> f64 {
        match self {
            Bounds::Box { lo, hi } => euclidean_distance(lo, hi),
            Bounds::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Image under a similarity. Boxes stay boxes only under signed
    /// permutations; otherwise the result is the image ball of the
    /// circumscribed ball.
    pub fn image(&self, f: &Similarity) -> Bounds {
        match self {
            Bounds::Box { lo, hi } if f.is_signed_permutation() => {
                let c = f.apply(&self.center());
                let half: Vec<f64> = (0..lo.len())
                    .map(|i| {
                        let a = f.source_axis(i);
                        0.5 * f.ratio * (hi[a] - lo[a])
                    })
                    .collect();
                Bounds::Box {
                    lo: c.iter().zip(&half).map(|(c, h)| c - h).collect(),
                    hi: c.iter().zip(&half).map(|(c, h)| c + h).collect(),
                }
            }
            Bounds::Box { .. } => Bounds::Ball {
                center: f.apply(&self.center()),
                radius: 0.5 * f.ratio * self.diam(),
            },
            Bounds::Ball { center, radius } => Bounds::Ball {
                center: f.apply(center),
                radius: f.ratio * radius,
            },
        }
    }

    fn hull(boxes: &[Bounds]) -> Bounds {
        let n = match &boxes[0] {
            Bounds::Box { lo, .. } => lo.len(),
            Bounds::Ball { center, .. } => center.len(),
        };
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for b in boxes {
            let Bounds::Box { lo: l, hi: h } = b else {
                unreachable!("hull of boxes")
            };
            for j in 0..n {
                lo[j] = lo[j].min(l[j]);
                hi[j] = hi[j].max(h[j]);
            }
        }
        Bounds::Box { lo, hi }
    }

    /// Euclidean distance between the two sets (0 if they meet).
    pub fn distance(&self, other: &Bounds) -> f64 {
        match (self, other) {
            (Bounds::Box { lo: a0, hi: a1 }, Bounds::Box { lo: b0, hi: b1 }) => {
                let sq: f64 = (0..a0.len())
                    .map(|j| {
                        let d = (b0[j] - a1[j]).max(a0[j] - b1[j]).max(0.0);
                        d * d
                    })
                    .sum();
                sq.sqrt()
            }
            _ => {
                let (c1, r1) = self.as_ball();
                let (c2, r2) = other.as_ball();
                (euclidean_distance(&c1, &c2) - r1 - r2).max(0.0)
            }
        }
    }

    fn as_ball(&self) -> (Vec<f64>, f64) {
        match self {
            Bounds::Ball { center, radius } => (center.clone(), *radius),
            Bounds::Box { .. } => (self.center(), 0.5 * self.diam()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorPoint {
    pub point: Vec<f64>,
    pub error_radius: f64,
}

/// Approximates the attractor point with address `code` by mapping the
/// center of the bounding set. The true point lies within `error_radius`.
pub fn attractor_point(spec: &IfsSpec, code: &[u32]) -> Result<AttractorPoint> {
    let bounds = spec.bounds();
    let point = spec.compose(code, &bounds.center())?;
    let scale: f64 = code.iter().map(|&i| spec.maps[i as usize].ratio).product();
    Ok(AttractorPoint {
        point,
        error_radius: scale * bounds.diam(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub ok: bool,
    /// Smallest distance between pieces with different first symbols.
    pub gap: f64,
    /// First-level maps whose pieces come closest.
    pub witness: (usize, usize),
    pub refinement: usize,
}

/// Compares the images of the bounding set under all codes of length
/// `refinement + 1`, pairing pieces with different first symbols.
pub fn check_strong_separation(spec: &IfsSpec, refinement: usize) -> Result<SeparationReport> {
    let b = spec.maps.len();
    let per_map = b
        .checked_pow(refinement as u32)
        .filter(|&p| p.saturating_mul(p).saturating_mul(b * b) <= SEPARATION_PAIR_LIMIT)
        .ok_or(Error::TooLarge {
            what: "separation refinement",
            limit: SEPARATION_PAIR_LIMIT,
            actual: usize::MAX,
        })?;
    let bounds = spec.bounds();
    let pieces: Vec<Vec<Bounds>> = (0..b)
        .map(|i| {
            (0..per_map)
                .map(|w| {
                    let mut code = vec![i as u32];
                    code.extend(digits(w, b, refinement));
                    code.iter()
                        .rev()
                        .fold(bounds.clone(), |acc, &m| acc.image(&spec.maps[m as usize]))
                })
                .collect()
        })
        .collect();
    let mut best = (f64::INFINITY, (0, 1));
    for i in 0..b {
        for j in i + 1..b {
            for p in &pieces[i] {
                for q in &pieces[j] {
                    let d = p.distance(q);
                    if d < best.0 {
                        best = (d, (i, j));
                    }
                }
            }
        }
    }
    Ok(SeparationReport {
        ok: best.0 > 0.0,
        gap: best.0,
        witness: best.1,
        refinement,
    })
}

/// Base-`b` digits of `w`, most significant first, padded to `len`.
fn digits(mut w: usize, b: usize, len: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    for slot in out.iter_mut().rev() {
        *slot = (w % b) as u32;
        w /= b;
    }
    out
}

/// Every code of length `depth`, in lexicographic order.
pub fn all_codes(branching: usize, depth: usize) -> Result<Vec<Vec<u32>>> {
    let count = branching
        .checked_pow(depth as u32)
        .filter(|&c| c <= CODE_LIMIT)
        .ok_or(Error::TooLarge {
            what: "code enumeration",
            limit: CODE_LIMIT,
            actual: usize::MAX,
        })?;
    Ok((0..count).map(|w| digits(w, branching, depth)).collect())
}

/// Coding tree of a strongly separated system: node `w` has diameter
/// `d0·Π r_{w_i}` with `d0` the bounding set's diameter.
pub fn coding_tree(spec: &IfsSpec, depth: usize) -> Result<DiamTree> {
    let sep = check_strong_separation(spec, 0)?;
    if !sep.ok {
        return Err(Error::NotSeparated {
            i: sep.witness.0,
            j: sep.witness.1,
            gap: sep.gap,
        });
    }
    Ok(SelfSimilarRule::with_ratios(spec.ratios(), spec.root_diam(), depth)?.into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiLipschitzEstimate {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_pair: Option<(Vec<u32>, Vec<u32>)>,
    pub max_pair: Option<(Vec<u32>, Vec<u32>)>,
    pub pairs: usize,
}

impl BiLipschitzEstimate {
    fn fold(scored: impl IntoIterator<Item = (f64, Vec<u32>, Vec<u32>)>) -> Self {
        let mut est = BiLipschitzEstimate {
            min_ratio: f64::INFINITY,
            max_ratio: 0.0,
            min_pair: None,
            max_pair: None,
            pairs: 0,
        };
        for (r, a, b) in scored {
            est.pairs += 1;
            if r < est.min_ratio {
                est.min_ratio = r;
                est.min_pair = Some((a.clone(), b.clone()));
            }
            if r > est.max_ratio {
                est.max_ratio = r;
                est.max_pair = Some((a, b));
            }
        }
        est
    }
}

fn code_ratio(spec: &IfsSpec, tree: &DiamTree, anchor: &[f64], a: &[u32], b: &[u32]) -> Result<f64> {
    let pa = spec.compose(a, anchor)?;
    let pb = spec.compose(b, anchor)?;
    Ok(euclidean_distance(&pa, &pb) / tree.tree_distance(a, b)?)
}

/// Extremes of euclidean over tree distance on sampled pairs of depth-`m`
/// codes, `m` being the tree's depth.
pub fn bilipschitz_estimate(
    spec: &IfsSpec,
    tree: &DiamTree,
    pair_count: usize,
    seed: u64,
) -> Result<BiLipschitzEstimate> {
    if pair_count == 0 {
        return Err(Error::InvalidConfig("pair_count must be at least 1".into()));
    }
    let anchor = spec.bounds().center();
    let scored: Vec<Option<(f64, Vec<u32>, Vec<u32>)>> = (0..pair_count)
        .into_par_iter()
        .map(|p| {
            let mut rng = indexed_rng(seed, STREAM_IFS_PAIRS, p as u64);
            let a = random_code(&mut rng, spec.maps.len(), tree.height());
            let b = random_code(&mut rng, spec.maps.len(), tree.height());
            if a == b {
                return Ok(None);
            }
            Ok(Some((code_ratio(spec, tree, &anchor, &a, &b)?, a, b)))
        })
        .collect::<Result<_>>()?;
    Ok(BiLipschitzEstimate::fold(scored.into_iter().flatten()))
}

/// Same extremes over every pair of depth-`m` codes.
pub fn bilipschitz_exhaustive(spec: &IfsSpec, tree: &DiamTree) -> Result<BiLipschitzEstimate> {
    let anchor = spec.bounds().center();
    let codes = all_codes(spec.maps.len(), tree.height())?;
    let points: Vec<Vec<f64>> = codes
        .iter()
        .map(|c| spec.compose(c, &anchor))
        .collect::<Result<_>>()?;
    let mut scored = Vec::new();
    for i in 0..codes.len() {
        for j in i + 1..codes.len() {
            let d = tree.tree_distance(&codes[i], &codes[j])?;
            let r = euclidean_distance(&points[i], &points[j]) / d;
            scored.push((r, codes[i].clone(), codes[j].clone()));
        }
    }
    Ok(BiLipschitzEstimate::fold(scored))
}

const STREAM_IFS_PAIRS: u64 = 0x6966;

fn random_code<R: Rng + ?Sized>(rng: &mut R, b: usize, depth: usize) -> Vec<u32> {
    (0..depth).map(|_| rng.random_range(0..b as u32)).collect()
}

/// Attractor points for every code of length `depth`.
pub fn point_cloud(spec: &IfsSpec, depth: usize) -> Result<Vec<Vec<f64>>> {
    let anchor = spec.bounds().center();
    all_codes(spec.maps.len(), depth)?
        .iter()
        .map(|c| spec.compose(c, &anchor))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDimEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; absent with only two scales.
    pub std_error: Option<f64>,
    /// 95% Student-t interval for the slope; absent with only two scales.
    pub confidence_interval: Option<(f64, f64)>,
    pub counts: Vec<usize>,
}

/// Least-squares slope of `log N(ε)` against `log(1/ε)`, where `N(ε)` counts
/// occupied cells of the grid `ε·Z^n`.
pub fn box_dim_estimate(points: &[Vec<f64>], scales: &[f64]) -> Result<BoxDimEstimate> {
    if scales.len() < 2 {
        return Err(Error::InvalidScales("need at least two scales".into()));
    }
    if scales.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidScales("scales must be positive".into()));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidScales("scales must strictly decrease".into()));
    }
    let n = points.first().map_or(0, Vec::len);
    if n == 0 || points.iter().any(|p| p.len() != n || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::DegenerateCloud(
            "points must be non-empty, finite and of one dimension".into(),
        ));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::DegenerateCloud("cloud is a single point".into()));
    }
    let counts: Vec<usize> = scales
        .iter()
        .map(|&eps| {
            points
                .iter()
                .map(|p| p.iter().map(|v| (v / eps).floor() as i64).collect::<Vec<_>>())
                .collect::<HashSet<_>>()
                .len()
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (std_error, confidence_interval) = if xs.len() > 2 {
        let dof = k - 2.0;
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        let se = (rss / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (Some(se), Some((slope - t * se, slope + t * se)))
    } else {
        (None, None)
    };
    Ok(BoxDimEstimate {
        slope,
        intercept,
        std_error,
        confidence_interval,
        counts,
    })
}

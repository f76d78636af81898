//! Finite metric spaces, linear orders on them, gauge functions and the
//! sequence-space metrics `d_g(x, y) = g(|x ∧ y| + 1)`.
//!
//! Validation compares raw input distances exactly. Quantities derived by
//! arithmetic (gauge compositions, interpolation round trips) are compared
//! with [`DERIVED_TOLERANCE`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for comparisons on computed (not input) values.
pub const DERIVED_TOLERANCE: f64 = 1e-12;

/// The reason a distance matrix fails to be a metric or an ultrametric.
///
/// Triples are reported as `(x, via, y)`: the inequality that fails bounds
/// `d(x, y)` through the intermediate point `via`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonzeroDiagonal { i: usize },
    Asymmetric { i: usize, j: usize },
    ZeroDistance { i: usize, j: usize },
    Triangle { x: usize, via: usize, y: usize },
    Ultrametric { x: usize, via: usize, y: usize },
}

impl Violation {
    /// The offending triple, when the violation is an inequality failure.
    pub fn triple(&self) -> Option<(usize, usize, usize)> {
        match *self {
            Violation::Triangle { x, via, y } | Violation::Ultrametric { x, via, y } => {
                Some((x, via, y))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonzeroDiagonal { i } => write!(f, "d({i}, {i}) != 0"),
            Violation::Asymmetric { i, j } => write!(f, "d({i}, {j}) != d({j}, {i})"),
            Violation::ZeroDistance { i, j } => write!(f, "d({i}, {j}) = 0 for distinct points"),
            Violation::Triangle { x, via, y } => {
                write!(f, "d({x}, {y}) > d({x}, {via}) + d({via}, {y})")
            }
            Violation::Ultrametric { x, via, y } => {
                write!(f, "d({x}, {y}) > max(d({x}, {via}), d({via}, {y}))")
            }
        }
    }
}

/// Outcome of [`validate_metric`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: bool,
    pub ultrametric: bool,
    pub witness: Option<Violation>,
}

/// Checks the metric and ultrametric axioms on a square matrix of finite
/// non-negative entries.
///
/// Structural problems (ragged rows, negative or non-finite entries) are
/// errors; axiom failures are reported in the returned [`MetricReport`]
/// together with the first violation found.
pub fn validate_metric(dist: &[Vec<f64>]) -> Result<MetricReport> {
    check_axioms(dist, 0.0)
}

/// Axiom checks allowing `tolerance` of absolute slack in the triangle and
/// ultrametric inequalities. Only computed matrices get a nonzero slack.
fn check_axioms(dist: &[Vec<f64>], tolerance: f64) -> Result<MetricReport> {
    check_shape(dist)?;
    let n = dist.len();

    let mut structural = None;
    'outer: for i in 0..n {
        if dist[i][i] != 0.0 {
            structural = Some(Violation::NonzeroDiagonal { i });
            break;
        }
        for j in i + 1..n {
            if dist[i][j] != dist[j][i] {
                structural = Some(Violation::Asymmetric { i, j });
                break 'outer;
            }
            if dist[i][j] == 0.0 {
                structural = Some(Violation::ZeroDistance { i, j });
                break 'outer;
            }
        }
    }
    if structural.is_some() {
        return Ok(MetricReport {
            metric: false,
            ultrametric: false,
            witness: structural,
        });
    }

    let mut ultra_witness = None;
    for x in 0..n {
        for y in x + 1..n {
            let dxy = dist[x][y];
            for via in 0..n {
                if via == x || via == y {
                    continue;
                }
                let (a, b) = (dist[x][via], dist[via][y]);
                if dxy > a + b + tolerance {
                    return Ok(MetricReport {
                        metric: false,
                        ultrametric: false,
                        witness: Some(Violation::Triangle { x, via, y }),
                    });
                }
                if ultra_witness.is_none() && dxy > a.max(b) + tolerance {
                    ultra_witness = Some(Violation::Ultrametric { x, via, y });
                }
            }
        }
    }
    Ok(MetricReport {
        metric: true,
        ultrametric: ultra_witness.is_none(),
        witness: ultra_witness,
    })
}

fn check_shape(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    for (row, values) in dist.iter().enumerate() {
        if values.len() != n {
            return Err(Error::NotSquare {
                row,
                len: values.len(),
                expected: n,
            });
        }
        for (col, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidEntry { row, col, value });
            }
        }
    }
    Ok(())
}

/// A finite metric space given by its distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    ultrametric: bool,
}

impl FiniteMetricSpace {
    /// Builds a space with labels `"0"`, `"1"`, ... after full validation.
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, dist)
    }

    pub fn with_labels(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        Self::checked(labels, dist, 0.0)
    }

    fn checked(labels: Vec<String>, dist: Vec<Vec<f64>>, tolerance: f64) -> Result<Self> {
        if dist.is_empty() {
            return Err(Error::EmptySpace);
        }
        let report = check_axioms(&dist, tolerance)?;
        if !report.metric {
            // `metric == false` always carries a witness.
            return Err(Error::NotMetric(report.witness.expect("witness")));
        }
        if labels.len() != dist.len() {
            return Err(Error::InvalidConfig(format!(
                "{} labels for {} points",
                labels.len(),
                dist.len()
            )));
        }
        Ok(Self {
            labels,
            dist,
            ultrametric: report.ultrametric,
        })
    }

    /// Euclidean distances between the given points. The distances are
    /// computed, so the triangle inequality is checked to
    /// [`DERIVED_TOLERANCE`] rather than exactly.
    pub fn euclidean(points: &[Vec<f64>]) -> Result<Self> {
        let dist: Vec<Vec<f64>> = points
            .iter()
            .map(|p| points.iter().map(|q| euclidean_distance(p, q)).collect())
            .collect();
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::checked(labels, dist, DERIVED_TOLERANCE)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_ultrametric(&self) -> bool {
        self.ultrametric
    }

    pub fn diameter(&self) -> f64 {
        self.dist
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0, f64::max)
    }

    /// The subspace on `points`, in the given order.
    pub fn subspace(&self, points: &[usize]) -> Result<Self> {
        let dist = points
            .iter()
            .map(|&i| points.iter().map(|&j| self.dist[i][j]).collect())
            .collect();
        let labels = points.iter().map(|&i| self.labels[i].clone()).collect();
        Self::with_labels(labels, dist)
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A linear order on the points `0..n`, stored as the sequence of points
/// from smallest to largest together with the inverse lookup.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearOrder {
    sequence: Vec<usize>,
    position: Vec<usize>,
}

impl LinearOrder {
    pub fn new(sequence: Vec<usize>) -> Result<Self> {
        let n = sequence.len();
        let mut position = vec![usize::MAX; n];
        for (pos, &p) in sequence.iter().enumerate() {
            if p >= n {
                return Err(Error::InvalidOrder(format!(
                    "index {p} out of range for {n} points"
                )));
            }
            if position[p] != usize::MAX {
                return Err(Error::InvalidOrder(format!("index {p} appears twice")));
            }
            position[p] = pos;
        }
        Ok(Self { sequence, position })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            sequence: (0..n).collect(),
            position: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn position(&self, point: usize) -> usize {
        self.position[point]
    }

    pub fn into_sequence(self) -> Vec<usize> {
        self.sequence
    }

    pub(crate) fn check_covers(&self, space: &FiniteMetricSpace) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::InvalidOrder(format!(
                "order has {} points, space has {}",
                self.len(),
                space.len()
            )));
        }
        Ok(())
    }
}

/// Diameter of the closed order-interval `[a, b] = {x : a <= x <= b}`.
pub fn interval_diameter(
    space: &FiniteMetricSpace,
    order: &LinearOrder,
    a: usize,
    b: usize,
) -> Result<f64> {
    order.check_covers(space)?;
    if a >= space.len() || b >= space.len() {
        return Err(Error::InvalidOrder(format!(
            "interval endpoint out of range for {} points",
            space.len()
        )));
    }
    let (pa, pb) = (order.position(a), order.position(b));
    if pa > pb {
        return Err(Error::ReversedInterval { a, b });
    }
    let members = &order.sequence()[pa..=pb];
    let mut diam = 0.0f64;
    for (i, &x) in members.iter().enumerate() {
        for &y in &members[i + 1..] {
            diam = diam.max(space.distance(x, y));
        }
    }
    Ok(diam)
}

/// A strictly increasing bijection of `[0, ∞)` with an exact inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "GaugeFile")]
pub enum GaugeFunction {
    /// `φ(t) = t^alpha`.
    Power { alpha: f64 },
    /// Piecewise-linear interpolation through `(t[i], phi[i])`, extended
    /// past the last knot with the slope of the final segment.
    Table { t: Vec<f64>, phi: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum GaugeFile {
    Power { alpha: f64 },
    Table { t: Vec<f64>, phi: Vec<f64> },
}

impl TryFrom<GaugeFile> for GaugeFunction {
    type Error = Error;

    fn try_from(file: GaugeFile) -> Result<Self> {
        match file {
            GaugeFile::Power { alpha } => Self::power(alpha),
            GaugeFile::Table { t, phi } => Self::table(t, phi),
        }
    }
}

impl GaugeFunction {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidGauge(format!(
                "power exponent must be positive and finite, got {alpha}"
            )));
        }
        Ok(GaugeFunction::Power { alpha })
    }

    pub fn identity() -> Self {
        GaugeFunction::Power { alpha: 1.0 }
    }

    pub fn table(t: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if t.len() != phi.len() {
            return Err(Error::InvalidGauge(format!(
                "{} knots but {} values",
                t.len(),
                phi.len()
            )));
        }
        if t.len() < 2 {
            return Err(Error::InvalidGauge("need at least two knots".into()));
        }
        if t[0] != 0.0 || phi[0] != 0.0 {
            return Err(Error::InvalidGauge("table must start at (0, 0)".into()));
        }
        for (name, values) in [("t", &t), ("phi", &phi)] {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGauge(format!("non-finite entry in {name}")));
            }
            if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGauge(format!(
                    "{name} is not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        Ok(GaugeFunction::Table { t, phi })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            GaugeFunction::Power { alpha } => x.powf(*alpha),
            GaugeFunction::Table { t, phi } => interpolate(t, phi, x),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            GaugeFunction::Power { alpha } => y.powf(alpha.recip()),
            GaugeFunction::Table { t, phi } => interpolate(phi, t, y),
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    // Index of the segment [xs[i], xs[i + 1]] used for x.
    let i = match xs.iter().position(|&knot| knot > x) {
        Some(0) => 0,
        Some(p) => p - 1,
        None => last - 1,
    };
    let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
    if x == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// A strictly decreasing positive function on `{1, 2, ...}`, tabulated to a
/// finite depth. Defines the ultrametric `d_g` on sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetric {
    values: Vec<f64>,
}

impl SequenceMetric {
    /// `values[m - 1]` is `g(m)`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSequenceMetric("empty tabulation".into()));
        }
        if let Some(m) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSequenceMetric(format!(
                "g({}) = {} is not positive",
                m + 1,
                values[m]
            )));
        }
        if let Some(m) = values.windows(2).position(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSequenceMetric(format!(
                "g is not strictly decreasing between {} and {}",
                m + 1,
                m + 2
            )));
        }
        Ok(Self { values })
    }

    pub fn tabulate(depth: usize, g: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((1..=depth).map(g).collect())
    }

    pub fn depth(&self) -> usize {
        self.values.len()
    }

    /// `g(m)` for `1 <= m <= depth`.
    pub fn g(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `g = φ⁻¹ ∘ φ₀ ∘ g₀`, tabulated on the grid of `g0`.
pub fn remetrize_gauge(
    g0: &SequenceMetric,
    phi0: &GaugeFunction,
    phi: &GaugeFunction,
) -> Result<SequenceMetric> {
    let values = g0
        .values()
        .iter()
        .map(|&v| phi.inverse(phi0.eval(v)))
        .collect();
    SequenceMetric::new(values)
}

/// `max_m |φ(g(m)) − φ₀(g₀(m))|` over the common tabulation grid.
pub fn gauge_identity_residual(
    g: &SequenceMetric,
    g0: &SequenceMetric,
    phi0: &GaugeFunction,
    phi: &GaugeFunction,
) -> f64 {
    g.values()
        .iter()
        .zip(g0.values())
        .map(|(&gm, &g0m)| (phi.eval(gm) - phi0.eval(g0m)).abs())
        .fold(0.0, f64::max)
}

/// `d_g(x, y) = g(|x ∧ y| + 1)` for finite prefixes of sequences.
///
/// Identical prefixes denote the same point. When one prefix properly
/// extends the other the two cannot be told apart and the result is
/// [`Error::Undecided`].
pub fn dg_distance(x: &[u32], y: &[u32], g: &SequenceMetric) -> Result<f64> {
    if x == y {
        return Ok(0.0);
    }
    let common = common_prefix_len(x, y);
    if common == x.len().min(y.len()) {
        return Err(Error::Undecided { depth: common });
    }
    g.g(common + 1).ok_or(Error::InsufficientDepth {
        needed: common + 1,
        available: g.depth(),
    })
}

pub(crate) fn common_prefix_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// `space.json`: `{"points": [labels], "dist": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    #[serde(default)]
    pub points: Vec<serde_json::Value>,
    pub dist: Vec<Vec<f64>>,
}

impl SpaceFile {
    pub fn into_space(self) -> Result<FiniteMetricSpace> {
        if self.points.is_empty() {
            return FiniteMetricSpace::new(self.dist);
        }
        let labels = self
            .points
            .into_iter()
            .map(|v| match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            })
            .collect();
        FiniteMetricSpace::with_labels(labels, self.dist)
    }
}

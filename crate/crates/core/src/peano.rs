//! Hilbert curves `h: [0,1] → [0,1]^k`.
//!
//! At depth `m` the parameter range is cut into `2^{km}` equal pieces and
//! piece `i` is sent to the lower corner of the `i`-th cell of the depth-`m`
//! Hilbert walk. Indices are decoded with Skilling's transpose algorithm
//! (reflected Gray code plus per-level reflections and exchanges).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::indexed_rng;

pub const MAX_DIMENSION: usize = 8;
/// Parameters are held in a `u128`.
pub const MAX_INDEX_BITS: usize = 128;
/// Coordinates are held in a `u64`.
pub const MAX_DEPTH: usize = 64;
/// Largest `k·m` [`HilbertCurve::coverage_check`] will walk.
pub const COVERAGE_BIT_LIMIT: usize = 24;
/// Largest `k·m` [`HilbertCurve::holder_exhaustive`] will enumerate.
pub const EXHAUSTIVE_BIT_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HilbertCurve {
    k: usize,
    depth: usize,
}

/// A depth-`m` cell, given by integer lower-corner coordinates in units of
/// `2^{-m}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub coords: Vec<u64>,
    pub depth: usize,
}

impl Cell {
    pub fn width(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn corner(&self) -> Vec<f64> {
        let w = self.width();
        self.coords.iter().map(|&c| c as f64 * w).collect()
    }

    /// Sup-norm distance between lower corners, in cell widths.
    pub fn chebyshev(&self, other: &Cell) -> u64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| a.abs_diff(b))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveHolderEstimate {
    pub k: usize,
    pub depth: usize,
    pub max_ratio: f64,
    pub attaining_pair: Option<(u128, u128)>,
    pub pairs: usize,
}

impl HilbertCurve {
    pub fn new(k: usize, depth: usize) -> Result<Self> {
        if k == 0 || k > MAX_DIMENSION {
            return Err(Error::InvalidCurve(format!(
                "dimension {k} outside 1..={MAX_DIMENSION}"
            )));
        }
        if depth == 0 || depth > MAX_DEPTH || k * depth > MAX_INDEX_BITS {
            return Err(Error::InvalidCurve(format!(
                "depth {depth} unsupported in dimension {k}"
            )));
        }
        Ok(Self { k, depth })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn index_bits(&self) -> usize {
        self.k * self.depth
    }

    /// Number of cells, when it fits a `u128`.
    pub fn cell_count(&self) -> Option<u128> {
        1u128.checked_shl(self.index_bits() as u32)
    }

    fn last_index(&self) -> u128 {
        match self.cell_count() {
            Some(n) => n - 1,
            None => u128::MAX,
        }
    }

    /// Cell visited in position `index` of the walk.
    pub fn cell_at_index(&self, index: u128) -> Result<Cell> {
        if index > self.last_index() {
            return Err(Error::InvalidCurve(format!(
                "index {index} beyond the last cell"
            )));
        }
        let (k, m) = (self.k, self.depth);
        let bits = k * m;
        let mut x = vec![0u64; k];
        for q in 0..bits {
            if (index >> (bits - 1 - q)) & 1 == 1 {
                x[q % k] |= 1 << (m - 1 - q / k);
            }
        }
        transpose_to_axes(&mut x, m);
        Ok(Cell {
            coords: x,
            depth: m,
        })
    }

    /// Walk position of the depth-`m` piece containing `t`; `t = 1` belongs
    /// to the last piece and extra bits of `t` are truncated.
    pub fn index_of(&self, t: f64) -> Result<u128> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidCurve(format!("parameter {t} outside [0, 1]")));
        }
        let scaled = t * (self.index_bits() as f64).exp2();
        Ok((scaled.floor() as u128).min(self.last_index()))
    }

    pub fn eval(&self, t: f64) -> Result<Cell> {
        self.cell_at_index(self.index_of(t)?)
    }

    /// Lower corner of the cell visited at `t`.
    pub fn eval_corner(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.eval(t)?.corner())
    }

    /// Walks the whole curve and checks that every cell is visited once and
    /// consecutive cells share a face.
    pub fn coverage_check(&self) -> Result<bool> {
        let bits = self.index_bits();
        if bits > COVERAGE_BIT_LIMIT {
            return Err(Error::TooLarge {
                what: "curve coverage walk",
                limit: 1 << COVERAGE_BIT_LIMIT,
                actual: usize::MAX.checked_shr(64 - bits as u32).unwrap_or(usize::MAX),
            });
        }
        let n = 1usize << bits;
        let mut seen = vec![false; n];
        let mut prev: Option<Cell> = None;
        for i in 0..n {
            let cell = self.cell_at_index(i as u128)?;
            let slot = cell_slot(&cell);
            if seen[slot] {
                return Ok(false);
            }
            seen[slot] = true;
            if let Some(p) = &prev {
                if !face_adjacent(p, &cell) {
                    return Ok(false);
                }
            }
            prev = Some(cell);
        }
        Ok(seen.into_iter().all(|v| v))
    }

    /// Hölder ratio `|h(t) − h(u)|_∞ / |t − u|^{1/k}` between walk positions
    /// `i` and `j`. In cell units this is `chebyshev / |i − j|^{1/k}`.
    pub fn pair_ratio(&self, i: u128, j: u128) -> Result<Option<f64>> {
        if i == j {
            return Ok(None);
        }
        let (a, b) = (self.cell_at_index(i)?, self.cell_at_index(j)?);
        Ok(Some(ratio_in_cells(
            a.chebyshev(&b),
            i.abs_diff(j),
            self.k,
        )))
    }

    /// Empirical Hölder constant over sampled parameter pairs. The first
    /// point is uniform; the gap has a uniformly chosen binary scale and is
    /// uniform within it, so short and long pairs are both represented.
    pub fn holder_estimate(&self, pair_count: usize, seed: u64) -> Result<CurveHolderEstimate> {
        if pair_count == 0 {
            return Err(Error::InvalidConfig("pair_count must be at least 1".into()));
        }
        let bits = self.index_bits();
        if self.k == 1 {
            // the identity
            return Ok(CurveHolderEstimate {
                k: 1,
                depth: self.depth,
                max_ratio: 1.0,
                attaining_pair: Some((0, 1)),
                pairs: pair_count,
            });
        }
        let last = self.last_index();
        let scored: Vec<(f64, u128, u128)> = (0..pair_count)
            .into_par_iter()
            .map(|p| {
                let mut rng = indexed_rng(seed, STREAM_CURVE_PAIRS, p as u64);
                let i = random_u128(&mut rng, last);
                let level = rng.random_range(0..bits) as u32;
                let lo = 1u128 << level;
                let hi = if level + 1 >= 128 { u128::MAX } else { (1u128 << (level + 1)) - 1 };
                let mut gap = lo + random_u128(&mut rng, hi - lo);
                let j = if last - i >= gap {
                    i + gap
                } else if i >= gap {
                    i - gap
                } else if i >= last - i {
                    gap = i;
                    i - gap
                } else {
                    gap = last - i;
                    i + gap
                };
                let ratio = self.pair_ratio(i, j).expect("in range").expect("distinct");
                (ratio, i.min(j), i.max(j))
            })
            .collect();
        let mut best: Option<(f64, u128, u128)> = None;
        for &(r, i, j) in &scored {
            if best.is_none_or(|(b, _, _)| r > b) {
                best = Some((r, i, j));
            }
        }
        let (max_ratio, i, j) = best.expect("pair_count >= 1");
        Ok(CurveHolderEstimate {
            k: self.k,
            depth: self.depth,
            max_ratio,
            attaining_pair: Some((i, j)),
            pairs: pair_count,
        })
    }

    /// Hölder constant over every pair of walk positions.
    pub fn holder_exhaustive(&self) -> Result<CurveHolderEstimate> {
        let bits = self.index_bits();
        if bits > EXHAUSTIVE_BIT_LIMIT {
            return Err(Error::TooLarge {
                what: "exhaustive curve pairs",
                limit: 1 << EXHAUSTIVE_BIT_LIMIT,
                actual: 1usize.checked_shl(bits as u32).unwrap_or(usize::MAX),
            });
        }
        let n = 1usize << bits;
        let k = self.k;
        let mut flat = Vec::with_capacity(n * k);
        for i in 0..n {
            flat.extend(self.cell_at_index(i as u128)?.coords.iter().map(|&c| c as i64));
        }
        // rank pairs by cheb^k / steps, which orders them like the ratio
        let rows: Vec<Option<(f64, usize, usize)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = &flat[i * k..(i + 1) * k];
                let mut best: Option<(f64, usize, usize)> = None;
                for j in i + 1..n {
                    let b = &flat[j * k..(j + 1) * k];
                    let cheb = a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0);
                    let key = (cheb as f64).powi(k as i32) / (j - i) as f64;
                    if best.is_none_or(|(v, _, _)| key > v) {
                        best = Some((key, i, j));
                    }
                }
                best
            })
            .collect();
        let best = crate::sampling::best_by_index(&rows)
            .map(|(_, i, j)| (self.pair_ratio(i as u128, j as u128).ok().flatten().unwrap_or(0.0), i, j));
        Ok(CurveHolderEstimate {
            k: self.k,
            depth: self.depth,
            max_ratio: best.map_or(0.0, |b| b.0),
            attaining_pair: best.map(|(_, i, j)| (i as u128, j as u128)),
            pairs: n * (n - 1) / 2,
        })
    }
}

const STREAM_CURVE_PAIRS: u64 = 0x6375;

fn ratio_in_cells(cheb: u64, steps: u128, k: usize) -> f64 {
    let steps = steps as f64;
    let root = match k {
        1 => steps,
        2 => steps.sqrt(),
        3 => steps.cbrt(),
        _ => steps.powf(1.0 / k as f64),
    };
    cheb as f64 / root
}

fn random_u128<R: Rng + ?Sized>(rng: &mut R, max: u128) -> u128 {
    rng.random_range(0..=max)
}

fn cell_slot(cell: &Cell) -> usize {
    cell.coords
        .iter()
        .fold(0usize, |acc, &c| (acc << cell.depth) | c as usize)
}

fn face_adjacent(a: &Cell, b: &Cell) -> bool {
    let mut moved = 0;
    for (&x, &y) in a.coords.iter().zip(&b.coords) {
        match x.abs_diff(y) {
            0 => {}
            1 => moved += 1,
            _ => return false,
        }
    }
    moved == 1
}

/// Skilling's transposed Hilbert index to axis coordinates, in place.
fn transpose_to_axes(x: &mut [u64], bits: usize) {
    let n = x.len();
    let top: u128 = 1u128 << bits;
    // Gray decode
    let t = x[n - 1] >> 1;
    for i in (1..n).rev() {
        x[i] ^= x[i - 1];
    }
    x[0] ^= t;
    // undo the per-level reflections and exchanges
    let mut q: u128 = 2;
    while q != top {
        let qq = q as u64;
        let p = qq - 1;
        for i in (0..n).rev() {
            if x[i] & qq != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_level_square_order() {
        let h = HilbertCurve::new(2, 1).unwrap();
        let cells: Vec<Vec<f64>> = [0.0, 0.25, 0.5, 0.75]
            .iter()
            .map(|&t| h.eval_corner(t).unwrap())
            .collect();
        assert_eq!(
            cells,
            vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.5], vec![0.5, 0.0]]
        );
    }

    #[test]
    fn one_dimension_is_the_identity() {
        for m in [1usize, 5, 20, 52, 64] {
            let h = HilbertCurve::new(1, m).unwrap();
            for t in [0.0, 0.5, 0.25, 0.375, 0.9990234375] {
                if t * (m as f64).exp2() == (t * (m as f64).exp2()).floor() {
                    assert_eq!(h.eval_corner(t).unwrap(), vec![t]);
                }
            }
        }
        let h = HilbertCurve::new(1, 10).unwrap();
        for i in 0..1024u128 {
            assert_eq!(h.cell_at_index(i).unwrap().coords, vec![i as u64]);
        }
    }

    #[test]
    fn origin_anchor_and_parameter_range() {
        for k in 1..=MAX_DIMENSION {
            let h = HilbertCurve::new(k, 3).unwrap();
            assert_eq!(h.eval(0.0).unwrap().coords, vec![0; k]);
            assert!(h.eval(1.0).is_ok());
            assert!(h.eval(-0.1).is_err());
            assert!(h.eval(1.5).is_err());
        }
        assert!(HilbertCurve::new(0, 3).is_err());
        assert!(HilbertCurve::new(9, 3).is_err());
        assert!(HilbertCurve::new(3, 43).is_err());
    }

    #[test]
    fn small_walks_are_hamiltonian() {
        for (k, m) in [(1, 6), (2, 1), (2, 3), (3, 2), (4, 2), (8, 1)] {
            assert!(HilbertCurve::new(k, m).unwrap().coverage_check().unwrap(), "{k} {m}");
        }
        assert!(HilbertCurve::new(5, 5).unwrap().coverage_check().is_err());
    }

    #[test]
    fn deeper_cells_refine_shallower_ones() {
        let coarse = HilbertCurve::new(3, 2).unwrap();
        let fine = HilbertCurve::new(3, 3).unwrap();
        for i in 0..512u128 {
            let f = fine.cell_at_index(i).unwrap();
            let c = coarse.cell_at_index(i >> 3).unwrap();
            let parent: Vec<u64> = f.coords.iter().map(|x| x >> 1).collect();
            assert_eq!(parent, c.coords);
        }
    }

    #[test]
    fn holder_constants() {
        let line = HilbertCurve::new(1, 12).unwrap();
        assert_eq!(line.holder_estimate(10, 0).unwrap().max_ratio, 1.0);
        assert_eq!(line.holder_exhaustive().unwrap().max_ratio, 1.0);
        let plane = HilbertCurve::new(2, 4).unwrap();
        let exhaustive = plane.holder_exhaustive().unwrap();
        assert!(exhaustive.max_ratio > 1.0 && exhaustive.max_ratio <= 4.0);
        let sampled = plane.holder_estimate(5000, 1).unwrap();
        assert!(sampled.max_ratio <= exhaustive.max_ratio);
        assert_eq!(plane.pair_ratio(3, 3).unwrap(), None);
    }
}

//! Covering and packing counts and the slope estimators built on them.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeSet, DyadicSet, Metric};
use crate::{Error, Result};

/// Largest point set handled by the exact packing and covering searches.
pub const MAX_EXACT_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountKind {
    Covering,
    Packing,
}

/// Whether counts are exact or heuristic bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    Exact,
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountSeries {
    pub kind: CountKind,
    pub grade: Grade,
    entries: Vec<(u32, BigUint)>,
}

/// `log2` of a positive big integer; exact for powers of two.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if x.count_ones() == 1 {
        return (bits - 1) as f64;
    }
    if bits <= 1000 {
        return x.to_f64().expect("finite").log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    top.to_f64().expect("finite").log2() + shift as f64
}

impl CountSeries {
    pub fn new(kind: CountKind, grade: Grade, entries: Vec<(u32, BigUint)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("count levels must be strictly increasing"));
        }
        if entries.iter().any(|(_, c)| c.is_zero()) {
            return Err(Error::invalid("counts must be positive"));
        }
        Ok(CountSeries { kind, grade, entries })
    }

    pub fn from_u64(kind: CountKind, grade: Grade, entries: &[(u32, u64)]) -> Result<Self> {
        Self::new(kind, grade, entries.iter().map(|&(n, c)| (n, BigUint::from(c))).collect())
    }

    pub fn entries(&self) -> &[(u32, BigUint)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn levels(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn get(&self, level: u32) -> Option<&BigUint> {
        self.entries
            .binary_search_by_key(&level, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// `(n, log2(count)/n)` for every level `n ≥ 1`.
    pub fn slopes(&self) -> Vec<(u32, f64)> {
        self.entries
            .iter()
            .filter(|(n, _)| *n > 0)
            .map(|(n, c)| (*n, log2_big(c) / *n as f64))
            .collect()
    }

    /// CSV with columns `level,count,log2count_over_n`; `header` lines are
    /// emitted first, each prefixed with `# `.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("level,count,log2count_over_n\n");
        for (n, c) in &self.entries {
            if *n == 0 {
                let _ = writeln!(out, "0,{c},");
            } else {
                let _ = writeln!(out, "{n},{c},{:.12}", log2_big(c) / *n as f64);
            }
        }
        out
    }
}

/// Grid counts: the number of live level-`m` cubes for each requested `m`.
pub fn covering_counts(set: &dyn CubeSet, levels: &[u32]) -> Result<CountSeries> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if let Some(&bad) = levels.iter().find(|&&m| m > set.depth()) {
        return Err(Error::LevelExceedsDepth { level: bad, depth: set.depth() });
    }
    let entries: Vec<(u32, BigUint)> = levels.par_iter().map(|&m| (m, set.count_at(m))).collect();
    if entries.iter().any(|(_, c)| c.is_zero()) {
        return Err(Error::EmptySet("covering counts"));
    }
    CountSeries::new(CountKind::Covering, Grade::Exact, entries)
}

/// `(min, max)` of `log2(count)/n` over the trailing `window` levels (default:
/// the top third of the available levels).
pub fn box_dim_estimate(series: &CountSeries, window: Option<usize>) -> Result<(f64, f64)> {
    let slopes = series.slopes();
    if slopes.is_empty() {
        return Err(Error::EmptySet("count series"));
    }
    if series.len() < 2 {
        return Err(Error::invalid("slope estimates need at least two levels"));
    }
    let w = window.unwrap_or(slopes.len().div_ceil(3)).clamp(1, slopes.len());
    let tail = &slopes[slopes.len() - w..];
    let lo = tail.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = tail.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// A finite metric space on indices `0..len()`.
pub trait FiniteMetric: Sync {
    fn len(&self) -> usize;

    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub metric: Metric,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, metric: Metric) -> Result<Self> {
        if let Some(first) = points.first() {
            if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
                return Err(Error::DimensionMismatch { left: first.len(), right: bad.len() });
            }
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        Ok(PointCloud { points, metric })
    }

    /// Centers of the leaves of a dyadic set.
    pub fn from_cells(set: &DyadicSet, metric: Metric) -> Self {
        let side = (-(set.depth() as f64)).exp2();
        let points = set
            .leaves()
            .map(|c| c.iter().map(|&x| (x as f64 + 0.5) * side).collect())
            .collect();
        PointCloud { points, metric }
    }
}

pub fn point_distance(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    match metric {
        Metric::Sup => diffs.fold(0.0, f64::max),
        Metric::Euclidean => diffs.map(|v| v * v).sum::<f64>().sqrt(),
    }
}

impl FiniteMetric for PointCloud {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        point_distance(&self.points[i], &self.points[j], self.metric)
    }
}

/// A symmetric matrix of pairwise distances, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates shape, symmetry, zero diagonal, positivity off the diagonal
    /// and the triangle inequality.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("distance matrix must be square"));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        let at = |i: usize, j: usize| values[i * n + j];
        for i in 0..n {
            if at(i, i) != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = at(i, j);
                if !v.is_finite() || v < 0.0 || v != at(j, i) || (i != j && v == 0.0) {
                    return Err(Error::invalid(format!("entry ({i},{j}) breaks the metric axioms")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if at(i, k) > at(i, j) + at(j, k) + 1e-12 * (1.0 + at(i, k)) {
                        return Err(Error::invalid(format!("triangle inequality fails at ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(DistanceMatrix { n, values })
    }

    pub fn from_metric(space: &dyn FiniteMetric) -> Self {
        let n = space.len();
        let values = (0..n * n).map(|k| space.dist(k / n, k % n)).collect();
        DistanceMatrix { n, values }
    }
}

impl FiniteMetric for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Scans points in index order, keeping each one farther than `delta` from
/// everything kept so far. The result is an inclusion-maximal `delta`-packing.
pub fn greedy_packing(space: &dyn FiniteMetric, delta: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..space.len() {
        if kept.iter().all(|&j| space.dist(i, j) > delta) {
            kept.push(i);
        }
    }
    kept
}

pub fn is_packing(space: &dyn FiniteMetric, points: &[usize], delta: f64) -> bool {
    points
        .iter()
        .enumerate()
        .all(|(a, &i)| points[a + 1..].iter().all(|&j| space.dist(i, j) > delta))
}

/// No further point of the space can be added without breaking separation.
pub fn is_maximal_packing(space: &dyn FiniteMetric, points: &[usize], delta: f64) -> bool {
    is_packing(space, points, delta)
        && (0..space.len()).all(|i| points.contains(&i) || points.iter().any(|&j| space.dist(i, j) <= delta))
}

fn conflict_masks(space: &dyn FiniteMetric, within: f64) -> Result<Vec<u64>> {
    let n = space.len();
    if n > MAX_EXACT_POINTS {
        return Err(Error::ResourceLimit(format!(
            "exact search supports at most {MAX_EXACT_POINTS} points, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| space.dist(i, j) <= within)
                .fold(0u64, |m, j| m | 1 << j)
        })
        .collect())
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

struct Mis<'a> {
    closed: &'a [u64],
    best: u64,
}

impl Mis<'_> {
    fn run(&mut self, cand: u64, chosen: u64) {
        if chosen.count_ones() + cand.count_ones() <= self.best.count_ones() {
            return;
        }
        if cand == 0 {
            self.best = chosen;
            return;
        }
        // a vertex of degree ≤ 1 among the candidates is always safe to take
        let degree = |v: usize| (self.closed[v] & cand).count_ones() - 1;
        let (low, low_deg) = bits(cand).map(|v| (v, degree(v))).min_by_key(|e| e.1).expect("nonempty");
        if low_deg <= 1 {
            self.run(cand & !self.closed[low], chosen | 1 << low);
            return;
        }
        let (high, _) = bits(cand).map(|v| (v, degree(v))).max_by_key(|e| e.1).expect("nonempty");
        self.run(cand & !self.closed[high], chosen | 1 << high);
        self.run(cand & !(1 << high), chosen);
    }
}

/// A maximum-cardinality `delta`-packing by branch-and-bound.
pub fn exact_max_packing(space: &dyn FiniteMetric, delta: f64) -> Result<Vec<usize>> {
    let closed = conflict_masks(space, delta)?;
    let n = space.len();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let seed = greedy_packing(space, delta).iter().fold(0u64, |m, &i| m | 1 << i);
    let mut search = Mis { closed: &closed, best: seed };
    search.run(all, 0);
    Ok(bits(search.best).collect())
}

struct Cover<'a> {
    covers: &'a [u64],
    best: Vec<usize>,
    max_cover: u32,
}

impl Cover<'_> {
    fn run(&mut self, uncovered: u64, chosen: &mut Vec<usize>) {
        if uncovered == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        let need = uncovered.count_ones().div_ceil(self.max_cover) as usize;
        if chosen.len() + need >= self.best.len() {
            return;
        }
        // branch on the uncovered point with the fewest covering centers
        let pivot = bits(uncovered)
            .min_by_key(|&p| self.covers[p].count_ones())
            .expect("nonempty");
        let mut options: Vec<usize> = bits(self.covers[pivot]).collect();
        options.sort_by_key(|&c| std::cmp::Reverse((self.covers[c] & uncovered).count_ones()));
        for c in options {
            chosen.push(c);
            self.run(uncovered & !self.covers[c], chosen);
            chosen.pop();
        }
    }
}

/// A minimum set of centers (points of the space) whose closed `radius`-balls
/// cover the space.
pub fn exact_min_cover(space: &dyn FiniteMetric, radius: f64) -> Result<Vec<usize>> {
    let covers = conflict_masks(space, radius)?;
    let n = space.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let greedy = greedy_cover(&covers, all);
    let max_cover = covers.iter().map(|m| m.count_ones()).max().unwrap_or(1);
    let mut search = Cover { covers: &covers, best: greedy, max_cover };
    search.run(all, &mut Vec::new());
    Ok(search.best)
}

fn greedy_cover(covers: &[u64], all: u64) -> Vec<usize> {
    let mut left = all;
    let mut out = Vec::new();
    while left != 0 {
        let c = (0..covers.len())
            .max_by_key(|&c| ((covers[c] & left).count_ones(), std::cmp::Reverse(c)))
            .expect("nonempty");
        out.push(c);
        left &= !covers[c];
    }
    out
}

/// Greedy ball cover (an upper bound on the minimum), usable at any size.
pub fn greedy_min_cover(space: &dyn FiniteMetric, radius: f64) -> Vec<usize> {
    let mut covered = vec![false; space.len()];
    let mut out = Vec::new();
    for i in 0..space.len() {
        if covered[i] {
            continue;
        }
        out.push(i);
        for (j, flag) in covered.iter_mut().enumerate() {
            if !*flag && space.dist(i, j) <= radius {
                *flag = true;
            }
        }
    }
    out
}

fn radius(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

/// `P_n` at each level: exact when the space is small enough, greedy otherwise.
pub fn packing_counts(space: &dyn FiniteMetric, levels: &[u32]) -> Result<CountSeries> {
    if space.is_empty() {
        return Err(Error::EmptySet("packing counts"));
    }
    let exact = space.len() <= MAX_EXACT_POINTS;
    let entries = levels
        .iter()
        .map(|&n| {
            let size = if exact {
                exact_max_packing(space, radius(n))?.len()
            } else {
                greedy_packing(space, radius(n)).len()
            };
            Ok((n, BigUint::from(size)))
        })
        .collect::<Result<Vec<_>>>()?;
    let grade = if exact { Grade::Exact } else { Grade::Greedy };
    CountSeries::new(CountKind::Packing, grade, entries)
}

/// `N_n` as the minimal number of closed `2^{-n}`-balls centered in the space.
pub fn ball_covering_counts(space: &dyn FiniteMetric, levels: &[u32]) -> Result<CountSeries> {
    if space.is_empty() {
        return Err(Error::EmptySet("covering counts"));
    }
    let exact = space.len() <= MAX_EXACT_POINTS;
    let entries = levels
        .iter()
        .map(|&n| {
            let size = if exact {
                exact_min_cover(space, radius(n))?.len()
            } else {
                greedy_min_cover(space, radius(n)).len()
            };
            Ok((n, BigUint::from(size)))
        })
        .collect::<Result<Vec<_>>>()?;
    let grade = if exact { Grade::Exact } else { Grade::Greedy };
    CountSeries::new(CountKind::Covering, grade, entries)
}

/// Checks `N_n ≤ P_n` at every packing level and `P_n ≤ N_{n+1}` wherever the
/// covering series has level `n+1`.
pub fn chain_check(covering: &CountSeries, packing: &CountSeries) -> Result<bool> {
    let mut ok = true;
    for (n, p) in packing.entries() {
        let nn = covering.get(*n).ok_or(Error::MisalignedLevels)?;
        ok &= nn <= p;
        if let Some(next) = covering.get(n + 1) {
            ok &= p <= next;
        }
    }
    Ok(ok)
}

/// Grid counts of `A × B` equal the products of the factor counts at every level.
pub fn product_inequality_check(a: &DyadicSet, b: &DyadicSet, levels: &[u32]) -> Result<bool> {
    let prod = a.product(b)?;
    let ca = covering_counts(a, levels)?;
    let cb = covering_counts(b, levels)?;
    let cp = covering_counts(&prod, levels)?;
    Ok(ca
        .entries()
        .iter()
        .zip(cb.entries())
        .zip(cp.entries())
        .all(|(((_, x), (_, y)), (_, z))| x * y == *z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::kx_set;
    use crate::seq::Word;

    #[test]
    fn kx_counts_match_sigma() {
        let x: Word = "1011001".parse().unwrap();
        let k = kx_set(&x).unwrap();
        let s = covering_counts(&k, &[0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        for (n, c) in s.entries() {
            assert_eq!(*c, BigUint::from(1u8) << x.prefix(*n as usize).sigma());
        }
        assert!(covering_counts(&k, &[8]).is_err());
    }

    #[test]
    fn full_square_slopes() {
        let sq = DyadicSet::full(2, 6).unwrap();
        let s = covering_counts(&sq, &(0..=6).collect::<Vec<_>>()).unwrap();
        assert_eq!(box_dim_estimate(&s, None).unwrap(), (2.0, 2.0));
    }

    #[test]
    fn unit_grid_chain() {
        let pts = PointCloud::new((0..64).map(|i| vec![i as f64 / 63.0]).collect(), Metric::Sup).unwrap();
        let n = ball_covering_counts(&pts, &[6, 7]).unwrap();
        let p = packing_counts(&pts, &[6]).unwrap();
        assert_eq!(p.grade, Grade::Exact);
        assert!(chain_check(&n, &p).unwrap());
        let misaligned = CountSeries::from_u64(CountKind::Covering, Grade::Exact, &[(3, 1)]).unwrap();
        assert_eq!(chain_check(&misaligned, &p), Err(Error::MisalignedLevels));
    }

    #[test]
    fn greedy_is_maximal() {
        let pts = PointCloud::new((0..10).map(|i| vec![i as f64 * 0.1]).collect(), Metric::Sup).unwrap();
        let g = greedy_packing(&pts, 0.15);
        assert!(is_maximal_packing(&pts, &g, 0.15));
        assert_eq!(g, vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn csv_layout() {
        let s = CountSeries::from_u64(CountKind::Covering, Grade::Exact, &[(0, 1), (2, 8)]).unwrap();
        let text = s.to_csv(&["seed=1".to_string()]);
        assert_eq!(text, "# seed=1\nlevel,count,log2count_over_n\n0,1,\n2,8,1.500000000000\n");
    }
}

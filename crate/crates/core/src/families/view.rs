use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dims::{DistanceMatrix, FiniteMetric};
use crate::dyadic::Metric;
use crate::{Error, Result};

/// Bits of the fixed grid that free-form coordinates are snapped to.
pub const SNAP_BITS: u32 = 40;
const MAX_BITS: u32 = 60;

#[derive(Clone, Debug)]
enum Repr {
    /// Product of sorted axis coordinate lists; point indices are mixed-radix
    /// in lexicographic order.
    Grid { axes: Vec<Vec<i64>>, strides: Vec<usize> },
    Points { coords: Vec<i64>, d: usize },
    Matrix(DistanceMatrix),
}

/// A finite net of a compact metric space with a distinguished origin.
///
/// Coordinate nets store integers on a `2^{-bits}` grid, so every comparison
/// of a distance against a power of two is exact.
#[derive(Clone, Debug)]
pub struct MetricSpaceView {
    repr: Repr,
    bits: u32,
    metric: Metric,
    origin: usize,
    epsilon: f64,
}

impl MetricSpaceView {
    /// The product grid with the given axis coordinates, in units of `2^{-bits}`.
    pub fn product_grid(mut axes: Vec<Vec<i64>>, bits: u32, metric: Metric, origin: &[i64]) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(Error::EmptySet("product grid"));
        }
        if bits > MAX_BITS {
            return Err(Error::invalid(format!("at most {MAX_BITS} bits of resolution")));
        }
        let bound = 1i64 << (MAX_BITS + 1);
        if axes.iter().flatten().any(|c| c.abs() > bound) {
            return Err(Error::invalid("grid coordinates out of range"));
        }
        for a in &mut axes {
            a.sort_unstable();
            a.dedup();
        }
        if origin.len() != axes.len() {
            return Err(Error::DimensionMismatch { left: axes.len(), right: origin.len() });
        }
        let mut strides = vec![1usize; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1]
                .checked_mul(axes[k + 1].len())
                .ok_or(Error::ResourceLimit("grid too large".into()))?;
        }
        strides[0]
            .checked_mul(axes[0].len())
            .ok_or(Error::ResourceLimit("grid too large".into()))?;
        let mut idx = 0;
        for (k, c) in origin.iter().enumerate() {
            let pos = axes[k]
                .binary_search(c)
                .map_err(|_| Error::invalid("origin is not a grid point"))?;
            idx += pos * strides[k];
        }
        let epsilon = axes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .max()
            .map_or(0.0, |g| g as f64 * (-(bits as f64)).exp2());
        Ok(MetricSpaceView {
            repr: Repr::Grid { axes, strides },
            bits,
            metric,
            origin: idx,
            epsilon,
        })
    }

    /// The points `i 2^{-side_bits}`, `0 ≤ i < 2^{side_bits}`, in each coordinate.
    pub fn uniform_grid(d: usize, side_bits: u32, metric: Metric) -> Result<Self> {
        if side_bits > 16 || d == 0 {
            return Err(Error::invalid("uniform grid needs d ≥ 1 and at most 16 bits per side"));
        }
        let axis: Vec<i64> = (0..1i64 << side_bits).collect();
        let mid = vec![1i64 << side_bits.saturating_sub(1); d];
        let mid: Vec<i64> = if side_bits == 0 { vec![0; d] } else { mid };
        Self::product_grid(vec![axis; d], side_bits, metric, &mid)
    }

    /// A product grid refined geometrically around `center`: each axis holds
    /// `c + m 2^{-s}` for `|m| ≤ spread` and `s = 0, 1, …` inside `[0, 1]`,
    /// taken in order of `(s, |m|, sign)` until `per_axis` values exist.
    pub fn zoom_grid(center: &[i64], center_bits: u32, per_axis: usize, spread: i64, metric: Metric) -> Result<Self> {
        if spread < 1 || per_axis < 2 || center_bits > MAX_BITS {
            return Err(Error::invalid("zoom grid needs spread ≥ 1 and at least two values per axis"));
        }
        let lift = MAX_BITS - center_bits;
        let one = 1i64 << MAX_BITS;
        let mut axes = Vec::new();
        for &c in center {
            let c = c << lift;
            if !(0..=one).contains(&c) {
                return Err(Error::invalid("zoom center outside [0,1]"));
            }
            let mut seen = std::collections::BTreeSet::new();
            'scales: for s in 0..=MAX_BITS {
                for m in 0..=spread {
                    for sign in [1i64, -1] {
                        if m == 0 && sign < 0 {
                            continue;
                        }
                        let step = 1i64 << (MAX_BITS - s);
                        if m > 2 * one / step {
                            continue;
                        }
                        let v = c + sign * m * step;
                        if (0..=one).contains(&v) {
                            seen.insert(v);
                            if seen.len() == per_axis {
                                break 'scales;
                            }
                        }
                    }
                }
            }
            if seen.len() < per_axis {
                return Err(Error::ResourceLimit("zoom grid exhausted the coordinate range".into()));
            }
            axes.push(seen.into_iter().collect::<Vec<_>>());
        }
        let lifted: Vec<i64> = center.iter().map(|&c| c << lift).collect();
        let tz = axes
            .iter()
            .flatten()
            .chain(&lifted)
            .filter(|&&v| v != 0)
            .map(|v| v.trailing_zeros())
            .min()
            .unwrap_or(MAX_BITS)
            .min(MAX_BITS);
        let axes: Vec<Vec<i64>> = axes.into_iter().map(|a| a.into_iter().map(|v| v >> tz).collect()).collect();
        let origin: Vec<i64> = lifted.iter().map(|&c| c >> tz).collect();
        Self::product_grid(axes, MAX_BITS - tz, metric, &origin)
    }

    /// Explicit points, snapped to the `2^{-40}` grid and deduplicated in
    /// first-seen order. `origin` indexes the input list.
    pub fn from_points(points: &[Vec<f64>], metric: Metric, origin: usize, epsilon: f64) -> Result<Self> {
        let d = points.first().ok_or(Error::EmptySet("point net"))?.len();
        if origin >= points.len() {
            return Err(Error::invalid("origin index out of range"));
        }
        let scale = (SNAP_BITS as f64).exp2();
        let mut coords = Vec::new();
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut origin_idx = 0;
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch { left: d, right: p.len() });
            }
            if p.iter().any(|x| !x.is_finite() || x.abs() > 1e6) {
                return Err(Error::invalid("coordinates must be finite and at most 1e6 in size"));
            }
            let key: Vec<i64> = p.iter().map(|x| (x * scale).round() as i64).collect();
            let next = index.len();
            let id = *index.entry(key.clone()).or_insert_with(|| {
                coords.extend_from_slice(&key);
                next
            });
            if i == origin {
                origin_idx = id;
            }
        }
        Ok(MetricSpaceView {
            repr: Repr::Points { coords, d },
            bits: SNAP_BITS,
            metric,
            origin: origin_idx,
            epsilon,
        })
    }

    /// Parses one point per line, coordinates separated by commas; lines
    /// starting with `#` are skipped.
    pub fn from_csv(text: &str, metric: Metric, origin: usize, epsilon: f64) -> Result<Self> {
        let mut points = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
            points.push(row);
        }
        Self::from_points(&points, metric, origin, epsilon)
    }

    pub fn from_matrix(matrix: DistanceMatrix, origin: usize, epsilon: f64) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::EmptySet("distance matrix"));
        }
        if origin >= matrix.len() {
            return Err(Error::invalid("origin index out of range"));
        }
        Ok(MetricSpaceView {
            repr: Repr::Matrix(matrix),
            bits: 0,
            metric: Metric::Euclidean,
            origin,
            epsilon,
        })
    }

    /// Rows of a whitespace or comma separated square distance matrix.
    pub fn from_matrix_text(text: &str, origin: usize, epsilon: f64) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|f| !f.is_empty())
                    .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrix(DistanceMatrix::new(rows)?, origin, epsilon)
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Grid { axes, strides } => strides[0] * axes[0].len(),
            Repr::Points { coords, d } => coords.len() / d,
            Repr::Matrix(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Dimension of the ambient coordinates, if the net has any.
    pub fn dim(&self) -> Option<usize> {
        match &self.repr {
            Repr::Grid { axes, .. } => Some(axes.len()),
            Repr::Points { d, .. } => Some(*d),
            Repr::Matrix(_) => None,
        }
    }

    fn int_coords(&self, i: usize) -> Option<Vec<i64>> {
        match &self.repr {
            Repr::Grid { axes, strides } => Some(
                axes.iter()
                    .zip(strides)
                    .map(|(a, &s)| a[(i / s) % a.len()])
                    .collect(),
            ),
            Repr::Points { coords, d } => Some(coords[i * d..(i + 1) * d].to_vec()),
            Repr::Matrix(_) => None,
        }
    }

    /// Real coordinates of point `i`.
    pub fn point(&self, i: usize) -> Option<Vec<f64>> {
        let scale = (-(self.bits as f64)).exp2();
        self.int_coords(i).map(|c| c.iter().map(|&v| v as f64 * scale).collect())
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Matrix(m) => m.dist(i, j),
            _ => {
                let (a, b) = (self.point(i).unwrap(), self.point(j).unwrap());
                crate::dims::point_distance(&a, &b, self.metric)
            }
        }
    }

    /// Compares `dist(i, j)` with `2^{-n}`, exactly for coordinate nets.
    pub fn cmp_radius(&self, i: usize, j: usize, n: i32) -> Ordering {
        if let Repr::Matrix(m) = &self.repr {
            return m.dist(i, j).partial_cmp(&(-(n as f64)).exp2()).expect("finite");
        }
        let (a, b) = (self.int_coords(i).unwrap(), self.int_coords(j).unwrap());
        cmp_int(&a, &b, self.bits as i32 - n, self.metric)
    }

    /// `dist(i, j) ≤ 2^{-n}`.
    pub fn within(&self, i: usize, j: usize, n: i32) -> bool {
        self.cmp_radius(i, j, n) != Ordering::Greater
    }

    /// The closed ball `B(center, 2^{-n})` in increasing index order.
    pub fn ball(&self, center: usize, n: i32) -> Vec<usize> {
        self.ball_iter(center, n).collect()
    }

    /// Lazy form of [`ball`](Self::ball).
    pub fn ball_iter(&self, center: usize, n: i32) -> BallIter<'_> {
        let c = self.int_coords(center);
        let state = match (&self.repr, c) {
            (Repr::Grid { axes, .. }, Some(c)) => {
                let e = self.bits as i32 - n;
                let r = if e < 0 { 0 } else if e > 61 { i64::MAX / 4 } else { 1i64 << e };
                let ranges: Vec<(usize, usize)> = axes
                    .iter()
                    .zip(&c)
                    .map(|(a, &v)| {
                        let lo = a.partition_point(|&x| x < v.saturating_sub(r));
                        let hi = a.partition_point(|&x| x <= v.saturating_add(r));
                        (lo, hi)
                    })
                    .collect();
                let done = ranges.iter().any(|r| r.0 >= r.1);
                let pos = ranges.iter().map(|r| r.0).collect();
                BallState::Grid { center: c, ranges, pos, done }
            }
            _ => BallState::Scan { next: 0 },
        };
        BallIter { view: self, center, n, state }
    }

    /// Scans `candidates` in order, keeping points farther than `2^{-n}` from
    /// every kept point; stops once `stop_at` points are kept.
    pub fn greedy_packing<I: IntoIterator<Item = usize>>(&self, candidates: I, n: i32, stop_at: Option<usize>) -> Vec<usize> {
        let cap = stop_at.unwrap_or(usize::MAX);
        let mut kept = Vec::new();
        if cap == 0 {
            return kept;
        }
        if let Repr::Matrix(_) = &self.repr {
            for i in candidates {
                if kept.iter().all(|&k| !self.within(i, k, n)) {
                    kept.push(i);
                    if kept.len() >= cap {
                        break;
                    }
                }
            }
            return kept;
        }
        let e = self.bits as i32 - n;
        if e < 0 {
            // distinct net points are at least one unit apart
            kept.extend(candidates.into_iter().take(cap));
            return kept;
        }
        let side = 1i64 << e.min(61);
        let mut buckets: HashMap<Key, Vec<Key>> = HashMap::new();
        for i in candidates {
            let c: Key = self.int_coords(i).unwrap().into_iter().collect();
            let key: Key = c.iter().map(|v| v.div_euclid(side)).collect();
            let blocked = neighbours(&key).any(|nb| {
                buckets
                    .get(&nb)
                    .is_some_and(|pts| pts.iter().any(|k| cmp_int(&c, k, e, self.metric) != Ordering::Greater))
            });
            if blocked {
                continue;
            }
            buckets.entry(key).or_default().push(c);
            kept.push(i);
            if kept.len() >= cap {
                break;
            }
        }
        kept
    }

    /// Size of the canonical greedy maximal `2^{-j}`-packing of `B(center, 2^{-g})`,
    /// counted up to `stop_at`.
    pub fn packing_number(&self, center: usize, g: i32, j: i32, stop_at: Option<usize>) -> usize {
        self.ball_packing(center, g, j, stop_at).len()
    }

    /// The canonical greedy `2^{-j}`-packing of `B(center, 2^{-g})`: the same
    /// points as [`greedy_packing`](Self::greedy_packing) over the ball in
    /// index order, found row by row on product grids.
    pub fn ball_packing(&self, center: usize, g: i32, j: i32, stop_at: Option<usize>) -> Vec<usize> {
        match &self.repr {
            Repr::Grid { axes, strides } => self.grid_ball_packing(axes, strides, center, g, j, stop_at),
            _ => self.greedy_packing(self.ball_iter(center, g), j, stop_at),
        }
    }

    fn grid_ball_packing(
        &self,
        axes: &[Vec<i64>],
        strides: &[usize],
        center: usize,
        g: i32,
        j: i32,
        stop_at: Option<usize>,
    ) -> Vec<usize> {
        let cap = stop_at.unwrap_or(usize::MAX);
        let mut kept: Vec<usize> = Vec::new();
        if cap == 0 {
            return kept;
        }
        let d = axes.len();
        let c = self.int_coords(center).unwrap();
        let radius = |e: i32| -> i64 {
            if e < 0 {
                0
            } else if e > 61 {
                i64::MAX / 4
            } else {
                1i64 << e
            }
        };
        // ball radius, and the blocking radius; a negative exponent means the
        // radius is below one unit, where only coincident points are close
        let big = radius(self.bits as i32 - g);
        let e_sep = self.bits as i32 - j;
        let sep = radius(e_sep);
        let sup = self.metric == Metric::Sup;
        let half_width = |r: i64, strict_small: bool, other: &[i64], base: &[i64]| -> Option<i64> {
            if strict_small {
                return other.iter().zip(base).all(|(a, b)| a == b).then_some(0);
            }
            if sup {
                other.iter().zip(base).all(|(a, b)| a.abs_diff(*b) <= r as u64).then_some(r)
            } else {
                let o2: u128 = other.iter().zip(base).map(|(a, b)| (a.abs_diff(*b) as u128).pow(2)).sum();
                let r2 = (r as u128) * (r as u128);
                (o2 <= r2).then(|| num_integer::Roots::sqrt(&(r2 - o2)) as i64)
            }
        };
        let ball_small = self.bits as i32 - g < 0;
        let sep_small = e_sep < 0;
        let ranges: Vec<(usize, usize)> = axes
            .iter()
            .zip(&c)
            .map(|(a, &v)| {
                (
                    a.partition_point(|&x| x < v.saturating_sub(big)),
                    a.partition_point(|&x| x <= v.saturating_add(big)),
                )
            })
            .collect();
        if ranges.iter().any(|r| r.0 >= r.1) {
            return kept;
        }
        let last = &axes[d - 1];
        let mut kept_coords: Vec<Key> = Vec::new();
        let mut pos: Vec<usize> = ranges[..d - 1].iter().map(|r| r.0).collect();
        let mut other: Vec<i64> = vec![0; d - 1];
        loop {
            for k in 0..d - 1 {
                other[k] = axes[k][pos[k]];
            }
            if let Some(w) = half_width(big, ball_small, &other, &c[..d - 1]) {
                let (row_lo, row_hi) = (c[d - 1].saturating_sub(w), c[d - 1].saturating_add(w));
                let mut blocks: Vec<(i64, i64)> = kept_coords
                    .iter()
                    .filter_map(|kc| {
                        half_width(sep, sep_small, &other, &kc[..d - 1])
                            .map(|w| (kc[d - 1].saturating_sub(w), kc[d - 1].saturating_add(w)))
                    })
                    .collect();
                let mut p = last.partition_point(|&x| x < row_lo).max(ranges[d - 1].0);
                while p < last.len() && last[p] <= row_hi {
                    let v = last[p];
                    let reach = blocks.iter().filter(|b| b.0 <= v && v <= b.1).map(|b| b.1).max();
                    match reach {
                        Some(h) => p = last.partition_point(|&x| x <= h),
                        None => {
                            let idx: usize = pos.iter().zip(strides).map(|(q, s)| q * s).sum::<usize>() + p * strides[d - 1];
                            kept.push(idx);
                            if kept.len() >= cap {
                                return kept;
                            }
                            let mut kc: Key = other.iter().copied().collect();
                            kc.push(v);
                            kept_coords.push(kc);
                            let w = if sep_small { 0 } else { sep };
                            blocks.push((v.saturating_sub(w), v.saturating_add(w)));
                        }
                    }
                }
            }
            // next row
            let mut k = d - 1;
            loop {
                if k == 0 {
                    return kept;
                }
                k -= 1;
                pos[k] += 1;
                if pos[k] < ranges[k].1 {
                    break;
                }
                pos[k] = ranges[k].0;
            }
        }
    }

    /// Whether `points` is a `2^{-n}`-packing (pairwise distances `> 2^{-n}`).
    pub fn is_packing(&self, points: &[usize], n: i32) -> bool {
        points
            .iter()
            .enumerate()
            .all(|(a, &p)| points[a + 1..].iter().all(|&q| !self.within(p, q, n)))
    }

    /// Whether every point of `a` lies within `2^{-n}` of `b` and vice versa.
    pub fn hausdorff_within(&self, a: &[usize], b: &[usize], n: i32) -> bool {
        if let (Some(ca), Some(cb)) = (self.cloud(a), self.cloud(b)) {
            let e = self.bits as i32 - n;
            let reach = if e < 0 { 0 } else { 1u64.checked_shl(e as u32).unwrap_or(u64::MAX) };
            let covered = |x: &Cloud, y: &Cloud| {
                x.iter().all(|p| {
                    y.window(p[0], reach)
                        .iter()
                        .any(|q| cmp_int(p, q, e, self.metric) != Ordering::Greater)
                })
            };
            return covered(&ca, &cb) && covered(&cb, &ca);
        }
        let covered = |x: &[usize], y: &[usize]| x.iter().all(|&p| y.iter().any(|&q| self.within(p, q, n)));
        covered(a, b) && covered(b, a)
    }

    /// Hausdorff distance between two point sets.
    pub fn hausdorff(&self, a: &[usize], b: &[usize]) -> f64 {
        if let (Some(ca), Some(cb)) = (self.cloud(a), self.cloud(b)) {
            if ca.is_empty() || cb.is_empty() {
                return if ca.is_empty() && cb.is_empty() { 0.0 } else { f64::INFINITY };
            }
            let unit = (-(self.bits as f64)).exp2();
            let directed = |x: &Cloud, y: &Cloud| {
                x.iter()
                    .map(|p| y.nearest(p, self.metric))
                    .max()
                    .unwrap_or(0)
            };
            let worst = directed(&ca, &cb).max(directed(&cb, &ca));
            return match self.metric {
                Metric::Sup => worst as f64 * unit,
                Metric::Euclidean => (worst as f64).sqrt() * unit,
            };
        }
        let directed = |x: &[usize], y: &[usize]| {
            x.iter()
                .map(|&p| y.iter().map(|&q| self.dist(p, q)).fold(f64::INFINITY, f64::min))
                .fold(0.0f64, f64::max)
        };
        directed(a, b).max(directed(b, a))
    }

    fn cloud(&self, pts: &[usize]) -> Option<Cloud> {
        let mut v: Vec<Vec<i64>> = pts.iter().map(|&i| self.int_coords(i)).collect::<Option<_>>()?;
        v.sort_unstable();
        Some(Cloud(v))
    }

    /// Checks symmetry, identity and the triangle inequality on `samples`
    /// random triples.
    pub fn check_axioms(&self, samples: usize, seed: u64) -> bool {
        let n = self.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples).all(|_| {
            let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            let (ij, jk, ik) = (self.dist(i, j), self.dist(j, k), self.dist(i, k));
            self.dist(i, i) == 0.0
                && ij == self.dist(j, i)
                && (i == j || ij > 0.0)
                && ik <= ij + jk + 1e-12 * (1.0 + ik)
        })
    }
}

type Key = smallvec::SmallVec<[i64; 4]>;

enum BallState {
    Grid { center: Vec<i64>, ranges: Vec<(usize, usize)>, pos: Vec<usize>, done: bool },
    Scan { next: usize },
}

pub struct BallIter<'a> {
    view: &'a MetricSpaceView,
    center: usize,
    n: i32,
    state: BallState,
}

impl Iterator for BallIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let view = self.view;
        match &mut self.state {
            BallState::Scan { next } => {
                while *next < view.len() {
                    let j = *next;
                    *next += 1;
                    if view.within(self.center, j, self.n) {
                        return Some(j);
                    }
                }
                None
            }
            BallState::Grid { center, ranges, pos, done } => {
                let Repr::Grid { axes, strides } = &view.repr else { unreachable!() };
                let e = view.bits as i32 - self.n;
                let mut coords: Key = Key::new();
                while !*done {
                    let idx: usize = pos.iter().zip(strides.iter()).map(|(p, s)| p * s).sum();
                    coords.clear();
                    coords.extend(pos.iter().zip(axes).map(|(&p, a)| a[p]));
                    let hit = view.metric == Metric::Sup || cmp_int(center, &coords, e, view.metric) != Ordering::Greater;
                    // advance the mixed-radix counter
                    let mut k = pos.len();
                    loop {
                        if k == 0 {
                            *done = true;
                            break;
                        }
                        k -= 1;
                        pos[k] += 1;
                        if pos[k] < ranges[k].1 {
                            break;
                        }
                        pos[k] = ranges[k].0;
                    }
                    if hit {
                        return Some(idx);
                    }
                }
                None
            }
        }
    }
}

/// Integer points sorted by first coordinate, for windowed neighbour scans.
struct Cloud(Vec<Vec<i64>>);

impl Cloud {
    fn iter(&self) -> std::slice::Iter<'_, Vec<i64>> {
        self.0.iter()
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Points whose first coordinate is within `reach` of `x`.
    fn window(&self, x: i64, reach: u64) -> &[Vec<i64>] {
        let lo = self.0.partition_point(|q| q[0] < x && x.abs_diff(q[0]) > reach);
        let hi = self.0.partition_point(|q| q[0] <= x || q[0].abs_diff(x) <= reach);
        &self.0[lo..hi]
    }

    /// Distance from `p` to the nearest point: the max difference for sup,
    /// the squared distance for Euclidean.
    fn nearest(&self, p: &[i64], metric: Metric) -> u128 {
        let key = |q: &[i64]| -> u128 {
            let diffs = p.iter().zip(q).map(|(a, b)| a.abs_diff(*b) as u128);
            match metric {
                Metric::Sup => diffs.max().unwrap_or(0),
                Metric::Euclidean => diffs.map(|v| v * v).sum(),
            }
        };
        let gap = |q: &[i64]| -> u128 {
            let v = p[0].abs_diff(q[0]) as u128;
            match metric {
                Metric::Sup => v,
                Metric::Euclidean => v * v,
            }
        };
        let start = self.0.partition_point(|q| q[0] < p[0]);
        let mut best = u128::MAX;
        for q in &self.0[start..] {
            if gap(q) > best {
                break;
            }
            best = best.min(key(q));
        }
        for q in self.0[..start].iter().rev() {
            if gap(q) > best {
                break;
            }
            best = best.min(key(q));
        }
        best
    }
}

fn cmp_int(a: &[i64], b: &[i64], e: i32, metric: Metric) -> Ordering {
    let diffs = a.iter().zip(b).map(|(x, y)| x.abs_diff(*y));
    match metric {
        Metric::Sup => {
            let m = diffs.max().unwrap_or(0);
            if e < 0 {
                return if m == 0 { Ordering::Less } else { Ordering::Greater };
            }
            if e >= 64 {
                return Ordering::Less;
            }
            m.cmp(&(1u64 << e))
        }
        Metric::Euclidean => {
            let s: u128 = diffs.map(|v| (v as u128) * (v as u128)).sum();
            if e < 0 {
                return if s == 0 { Ordering::Less } else { Ordering::Greater };
            }
            if 2 * e >= 127 {
                return Ordering::Less;
            }
            s.cmp(&(1u128 << (2 * e)))
        }
    }
}

fn neighbours(key: &[i64]) -> impl Iterator<Item = Key> + '_ {
    let d = key.len();
    (0..3usize.pow(d as u32)).map(move |mut t| {
        key.iter()
            .map(|&k| {
                let off = (t % 3) as i64 - 1;
                t /= 3;
                k + off
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ball_matches_scan() {
        let v = MetricSpaceView::uniform_grid(2, 4, Metric::Euclidean).unwrap();
        for &(c, n) in &[(0usize, 2i32), (37, 3), (100, 1), (255, 4), (17, 5)] {
            let scan: Vec<usize> = (0..v.len()).filter(|&j| v.within(c, j, n)).collect();
            assert_eq!(v.ball(c, n), scan);
        }
    }

    #[test]
    fn greedy_packing_is_maximal_and_separated() {
        let v = MetricSpaceView::uniform_grid(2, 5, Metric::Euclidean).unwrap();
        let all: Vec<usize> = (0..v.len()).collect();
        for n in 0..7 {
            let p = v.greedy_packing(all.iter().copied(), n, None);
            assert!(v.is_packing(&p, n));
            assert!(all.iter().all(|&i| p.iter().any(|&k| v.within(i, k, n))));
        }
    }

    #[test]
    fn row_packing_matches_plain_greedy() {
        for metric in [Metric::Euclidean, Metric::Sup] {
            let grid = MetricSpaceView::uniform_grid(2, 5, metric).unwrap();
            let zoom = MetricSpaceView::zoom_grid(&[1, 3], 2, 40, 3, metric).unwrap();
            for v in [&grid, &zoom] {
                for center in [0usize, 7, 100, v.origin(), v.len() - 1] {
                    for g in 0..8 {
                        for j in g..g + 8 {
                            let plain = v.greedy_packing(v.ball_iter(center, g), j, None);
                            assert_eq!(v.ball_packing(center, g, j, None), plain, "{metric:?} c={center} g={g} j={j}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hausdorff_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for metric in [Metric::Euclidean, Metric::Sup] {
            let v = MetricSpaceView::uniform_grid(2, 6, metric).unwrap();
            for _ in 0..200 {
                let a: Vec<usize> = (0..rng.gen_range(1..12)).map(|_| rng.gen_range(0..v.len())).collect();
                let b: Vec<usize> = (0..rng.gen_range(1..12)).map(|_| rng.gen_range(0..v.len())).collect();
                let brute = |x: &[usize], y: &[usize]| {
                    x.iter()
                        .map(|&p| y.iter().map(|&q| v.dist(p, q)).fold(f64::INFINITY, f64::min))
                        .fold(0.0f64, f64::max)
                };
                let h = brute(&a, &b).max(brute(&b, &a));
                assert!((v.hausdorff(&a, &b) - h).abs() < 1e-12);
                for n in 0..8 {
                    let within = |x: &[usize], y: &[usize]| x.iter().all(|&p| y.iter().any(|&q| v.within(p, q, n)));
                    assert_eq!(v.hausdorff_within(&a, &b, n), within(&a, &b) && within(&b, &a));
                }
            }
        }
    }

    #[test]
    fn exact_boundary_comparisons() {
        let v = MetricSpaceView::uniform_grid(1, 3, Metric::Euclidean).unwrap();
        // points 0 and 2 are exactly 1/4 apart
        assert_eq!(v.cmp_radius(0, 2, 2), Ordering::Equal);
        assert!(v.within(0, 2, 2));
        assert!(!v.within(0, 3, 2));
    }

    #[test]
    fn zoom_grid_has_requested_size() {
        let v = MetricSpaceView::zoom_grid(&[1, 1], 1, 64, 8, Metric::Euclidean).unwrap();
        assert_eq!(v.len(), 64 * 64);
        assert_eq!(v.point(v.origin()).unwrap(), vec![0.5, 0.5]);
        assert!(v.check_axioms(500, 1));
    }

    #[test]
    fn matrix_view() {
        let m = DistanceMatrix::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let v = MetricSpaceView::from_matrix(m, 0, 0.0).unwrap();
        assert_eq!(v.ball(0, 0), vec![0, 1]);
        assert_eq!(v.greedy_packing([0, 1, 2], 0, None), vec![0, 2]);
    }
}

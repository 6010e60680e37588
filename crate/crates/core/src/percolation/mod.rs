//! Fractal percolation with generation-dependent retention `2^{-α_n}`.
//!
//! Every `(copy, cube)` pair gets one uniform variate from a keyed hash, so
//! samples under different schedules share randomness and are coupled: a
//! cube survives iff `−log2 u ≥ α_n`, which is monotone in `α_n`.

mod gamma;
mod hawkes;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::dyadic::{CubeIdx, CubeSet, DyadicSet};
use crate::ratio::{serde_rational_vec, Rational};
use crate::{Error, Result};

pub use gamma::{gamma_star, ComponentSample, GammaStarConfig, GammaStarSample};
pub use hawkes::{hawkes_experiment, wilson_interval, HawkesReport, LevelStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetentionSchedule {
    /// `α_1, α_2, …`; generations past the end use `limit`, or the last entry.
    #[serde(with = "serde_rational_vec")]
    alphas: Vec<Rational>,
    #[serde(default, with = "crate::ratio::serde_rational_opt")]
    limit: Option<Rational>,
    d: usize,
    #[serde(skip)]
    cache: Vec<f64>,
}

impl RetentionSchedule {
    pub fn new(alphas: Vec<Rational>, limit: Option<Rational>, d: usize) -> Result<Self> {
        let top = Rational::from_integer(d as i64);
        let zero = Rational::from_integer(0);
        if let Some(bad) = alphas.iter().chain(limit.iter()).find(|a| **a < zero || **a > top) {
            return Err(Error::invalid(format!("retention exponent {bad} outside [0, {d}]")));
        }
        if alphas.is_empty() && limit.is_none() {
            return Err(Error::invalid("schedule needs at least one exponent"));
        }
        let cache = alphas.iter().map(|a| a.to_f64().expect("finite")).collect();
        Ok(RetentionSchedule { alphas, limit, d, cache })
    }

    pub fn constant(alpha: Rational, d: usize) -> Result<Self> {
        Self::new(Vec::new(), Some(alpha), d)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `α_n` for generation `n ≥ 1`.
    pub fn alpha(&self, n: u32) -> Rational {
        let i = n.max(1) as usize - 1;
        match (self.alphas.get(i), self.limit) {
            (Some(a), _) => *a,
            (None, Some(l)) => l,
            (None, None) => *self.alphas.last().expect("nonempty"),
        }
    }

    fn alpha_f64(&self, n: u32) -> f64 {
        let i = n.max(1) as usize - 1;
        match self.cache.get(i) {
            Some(a) => *a,
            None => self.alpha(n).to_f64().expect("finite"),
        }
    }

    /// Whether `self.α_n ≥ other.α_n` for `n = 1..=generations`.
    pub fn dominates(&self, other: &Self, generations: u32) -> bool {
        (1..=generations).all(|n| self.alpha(n) >= other.alpha(n))
    }
}

/// Order-independent uniform variates keyed by `(seed, copy, cube)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PercField {
    pub seed: u64,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PercField {
    pub fn new(seed: u64) -> Self {
        PercField { seed }
    }

    /// A uniform variate in `(0, 1]`.
    pub fn variate(&self, copy_key: u64, cube: &CubeIdx) -> f64 {
        let mut h = mix(self.seed ^ 0x5EED_0F_F1E1D);
        h = mix(h ^ copy_key);
        h = mix(h ^ cube.level as u64);
        for &c in &cube.coords {
            h = mix(h ^ c);
        }
        ((h >> 11) + 1) as f64 * (-53f64).exp2()
    }

    /// The survival test `u ≤ 2^{-α}`, evaluated as `−log2 u ≥ α`.
    pub fn keeps(&self, copy_key: u64, cube: &CubeIdx, alpha: f64) -> bool {
        -self.variate(copy_key, cube).log2() >= alpha
    }
}

/// A completion point: `cube` is a dead end meeting `K`, `point` the
/// lexicographically least cell of `K` inside it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub cube: CubeIdx,
    pub point: CubeIdx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercSample {
    pub root: CubeIdx,
    pub generations: u32,
    /// Cubes alive after the last generation, at level `root.level + generations`.
    pub survivors: DyadicSet,
    /// `|Δ_n|` for `n = 0..=generations` (`Δ_0` is the root).
    pub level_counts: Vec<u64>,
    pub completions: Vec<Completion>,
}

impl PercSample {
    pub fn survived(&self) -> bool {
        !self.survivors.is_empty()
    }
}

/// Frontiers `Δ_0, …, Δ_generations` below `root`, exploring only cubes that
/// are live in `k` when it is given.
pub(crate) fn grow(
    k: Option<&dyn CubeSet>,
    schedule: &RetentionSchedule,
    field: &PercField,
    copy_key: u64,
    root: &CubeIdx,
    generations: u32,
) -> Vec<Vec<CubeIdx>> {
    let mut levels = Vec::with_capacity(generations as usize + 1);
    let root_ok = k.map_or(true, |k| k.is_live(root));
    levels.push(if root_ok { vec![root.clone()] } else { Vec::new() });
    for n in 1..=generations {
        let alpha = schedule.alpha_f64(n);
        let prev = levels.last().expect("root level");
        let mut next = Vec::new();
        for cube in prev {
            for child in cube.children() {
                if k.map_or(true, |k| k.is_live(&child)) && field.keeps(copy_key, &child, alpha) {
                    next.push(child);
                }
            }
        }
        levels.push(next);
    }
    levels
}

fn check_root(d: usize, root: &CubeIdx) -> Result<()> {
    if root.dim() != d {
        return Err(Error::DimensionMismatch { left: d, right: root.dim() });
    }
    if root.coords.iter().any(|&c| root.level < 64 && c >> root.level != 0) {
        return Err(Error::invalid(format!("{root:?} is not a cube of [0,1]^{d}")));
    }
    Ok(())
}

fn assemble(
    k: Option<&dyn CubeSet>,
    root: &CubeIdx,
    generations: u32,
    levels: Vec<Vec<CubeIdx>>,
) -> Result<PercSample> {
    let d = root.dim();
    let depth = root.level + generations;
    let mut completions = Vec::new();
    if let Some(k) = k {
        for n in 0..generations as usize {
            let below = &levels[n + 1];
            for cube in &levels[n] {
                // children are generated in parent order, so a scan suffices
                let alive = below.iter().any(|c| cube.contains(c));
                if !alive {
                    if let Some(point) = k.least_leaf_below(cube) {
                        completions.push(Completion { cube: cube.clone(), point });
                    }
                }
            }
        }
    }
    let level_counts = levels.iter().map(|l| l.len() as u64).collect();
    let last = levels.into_iter().last().unwrap_or_default();
    let survivors = DyadicSet::from_leaves(d, depth, last.iter().map(|c| c.coords.clone()))?;
    Ok(PercSample {
        root: root.clone(),
        generations,
        survivors,
        level_counts,
        completions,
    })
}

/// One percolation sample in `root`, `generations` levels deep.
pub fn sample(
    schedule: &RetentionSchedule,
    field: &PercField,
    copy_key: u64,
    generations: u32,
    root: &CubeIdx,
) -> Result<PercSample> {
    check_root(schedule.dim(), root)?;
    let levels = grow(None, schedule, field, copy_key, root, generations);
    assemble(None, root, generations, levels)
}

/// The sample intersected with `k` (cell by cell), with completion points for
/// dead-end cubes that meet `k`.
pub fn sample_on(
    k: &dyn CubeSet,
    schedule: &RetentionSchedule,
    field: &PercField,
    copy_key: u64,
    generations: u32,
    root: &CubeIdx,
) -> Result<PercSample> {
    check_root(k.dim(), root)?;
    if k.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch { left: k.dim(), right: schedule.dim() });
    }
    if root.level + generations > k.depth() {
        return Err(Error::LevelExceedsDepth { level: root.level + generations, depth: k.depth() });
    }
    let levels = grow(Some(k), schedule, field, copy_key, root, generations);
    assemble(Some(k), root, generations, levels)
}

/// Two samples in the unit cube driven by the same variates.
pub fn coupled_pair(
    a: &RetentionSchedule,
    b: &RetentionSchedule,
    field: &PercField,
    copy_key: u64,
    generations: u32,
) -> Result<(PercSample, PercSample)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let root = CubeIdx::root(a.dim());
    Ok((
        sample(a, field, copy_key, generations, &root)?,
        sample(b, field, copy_key, generations, &root)?,
    ))
}

/// Extinction probability of a Galton–Watson process in which each of
/// `children` offspring is kept independently with probability `p`.
pub fn gw_extinction(p: f64, children: u32) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    if p <= 0.0 || p * children as f64 <= 1.0 {
        return 1.0;
    }
    if children == 2 {
        // sqrt(q) solves p t² − t + (1 − p) = 0; the small root is (1 − p)/p
        let t = (1.0 - p) / p;
        return t * t;
    }
    let mut q = 0.0f64;
    for _ in 0..1_000_000 {
        let next = (1.0 - p + p * q).powi(children as i32);
        if (next - q).abs() < 1e-16 {
            return next;
        }
        q = next;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn zero_exponent_keeps_everything() {
        let s = RetentionSchedule::constant(r(0, 1), 2).unwrap();
        let out = sample(&s, &PercField::new(7), 0, 4, &CubeIdx::root(2)).unwrap();
        assert_eq!(out.survivors, DyadicSet::full(2, 4).unwrap());
        assert_eq!(out.level_counts, vec![1, 4, 16, 64, 256]);
    }

    #[test]
    fn variates_are_deterministic_and_in_range() {
        let f = PercField::new(42);
        let c = CubeIdx::new(5, &[3, 17]);
        assert_eq!(f.variate(1, &c), f.variate(1, &c));
        assert_ne!(f.variate(1, &c), f.variate(2, &c));
        for i in 0..1000u64 {
            let u = f.variate(i, &c);
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(RetentionSchedule::constant(r(2, 1), 1).is_err());
        assert!(RetentionSchedule::constant(r(-1, 2), 1).is_err());
        let s = RetentionSchedule::new(vec![r(1, 2), r(1, 3)], None, 1).unwrap();
        assert_eq!(s.alpha(1), r(1, 2));
        assert_eq!(s.alpha(9), r(1, 3));
    }

    #[test]
    fn extinction_values() {
        assert_eq!(gw_extinction(1.0, 2), 0.0);
        assert_eq!(gw_extinction(0.5, 2), 1.0);
        assert_eq!(gw_extinction(0.25, 4), 1.0);
        let q = gw_extinction(0.5f64.sqrt(), 2);
        assert!((q - 0.171_572_875).abs() < 1e-8);
        let p = 0.4;
        let q4 = gw_extinction(p, 4);
        assert!((q4 - (1.0 - p + p * q4).powi(4)).abs() < 1e-12);
    }

    #[test]
    fn completions_mark_dead_ends() {
        let k = DyadicSet::full(1, 6).unwrap();
        let s = RetentionSchedule::constant(r(1, 1), 1).unwrap();
        let out = sample_on(&k, &s, &PercField::new(3), 0, 6, &CubeIdx::root(1)).unwrap();
        for c in &out.completions {
            assert!(c.cube.contains(&c.point));
            assert_eq!(c.point.level, 6);
        }
    }
}

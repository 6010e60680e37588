//! The coupled family `x ↦ Γ*(α(x))` with `α(x)_n = γ − φ(x↾n)`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grow, sample_on, PercField, PercSample, RetentionSchedule};
use crate::dyadic::{Coords, CubeIdx, CubeSet, DyadicSet};
use crate::ratio::{serde_rational, serde_rational_vec, Rational};
use crate::realize::{Adjust, TargetSpec, VarphiMap};
use crate::seq::Word;
use crate::{Error, Result};

const CALIBRATION_TAG: u64 = 1 << 63;

fn copy_key(k: u32, i: u32) -> u64 {
    ((k as u64) << 32) | i as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaStarConfig {
    #[serde(with = "serde_rational")]
    pub gamma: Rational,
    /// `β_1 < β_2 < … < γ`.
    #[serde(with = "serde_rational_vec")]
    pub betas: Vec<Rational>,
    /// A cell of `K` at the deepest level; `Q_k` is its level-`k` ancestor.
    pub y0: CubeIdx,
    /// Number of independent copies `i_k` placed in `Q_k`.
    pub copies: Vec<u32>,
    /// Monte Carlo estimate of `P(K ∩ Q_k ∩ Γ(β_k) ≠ ∅)` at finite depth.
    pub c_hat: Vec<f64>,
}

impl GammaStarConfig {
    pub fn k_max(&self) -> u32 {
        self.betas.len() as u32
    }

    /// `Q_k` for `k = 1..=k_max`.
    pub fn cube(&self, k: u32) -> CubeIdx {
        self.y0.ancestor(k)
    }

    pub fn validate(&self) -> Result<()> {
        let k_max = self.betas.len();
        if k_max == 0 || self.copies.len() != k_max || self.c_hat.len() != k_max {
            return Err(Error::invalid("betas, copies and c_hat must have one entry per k"));
        }
        if k_max as u32 > self.y0.level {
            return Err(Error::invalid(format!(
                "k_max {k_max} exceeds the level {} of y0",
                self.y0.level
            )));
        }
        let zero = Rational::from_integer(0);
        let increasing = self.betas.windows(2).all(|w| w[0] < w[1]);
        if !increasing || self.betas[0] <= zero || *self.betas.last().unwrap() >= self.gamma {
            return Err(Error::InvariantViolation("betas must increase strictly inside (0, gamma)".into()));
        }
        for (k, (&c, &i)) in self.c_hat.iter().zip(&self.copies).enumerate() {
            if !(0.0..=1.0).contains(&c) || i == 0 || (1.0 - c).powi(i as i32) >= 0.5 {
                return Err(Error::InvariantViolation(format!(
                    "k={}: (1 - c_hat)^i = (1 - {c})^{i} is not below 1/2",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Picks `y0` by greedy descent into the child holding the most cells of
    /// `k`, estimates each `ĉ_k` from `trials` samples in `Q_k`, and takes the
    /// least `i_k` with `(1 − ĉ_k/2)^{i_k} < 1/2`, capped at `i_cap`.
    pub fn calibrate(
        k: &DyadicSet,
        gamma: Rational,
        k_max: u32,
        trials: u64,
        field: &PercField,
        i_cap: u32,
    ) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::EmptySet("GammaStarConfig::calibrate"));
        }
        if k_max == 0 || k_max > k.depth() {
            return Err(Error::invalid(format!("k_max must lie in 1..={}", k.depth())));
        }
        if trials == 0 || i_cap == 0 {
            return Err(Error::invalid("trials and i_cap must be positive"));
        }
        let y0 = densest_leaf(k);
        let betas: Vec<Rational> = (1..=k_max as i64).map(|j| gamma * Rational::new(j, j + 1)).collect();
        let mut c_hat = Vec::new();
        let mut copies = Vec::new();
        for (j, beta) in betas.iter().enumerate() {
            let level = j as u32 + 1;
            let schedule = RetentionSchedule::constant(*beta, k.dim())?;
            let root = y0.ancestor(level);
            let generations = k.depth() - level;
            let survived = (0..trials)
                .into_par_iter()
                .filter(|&t| {
                    let key = CALIBRATION_TAG | copy_key(level, 0) | t;
                    let levels = grow(Some(k), &schedule, field, key, &root, generations);
                    !levels[generations as usize].is_empty()
                })
                .count();
            let c = survived as f64 / trials as f64;
            if c == 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "k={level}: no calibration trial survived, so no copy count works"
                )));
            }
            let half = c / 2.0;
            let mut i = 1u32;
            while (1.0 - half).powi(i as i32) >= 0.5 && i < i_cap {
                i += 1;
            }
            c_hat.push(c);
            copies.push(i);
        }
        let config = GammaStarConfig { gamma, betas, y0, copies, c_hat };
        config.validate()?;
        Ok(config)
    }
}

/// Follows, level by level, the lexicographically first child holding the
/// most leaves.
fn densest_leaf(k: &DyadicSet) -> CubeIdx {
    let d = k.dim();
    let mut leaves: Vec<&[u64]> = k.leaves().collect();
    let mut cur = CubeIdx::root(d);
    for level in 1..=k.depth() {
        let shift = k.depth() - level;
        let mut tally: HashMap<Coords, usize> = HashMap::new();
        for leaf in &leaves {
            *tally.entry(leaf.iter().map(|c| c >> shift).collect()).or_default() += 1;
        }
        let best = tally
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .map(|(c, _)| c)
            .expect("nonempty");
        leaves.retain(|leaf| leaf.iter().zip(&best).all(|(c, b)| c >> shift == *b));
        cur = CubeIdx { level, coords: best };
    }
    cur
}

/// One copy `Γ*_{k,i}`: the sample in `Q_k` restricted to `K`, with its
/// completion points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSample {
    pub k: u32,
    pub i: u32,
    pub sample: PercSample,
}

impl ComponentSample {
    /// Survivors together with the completion cells, at the survivor depth.
    pub fn cells(&self) -> Result<DyadicSet> {
        let s = &self.sample;
        let depth = s.survivors.depth();
        let points = s.completions.iter().map(|c| c.point.ancestor(depth).coords);
        let pts = DyadicSet::from_leaves(s.survivors.dim(), depth, points)?;
        s.survivors.union(&pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaStarSample {
    pub schedule: RetentionSchedule,
    pub components: Vec<ComponentSample>,
    /// Union of all component cells and the cell of `y0`; already inside `K`.
    pub set: DyadicSet,
}

/// Builds `Γ*(α(x)) ∩ K` down to level `depth`.
pub fn gamma_star(
    config: &GammaStarConfig,
    k: &dyn CubeSet,
    x: &Word,
    spec: &TargetSpec,
    field: &PercField,
    depth: u32,
) -> Result<GammaStarSample> {
    config.validate()?;
    let d = k.dim();
    let gamma = config.gamma;
    if gamma > Rational::from_integer(d as i64) {
        return Err(Error::invalid(format!("gamma {gamma} exceeds the dimension {d}")));
    }
    if depth > k.depth() || depth < config.k_max() || config.y0.level < depth {
        return Err(Error::LevelExceedsDepth { level: depth, depth: k.depth().min(config.y0.level) });
    }
    let (a, b) = spec.bounds();
    if a < Rational::from_integer(0) || b > gamma {
        return Err(Error::invalid(format!("target bounds [{a}, {b}] not inside [0, {gamma}]")));
    }
    let varphi = VarphiMap::with_adjust(spec, Adjust::PositiveFloor { gamma });
    let alphas = (1..=depth as usize)
        .map(|n| varphi.value(&x.prefix(n.min(x.len()))).map(|v| gamma - v))
        .collect::<Result<Vec<_>>>()?;
    let schedule = RetentionSchedule::new(alphas, None, d)?;

    let jobs: Vec<(u32, u32)> = (1..=config.k_max())
        .flat_map(|kk| (1..=config.copies[kk as usize - 1]).map(move |i| (kk, i)))
        .collect();
    let components = jobs
        .par_iter()
        .map(|&(kk, i)| {
            let root = config.cube(kk);
            let sample = sample_on(k, &schedule, field, copy_key(kk, i), depth - kk, &root)?;
            Ok(ComponentSample { k: kk, i, sample })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut set = DyadicSet::from_leaves(d, depth, [config.y0.ancestor(depth).coords])?;
    for c in &components {
        set = set.union(&c.cells()?)?;
    }
    Ok(GammaStarSample { schedule, components, set })
}

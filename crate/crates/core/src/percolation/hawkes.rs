use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grow, PercField, RetentionSchedule};
use crate::dims::log2_big;
use crate::dyadic::{CubeIdx, CubeSet};
use crate::ratio::{serde_rational, Rational};
use crate::{Error, Result};

/// Survival statistics at one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub depth: u32,
    pub survived: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean number of surviving cells of `K` at this depth, over all trials.
    pub mean_count: f64,
    pub count_se: f64,
    /// `N_K(depth) · 2^{-β·depth}`.
    pub expected_count: f64,
    /// Mean of `log2 N / depth` over trials alive at this depth.
    pub cond_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HawkesReport {
    #[serde(with = "serde_rational")]
    pub beta: Rational,
    pub trials: u64,
    pub levels: Vec<LevelStats>,
    /// `log2 N_K(D) / D` at the deepest depth `D`.
    pub k_dim_estimate: f64,
    /// Mean of `log2 N / D` over trials alive at the deepest depth.
    pub conditional_slope: Option<f64>,
    pub checks: Vec<(String, bool)>,
}

impl HawkesReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn at(&self, depth: u32) -> Option<&LevelStats> {
        self.levels.iter().find(|l| l.depth == depth)
    }
}

/// The 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054f64;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

const SLOPE_TOLERANCE: f64 = 0.15;
const SURVIVAL_FLOOR: f64 = 0.02;
const SMALL_SURVIVAL: f64 = 0.1;

/// Monte Carlo survival of `K ∩ Γ(β)` at each of `depths`.
pub fn hawkes_experiment(
    k: &dyn CubeSet,
    beta: Rational,
    depths: &[u32],
    trials: u64,
    field: &PercField,
) -> Result<HawkesReport> {
    let d = k.dim();
    if beta <= Rational::from_integer(0) || beta >= Rational::from_integer(d as i64) {
        return Err(Error::invalid(format!("beta {beta} outside (0, {d})")));
    }
    if trials == 0 || depths.is_empty() {
        return Err(Error::invalid("need at least one trial and one depth"));
    }
    let mut depths = depths.to_vec();
    depths.sort_unstable();
    depths.dedup();
    let deepest = *depths.last().expect("nonempty");
    if deepest > k.depth() {
        return Err(Error::LevelExceedsDepth { level: deepest, depth: k.depth() });
    }
    let root = CubeIdx::root(d);
    if !k.is_live(&root) {
        return Err(Error::EmptySet("hawkes_experiment"));
    }
    let schedule = RetentionSchedule::constant(beta, d)?;
    let counts: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let levels = grow(Some(k), &schedule, field, t, &root, deepest);
            depths.iter().map(|&n| levels[n as usize].len() as u64).collect()
        })
        .collect();

    let beta_f = beta.to_f64().expect("finite");
    let mut levels = Vec::with_capacity(depths.len());
    for (j, &n) in depths.iter().enumerate() {
        let survived = counts.iter().filter(|c| c[j] > 0).count() as u64;
        let (ci_low, ci_high) = wilson_interval(survived, trials);
        let mean = counts.iter().map(|c| c[j] as f64).sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c[j] as f64 - mean).powi(2)).sum::<f64>()
            / (trials.max(2) - 1) as f64;
        let k_count = log2_big(&k.count_at(n));
        let cond_slope = (survived > 0 && n > 0).then(|| {
            counts
                .iter()
                .filter(|c| c[j] > 0)
                .map(|c| (c[j] as f64).log2() / n as f64)
                .sum::<f64>()
                / survived as f64
        });
        levels.push(LevelStats {
            depth: n,
            survived,
            fraction: survived as f64 / trials as f64,
            ci_low,
            ci_high,
            mean_count: mean,
            count_se: (var / trials as f64).sqrt(),
            expected_count: (k_count - beta_f * n as f64).exp2(),
            cond_slope,
        });
    }

    let last = depths.len() - 1;
    let k_dim_estimate = if deepest == 0 {
        0.0
    } else {
        log2_big(&k.count_at(deepest)) / deepest as f64
    };
    let conditional_slope = levels[last].cond_slope;

    let mut checks = Vec::new();
    let nonincreasing = levels.windows(2).all(|w| w[1].survived <= w[0].survived);
    checks.push(("survival nonincreasing in depth".to_string(), nonincreasing));
    let final_frac = levels[last].fraction;
    if k_dim_estimate < beta_f {
        checks.push((format!("survival below {SMALL_SURVIVAL} when dim K < beta"), final_frac < SMALL_SURVIVAL));
    }
    if k_dim_estimate > beta_f + 0.2 {
        checks.push((format!("survival above {SURVIVAL_FLOOR} when dim K > beta + 0.2"), final_frac > SURVIVAL_FLOOR));
    }
    match conditional_slope {
        Some(s) => checks.push((
            "conditional slope at most dim K - beta + tolerance".to_string(),
            s <= (k_dim_estimate - beta_f).max(0.0) + SLOPE_TOLERANCE,
        )),
        None => checks.push(("conditional slope omitted: no surviving trials".to_string(), true)),
    }
    Ok(HawkesReport {
        beta,
        trials,
        levels,
        k_dim_estimate,
        conditional_slope,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicSet;

    #[test]
    fn wilson_brackets_the_estimate() {
        let (lo, hi) = wilson_interval(80, 100);
        assert!(lo < 0.8 && 0.8 < hi);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }

    #[test]
    fn small_run_is_consistent() {
        let k = DyadicSet::full(1, 10).unwrap();
        let rep = hawkes_experiment(&k, Rational::new(1, 2), &[4, 10], 200, &PercField::new(1)).unwrap();
        assert!(rep.levels[1].survived <= rep.levels[0].survived);
        assert!(rep.passed(), "{:?}", rep.checks);
    }
}

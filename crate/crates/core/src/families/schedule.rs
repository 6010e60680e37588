use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::MetricSpaceView;
use crate::ratio::{serde_rational_vec, Rational};
use crate::{Error, Result};

/// The level function `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelFunction {
    /// `g(n) = max{n + 1, P_n(K)}`.
    PackingCount,
    /// `g(n) = n + 1`.
    Linear,
}

/// Which construction the schedule serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Upper box dimension: packings inside the ball around the origin.
    Box,
    /// Packing dimension: packings inside every ball.
    Packing,
}

impl Variant {
    /// Gap between the last usable packing level and `k_{n+1}`.
    pub fn offset(self) -> u32 {
        match self {
            Variant::Box => 3,
            Variant::Packing => 2,
        }
    }
}

/// Compares `n^q` with `2^{p e}` for `p/q ≥ 0`.
pub fn cmp_pow2(n: u64, alpha: Rational, e: u32) -> Ordering {
    let (p, q) = (*alpha.numer(), *alpha.denom());
    assert!(p >= 0 && q > 0, "exponent must be nonnegative");
    if n == 0 {
        return Ordering::Less;
    }
    if n.is_power_of_two() {
        let t = n.trailing_zeros() as i128;
        return (t * q as i128).cmp(&(p as i128 * e as i128));
    }
    let lhs = q as f64 * (n as f64).log2();
    let rhs = p as f64 * e as f64;
    if (lhs - rhs).abs() > 1e-9 * (1.0 + rhs.abs()) {
        return lhs.partial_cmp(&rhs).expect("finite");
    }
    let big = BigUint::from(n).pow(q as u32);
    let two = BigUint::one() << (p as u64 * e as u64);
    big.cmp(&two)
}

/// `⌊2^{α e}⌋`.
pub fn pow2_floor(alpha: Rational, e: u32) -> Result<u64> {
    if alpha.is_negative() {
        return Err(Error::invalid("exponent must be nonnegative"));
    }
    let approx = alpha.to_f64().expect("finite") * e as f64;
    if approx > 62.0 {
        return Err(Error::ResourceLimit(format!("2^{approx:.1} exceeds the supported packing size")));
    }
    let mut n = approx.exp2().floor().max(1.0) as u64;
    while n > 1 && cmp_pow2(n, alpha, e) == Ordering::Greater {
        n -= 1;
    }
    while cmp_pow2(n + 1, alpha, e) != Ordering::Greater {
        n += 1;
    }
    Ok(n)
}

/// `count ≥ 2^{α e}`.
pub fn meets_pow2(count: usize, alpha: Rational, e: u32) -> bool {
    cmp_pow2(count as u64, alpha, e) != Ordering::Less
}

/// Smallest integer `≥ 2^{α e}`, saturating.
fn pow2_ceil(alpha: Rational, e: u32) -> usize {
    match pow2_floor(alpha, e) {
        Ok(f) if cmp_pow2(f, alpha, e) == Ordering::Equal => f as usize,
        Ok(f) => f as usize + 1,
        Err(_) => usize::MAX,
    }
}

/// The scales `k_0 = 0 < k_1 < …` with verified packing witnesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSeq {
    pub variant: Variant,
    pub level_fn: LevelFunction,
    #[serde(with = "serde_rational_vec")]
    pub alphas: Vec<Rational>,
    pub ks: Vec<u32>,
    /// `g(k_n)` for each built level.
    pub gs: Vec<u32>,
    /// The witness `j(n)`.
    pub witnesses: Vec<u32>,
}

impl KSeq {
    /// Number of extension steps the schedule supports.
    pub fn levels(&self) -> usize {
        self.witnesses.len()
    }

    pub fn k(&self, n: usize) -> u32 {
        self.ks[n]
    }

    pub fn g(&self, n: usize) -> u32 {
        self.gs[n]
    }

    pub fn alpha(&self, n: usize) -> Rational {
        self.alphas[n]
    }

    /// The admissible packing levels `g(k_n) ..= k_{n+1} − offset` at step `n`.
    pub fn ell_range(&self, n: usize) -> (u32, u32) {
        (self.gs[n], self.ks[n + 1] - self.variant.offset())
    }
}

/// `g(n)` on the net.
pub fn level_value(view: &MetricSpaceView, level_fn: LevelFunction, n: u32) -> u32 {
    match level_fn {
        LevelFunction::Linear => n + 1,
        LevelFunction::PackingCount => {
            let p = view.greedy_packing(0..view.len(), n as i32, None).len();
            (n + 1).max(u32::try_from(p).unwrap_or(u32::MAX))
        }
    }
}

/// Builds `k_0, …, k_N` for `N = alphas.len()`, taking each `k_{n+1}` as
/// small as the least witness `j(n)` allows. `k_cap` bounds every `k_n`.
pub fn level_schedule(
    view: &MetricSpaceView,
    alphas: &[Rational],
    variant: Variant,
    level_fn: LevelFunction,
    k_cap: u32,
) -> Result<KSeq> {
    if alphas.iter().any(|a| a.is_negative()) {
        return Err(Error::invalid("alphas must be nonnegative"));
    }
    if alphas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("alphas must be nondecreasing"));
    }
    let off = variant.offset();
    let anchors: Vec<usize> = match variant {
        Variant::Box => vec![view.origin()],
        Variant::Packing => (0..view.len()).collect(),
    };
    let mut ks = vec![0u32];
    let mut gs = Vec::new();
    let mut witnesses = Vec::new();
    for (n, &alpha) in alphas.iter().enumerate() {
        let k = ks[n];
        let g = level_value(view, level_fn, k);
        gs.push(g);
        let top = k_cap.checked_sub(off).filter(|&t| t >= g).ok_or_else(|| Error::ResolutionExhausted {
            level: n,
            detail: format!("g(k_{n}) = {g} leaves no room below the cap k ≤ {k_cap}"),
        })?;
        let j = (g..=top)
            .find(|&j| {
                let need = pow2_ceil(alpha, j);
                anchors
                    .iter()
                    .all(|&y| view.packing_number(y, g as i32, j as i32, Some(need)) >= need)
            })
            .ok_or_else(|| Error::ResolutionExhausted {
                level: n,
                detail: format!("no j in [{g}, {top}] with P_j(B(y, 2^-{g})) ≥ 2^({alpha}·j)"),
            })?;
        witnesses.push(j);
        ks.push(j + off);
    }
    Ok(KSeq {
        variant,
        level_fn,
        alphas: alphas.to_vec(),
        ks,
        gs,
        witnesses,
    })
}

//! Block words `(α↾n)⌢(β↾k)` and the concatenated sequence `ψ`.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::spec::TargetSpec;
use super::varphi::VarphiMap;
use crate::ratio::{abs_le_c_over_sqrt, abs_le_frac_plus_c_over_sqrt, big, Rational};
use crate::seq::{beatty_balanced, SeqProgram, Word};
use crate::{Error, Result};

/// Smallest admissible `k`: the least positive integer above `√n − 1`.
pub fn k_lower(n: u64) -> u64 {
    n.sqrt().max(1)
}

/// Largest admissible `k`: the greatest integer below `n√n + 1`.
pub fn k_upper(n: u64) -> u64 {
    let cube = (n as u128).pow(3);
    1 + (cube - 1).sqrt() as u64
}

fn in_range(n: u64, k: u64) -> bool {
    let (n, k) = (n as u128, k as u128);
    (k + 1) * (k + 1) > n && (k <= 1 || (k - 1) * (k - 1) < n * n * n)
}

/// `(n a + k b)/(n + k) − t` as an exact fraction.
fn deviation(n: u64, k: u64, a: &Rational, b: &Rational, t: &Rational) -> Ratio<BigInt> {
    let n = BigInt::from(n);
    let k = BigInt::from(k);
    (big(a) * &n + big(b) * &k) / (&n + &k) - big(t)
}

/// i128 fast path for `|(n a + k b)/(n + k) − t| ≤ 2/√n`.
fn within(n: u64, k: u64, a: &Rational, b: &Rational, t: &Rational) -> bool {
    let fast = || -> Option<bool> {
        let (pa, qa) = (*a.numer() as i128, *a.denom() as i128);
        let (pb, qb) = (*b.numer() as i128, *b.denom() as i128);
        let (pt, qt) = (*t.numer() as i128, *t.denom() as i128);
        let l = qa.lcm(&qb);
        let q = (l / l.gcd(&qt)).checked_mul(qt)?;
        let (n_, k_) = (n as i128, k as i128);
        let num = n_
            .checked_mul(pa.checked_mul(q / qa)?)?
            .checked_add(k_.checked_mul(pb.checked_mul(q / qb)?)?)?
            .checked_sub((n_ + k_).checked_mul(pt.checked_mul(q / qt)?)?)?;
        let den = (n_ + k_).checked_mul(q)?;
        Some(abs_le_c_over_sqrt(num, den, 2, n))
    };
    fast().unwrap_or_else(|| {
        let dev = deviation(n, k, a, b, t);
        crate::ratio::rational_abs_le_c_over_sqrt(&dev, 2, n)
    })
}

/// Whether `k` is admissible for length `n` and target `t`.
pub fn k_is_valid(n: u64, k: u64, a: &Rational, b: &Rational, t: &Rational) -> bool {
    n >= 1 && in_range(n, k) && within(n, k, a, b, t)
}

fn check_pre(n: u64, a: &Rational, b: &Rational, t: &Rational) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("block length n must be positive"));
    }
    if a > b || t < a || t > b {
        return Err(Error::invalid(format!("need a ≤ target ≤ b, got a={a}, b={b}, target={t}")));
    }
    Ok(())
}

/// The minimal admissible `k`: `√n − 1 < k < n√n + 1` and
/// `|(n a + k b)/(n + k) − target| ≤ 2/√n`. For `a = b` it is `⌈√n⌉`.
pub fn choose_k(n: u64, a: Rational, b: Rational, target: Rational) -> Result<u64> {
    check_pre(n, &a, &b, &target)?;
    if a == b {
        return Ok(ceil_sqrt(n));
    }
    let (lo, hi) = (k_lower(n), k_upper(n));
    // r(k) increases with k, so valid k form an interval; start near where
    // r(k) first reaches target − 2/√n
    let eps = 2.0 / (n as f64).sqrt();
    let (af, bf, tf) = (a.to_f64().unwrap_or(0.0), b.to_f64().unwrap_or(1.0), target.to_f64().unwrap_or(0.0));
    let est = n as f64 * (tf - eps - af) / (bf - tf + eps);
    let mut k = if est.is_finite() && est > lo as f64 {
        (est.floor() as u64).saturating_sub(2).clamp(lo, hi)
    } else {
        lo
    };
    while k > lo && within(n, k - 1, &a, &b, &target) {
        k -= 1;
    }
    while !within(n, k, &a, &b, &target) {
        k += 1;
        assert!(k <= hi, "no admissible k for n={n}, a={a}, b={b}, target={target}");
    }
    Ok(k)
}

fn ceil_sqrt(n: u64) -> u64 {
    let s = n.sqrt();
    if s * s == n {
        s
    } else {
        s + 1
    }
}

/// The admissible `k` making `(n a + k b)/(n + k)` closest to the target;
/// ties go to the smaller `k`.
pub fn choose_k_nearest(n: u64, a: Rational, b: Rational, target: Rational) -> Result<u64> {
    check_pre(n, &a, &b, &target)?;
    if a == b {
        return Ok(ceil_sqrt(n));
    }
    let (lo, hi) = (k_lower(n), k_upper(n));
    Ok(nearest_i128(n, &a, &b, &target, lo, hi).unwrap_or_else(|| nearest_big(n, &a, &b, &target, lo, hi)))
}

fn nearest_big(n: u64, a: &Rational, b: &Rational, target: &Rational, lo: u64, hi: u64) -> u64 {
    let candidates: Vec<u64> = if target == b {
        vec![hi]
    } else {
        // r(z) = target at z* = n (t − a)/(b − t)
        let z = big(&(target - a)) * BigInt::from(n) / big(&(b - target));
        let fl = z.floor().to_integer().to_u64().unwrap_or(u64::MAX);
        vec![fl.clamp(lo, hi), fl.saturating_add(1).clamp(lo, hi)]
    };
    let k = candidates
        .into_iter()
        .min_by(|&x, &y| {
            let dx = deviation(n, x, a, b, target).abs();
            let dy = deviation(n, y, a, b, target).abs();
            dx.cmp(&dy).then(x.cmp(&y))
        })
        .expect("two candidates");
    assert!(within(n, k, a, b, target), "nearest k={k} violates the bound for n={n}");
    k
}

/// [`choose_k_nearest`] over a common denominator in i128; `None` on overflow.
fn nearest_i128(n: u64, a: &Rational, b: &Rational, t: &Rational, lo: u64, hi: u64) -> Option<u64> {
    let l = (*a.denom() as i128).lcm(&(*b.denom() as i128));
    let qt = *t.denom() as i128;
    let q = (l / l.gcd(&qt)).checked_mul(qt)?;
    let scale = |r: &Rational| (*r.numer() as i128).checked_mul(q / *r.denom() as i128);
    let (sa, sb, st) = (scale(a)?, scale(b)?, scale(t)?);
    let n_ = n as i128;
    let candidates = if st == sb {
        [hi, hi]
    } else {
        let fl = Integer::div_floor(&n_.checked_mul(st - sa)?, &(sb - st));
        let fl = u64::try_from(fl).unwrap_or(u64::MAX);
        [fl.clamp(lo, hi), fl.saturating_add(1).clamp(lo, hi)]
    };
    // |dev(k)| = |n a + k b − (n + k) t| / ((n + k) q); compare by cross-multiplying
    let num = |k: u64| -> Option<i128> {
        let k = k as i128;
        n_.checked_mul(sa)?.checked_add(k.checked_mul(sb)?)?.checked_sub((n_ + k).checked_mul(st)?)
    };
    let [x, y] = candidates;
    let (nx, ny) = (num(x)?.abs(), num(y)?.abs());
    let lhs = nx.checked_mul(n_ + y as i128)?;
    let rhs = ny.checked_mul(n_ + x as i128)?;
    let k = if lhs < rhs || (lhs == rhs && x <= y) { x } else { y };
    let (nk, den) = (if k == x { nx } else { ny }, (n_ + k as i128).checked_mul(q)?);
    assert!(abs_le_c_over_sqrt(nk, den, 2, n), "nearest k={k} violates the bound for n={n}");
    Some(k)
}

/// How `k(s)` is picked among the admissible values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    Minimal,
    #[default]
    Nearest,
}

/// The word map `s ↦ (α↾n)⌢(β↾k(s))` for balanced `α`, `β` of densities `a ≤ b`.
#[derive(Clone, Debug)]
pub struct BlockMap {
    a: Rational,
    b: Rational,
    alpha: SeqProgram,
    beta: SeqProgram,
    rule: KRule,
}

impl BlockMap {
    pub fn new(a: Rational, b: Rational, rule: KRule) -> Result<Self> {
        if a > b {
            return Err(Error::invalid(format!("a={a} exceeds b={b}")));
        }
        Ok(BlockMap {
            a,
            b,
            alpha: beatty_balanced(a)?,
            beta: beatty_balanced(b)?,
            rule,
        })
    }

    pub fn densities(&self) -> (Rational, Rational) {
        (self.a, self.b)
    }

    pub fn k_for(&self, n: u64, target: Rational) -> Result<u64> {
        match self.rule {
            KRule::Minimal => choose_k(n, self.a, self.b, target),
            KRule::Nearest => choose_k_nearest(n, self.a, self.b, target),
        }
    }

    /// The block for a cylinder of length `n` with `φ = target`, and its `k`.
    /// Length zero gives the empty block.
    pub fn block(&self, n: usize, target: Rational) -> Result<(Word, u64)> {
        if n == 0 {
            return Ok((Word::new(), 0));
        }
        let k = self.k_for(n as u64, target)?;
        let mut word = self.alpha.prefix(n);
        word.append(&self.beta.prefix(k as usize));
        Ok((word, k))
    }
}

/// `ψ_n(x) = φ(x↾0)⌢φ(x↾1)⌢…`, with per-block bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiPrefix {
    pub word: Word,
    /// Start of every block, followed by the total length.
    pub boundaries: Vec<usize>,
    pub ks: Vec<u64>,
    #[serde(with = "crate::ratio::serde_rational_vec")]
    pub targets: Vec<Rational>,
}

impl PsiPrefix {
    pub fn blocks(&self) -> usize {
        self.ks.len()
    }

    pub fn block(&self, i: usize) -> Word {
        Word::from_bits(self.word.bits()[self.boundaries[i]..self.boundaries[i + 1]].to_vec())
    }
}

/// Holds the `φ` memo and block map for one target set in dimension `d`.
#[derive(Debug)]
pub struct PsiBuilder {
    varphi: VarphiMap,
    blocks: BlockMap,
}

impl PsiBuilder {
    /// Targets are divided by `d` before use.
    pub fn new(spec: &TargetSpec, d: u32, rule: KRule) -> Result<Self> {
        let scaled = spec.scaled(d)?;
        let (a, b) = scaled.bounds();
        if a < Rational::zero() || b > Rational::from_integer(1) {
            return Err(Error::invalid(format!("target set must lie in [0, {d}]")));
        }
        Ok(PsiBuilder {
            varphi: VarphiMap::new(&scaled),
            blocks: BlockMap::new(a, b, rule)?,
        })
    }

    pub fn varphi(&self) -> &VarphiMap {
        &self.varphi
    }

    pub fn block_map(&self) -> &BlockMap {
        &self.blocks
    }

    /// Blocks `0..blocks`, so `blocks ≤ len(x) + 1`.
    pub fn build(&self, x: &Word, blocks: usize) -> Result<PsiPrefix> {
        if blocks > x.len() + 1 {
            return Err(Error::invalid(format!(
                "{blocks} blocks need a branch prefix of length {}, got {}",
                blocks - 1,
                x.len()
            )));
        }
        let mut word = Word::new();
        let mut boundaries = vec![0];
        let mut ks = Vec::with_capacity(blocks);
        let mut targets = Vec::with_capacity(blocks);
        for n in 0..blocks {
            let target = self.varphi.value(&x.prefix(n))?;
            let (block, k) = self.blocks.block(n, target)?;
            word.append(&block);
            boundaries.push(word.len());
            ks.push(k);
            targets.push(target);
        }
        Ok(PsiPrefix { word, boundaries, ks, targets })
    }
}

/// [`PsiBuilder::build`] in dimension one with the default `k` rule.
pub fn build_psi_prefix(x: &Word, spec: &TargetSpec, blocks: usize) -> Result<PsiPrefix> {
    PsiBuilder::new(spec, 1, KRule::default())?.build(x, blocks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub blocks: usize,
    /// Largest `|ϱ(block) − φ|` over blocks `1..`.
    pub max_block_error: f64,
    /// Largest ratio of that error to its bound `2/(n+k) + 2/√n`.
    pub max_bound_ratio: f64,
    /// `length(last block) / length(ψ_n)`.
    pub last_block_fraction: f64,
    #[serde(with = "crate::ratio::serde_rational")]
    pub cumulative_density: Rational,
    pub cumulative_error: f64,
}

/// Checks every block density against `2/(n+k) + 2/√n` exactly and reports
/// the cumulative density error against `expected`.
pub fn realized_density_check(p: &PsiPrefix, expected: Rational) -> Result<DensityReport> {
    if p.blocks() < 2 {
        return Err(Error::invalid("density check needs at least two blocks"));
    }
    let mut max_err = 0.0f64;
    let mut max_ratio = 0.0f64;
    for n in 1..p.blocks() {
        let block = p.block(n);
        let k = p.ks[n];
        let rho = block.density().expect("nonempty block");
        let err = big(&(rho - p.targets[n]));
        let frac = Ratio::new(BigInt::from(2), BigInt::from(n as u64 + k));
        if !abs_le_frac_plus_c_over_sqrt(&err, &frac, 2, n as u64) {
            return Err(Error::InvariantViolation(format!(
                "block {n} (k={k}) density {rho} misses target {} by more than 2/(n+k) + 2/√n",
                p.targets[n]
            )));
        }
        let e = err.abs().to_f64().unwrap_or(f64::INFINITY);
        let bound = 2.0 / (n as f64 + k as f64) + 2.0 / (n as f64).sqrt();
        max_err = max_err.max(e);
        max_ratio = max_ratio.max(e / bound);
    }
    let total = p.word.len();
    let last = p.boundaries[p.blocks()] - p.boundaries[p.blocks() - 1];
    let cumulative = p.word.density().unwrap_or_else(Rational::zero);
    Ok(DensityReport {
        blocks: p.blocks(),
        max_block_error: max_err,
        max_bound_ratio: max_ratio,
        last_block_fraction: last as f64 / total.max(1) as f64,
        cumulative_density: cumulative,
        cumulative_error: (cumulative - expected).abs().to_f64().unwrap_or(f64::INFINITY),
    })
}

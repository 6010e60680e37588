//! The map `φ: 2^{<ω} → A` whose branch limits sweep out the target set.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::Ratio;

use super::spec::{EffectiveOracle, TargetSpec};
use crate::ratio::{big, floor_to_grid, Rational};
use crate::seq::Word;
use crate::{Error, Result};

/// Post-processing applied to every value after clamping into `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Adjust {
    None,
    /// Values `≤ 0` at depth `n` become `γ 2^{-n}`.
    PositiveFloor { gamma: Rational },
    /// Values at depth `n` are capped at `alphas[n]` (the last entry repeats).
    Cap { alphas: Vec<Rational> },
}

/// Memoized `φ` for one target presentation.
///
/// Raw values follow the four-case induction; `value` adds clamping and the
/// configured adjustment. Concurrent callers may compute the same entry twice,
/// which is harmless because the computation is deterministic.
#[derive(Debug)]
pub struct VarphiMap {
    oracle: Arc<dyn EffectiveOracle>,
    adjust: Adjust,
    a: Rational,
    b: Rational,
    raw: RwLock<HashMap<Word, Rational>>,
    m_memo: RwLock<HashMap<Word, Option<u32>>>,
}

impl VarphiMap {
    pub fn new(spec: &TargetSpec) -> Self {
        Self::with_adjust(spec, Adjust::None)
    }

    pub fn with_adjust(spec: &TargetSpec, adjust: Adjust) -> Self {
        let oracle = spec.oracle();
        let (a, b) = oracle.bounds();
        VarphiMap {
            oracle,
            adjust,
            a,
            b,
            raw: RwLock::new(HashMap::new()),
            m_memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn bounds(&self) -> (Rational, Rational) {
        (self.a, self.b)
    }

    /// Smallest `m` with `[s] ∩ F_m ≠ ∅`, if any.
    pub fn m_index(&self, s: &Word) -> Option<u32> {
        if let Some(m) = self.m_memo.read().expect("memo lock").get(s) {
            return *m;
        }
        let cap = self.oracle.index_cap();
        let m = if cap == 0 || !self.oracle.closed_meets(cap, s) {
            None
        } else {
            // closed_meets is monotone in m
            let (mut lo, mut hi) = (1, cap);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if self.oracle.closed_meets(mid, s) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Some(lo)
        };
        self.m_memo.write().expect("memo lock").insert(s.clone(), m);
        m
    }

    fn inconsistency(s: &Word, detail: impl Into<String>) -> Error {
        Error::OracleInconsistency {
            cylinder: s.to_string(),
            detail: detail.into(),
        }
    }

    fn child_raw(&self, parent: &Word, parent_raw: Rational, child: &Word) -> Result<Rational> {
        let m_child = self.m_index(child);
        let meets_g = self.oracle.meets_g(child);
        let Some(mc) = m_child else {
            if !meets_g {
                return Err(Self::inconsistency(child, "cylinder misses both F and G"));
            }
            return Ok(self.oracle.canonical(child));
        };
        let Some(mp) = self.m_index(parent) else {
            return Err(Self::inconsistency(child, "F_m meets the child but not its parent"));
        };
        if mc < mp {
            return Err(Self::inconsistency(child, format!("m dropped from {mp} to {mc}")));
        }
        if !meets_g {
            return Ok(parent_raw);
        }
        if !self.oracle.meets_g(parent) {
            return Err(Self::inconsistency(child, "G meets the child but not its parent"));
        }
        if mc == mp {
            Ok(parent_raw)
        } else {
            Ok(self.oracle.canonical(child))
        }
    }

    /// The unadjusted inductive value.
    pub fn raw(&self, s: &Word) -> Result<Rational> {
        if let Some(v) = self.raw.read().expect("memo lock").get(s) {
            return Ok(*v);
        }
        let known = {
            let memo = self.raw.read().expect("memo lock");
            (0..s.len()).rev().find(|&i| memo.contains_key(&s.prefix(i)))
        };
        let (mut len, mut value) = match known {
            Some(i) => (i, self.raw.read().expect("memo lock")[&s.prefix(i)]),
            None => (0, self.a),
        };
        let mut fresh = vec![(Word::new(), self.a)];
        let mut cur = s.prefix(len);
        while len < s.len() {
            let child = cur.child(s.bit(len));
            value = self.child_raw(&cur, value, &child)?;
            fresh.push((child.clone(), value));
            cur = child;
            len += 1;
        }
        let mut memo = self.raw.write().expect("memo lock");
        for (k, v) in fresh {
            memo.entry(k).or_insert(v);
        }
        Ok(value)
    }

    /// `φ(s)`: the raw value clamped into `[a, b]`, then adjusted.
    pub fn value(&self, s: &Word) -> Result<Rational> {
        let v = self.raw(s)?.clamp(self.a, self.b);
        Ok(self.apply(v, s.len()))
    }

    fn apply(&self, v: Rational, depth: usize) -> Rational {
        match &self.adjust {
            Adjust::None => v,
            Adjust::PositiveFloor { gamma } => {
                if v > Rational::from_integer(0) {
                    v
                } else {
                    gamma_floor(gamma, depth)
                }
            }
            Adjust::Cap { alphas } => match alphas.get(depth).or(alphas.last()) {
                Some(cap) => v.min(*cap),
                None => v,
            },
        }
    }

    /// `φ(x↾n)` for `n = 0..=len(x)`.
    pub fn along(&self, x: &Word) -> Result<Vec<Rational>> {
        (0..=x.len()).map(|n| self.value(&x.prefix(n))).collect()
    }
}

/// `γ 2^{-n}`, floored to the `2^{-62}` grid (and kept positive) when the
/// exact value does not fit.
fn gamma_floor(gamma: &Rational, n: usize) -> Rational {
    let exact = u32::try_from(n)
        .ok()
        .filter(|&n| n < 62)
        .and_then(|n| gamma.denom().checked_mul(1i64 << n))
        .map(|den| Rational::new(*gamma.numer(), den));
    exact.unwrap_or_else(|| {
        let v: Ratio<BigInt> = big(gamma) / (BigInt::from(1) << n);
        floor_to_grid(&v, 62).max(Rational::new(1, 1i64 << 62))
    })
}

/// `φ(s)` for a single cylinder with a fresh map.
pub fn build_varphi(spec: &TargetSpec, s: &Word) -> Result<Rational> {
    VarphiMap::new(spec).value(s)
}

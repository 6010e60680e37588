//! Effective presentations of target dimension sets.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ratio::{big, floor_to_grid, format_rational, serde_rational, serde_rational_vec, Rational};
use crate::seq::Word;
use crate::{Error, Result};

/// Canonical choices are exact when their denominator is at most `2^20` and
/// are floored to the `2^{-20}` grid otherwise.
pub const CANONICAL_GRID_BITS: u32 = 20;
/// Zero bits appended to a cylinder before asking for the canonical value.
pub const CANONICAL_PAD: usize = 32;
/// Outward rounding grid for interval oracles.
const RANGE_GRID_BITS: u32 = 40;

/// The call contract consumed by the `φ` construction.
///
/// The target set is `f(G)` for `G ⊆ 2^ω` with complement `F = ⋃_m F_m`, an
/// increasing union of closed sets, truncated at `index_cap()`.
pub trait EffectiveOracle: Send + Sync + fmt::Debug {
    /// Short identifier used in JSON and logs.
    fn name(&self) -> String;

    /// Parameters needed to rebuild a built-in oracle from JSON.
    fn params(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    /// `(min A, max A)`; the target set contains both.
    fn bounds(&self) -> (Rational, Rational);

    /// Number of closed pieces `F_1 ⊆ … ⊆ F_cap`; zero means `F = ∅`.
    fn index_cap(&self) -> u32 {
        0
    }

    /// Whether `[s] ∩ F_m ≠ ∅`.
    fn closed_meets(&self, _m: u32, _s: &Word) -> bool {
        false
    }

    /// Whether `[s] ∩ G ≠ ∅`.
    fn meets_g(&self, _s: &Word) -> bool {
        true
    }

    /// A closed interval containing `f([s] ∩ G)`; widths must shrink to zero
    /// along every branch.
    fn f_range(&self, s: &Word) -> (Rational, Rational);

    /// The canonical element of `f([s] ∩ G)`: the midpoint of the range at
    /// the lexicographically least deep extension of `s`.
    fn canonical(&self, s: &Word) -> Rational {
        let mut probe = s.clone();
        probe.append(&Word::zeros(CANONICAL_PAD));
        let (lo, hi) = self.f_range(&probe);
        round_to_grid(&((big(&lo) + big(&hi)) / BigInt::from(2)))
    }
}

/// Exact if the denominator is small, otherwise floored to the canonical grid.
pub fn round_to_grid(x: &Ratio<BigInt>) -> Rational {
    if x.denom().bits() <= CANONICAL_GRID_BITS as u64 + 1 {
        if let (Some(n), Some(d)) = (x.numer().to_i64(), x.denom().to_i64()) {
            if d <= 1 << CANONICAL_GRID_BITS {
                return Rational::new(n, d);
            }
        }
    }
    floor_to_grid(x, CANONICAL_GRID_BITS)
}

fn ceil_to_grid(x: &Ratio<BigInt>, bits: u32) -> Rational {
    -floor_to_grid(&-x, bits)
}

/// Number of leading bits needed to index `count` alternatives.
fn index_bits(count: usize) -> usize {
    (usize::BITS - count.saturating_sub(1).leading_zeros()) as usize
}

/// Index chosen by the first `bits` digits (clamped), or the range of indices
/// still possible when `s` is shorter.
fn index_range(s: &Word, bits: usize, count: usize) -> (usize, usize) {
    let known = s.len().min(bits);
    let head = (0..known).fold(0usize, |acc, i| (acc << 1) | s.bit(i) as usize);
    let free = bits - known;
    let lo = head << free;
    let hi = (head << free) | ((1usize << free) - 1);
    (lo.min(count - 1), hi.min(count - 1))
}

/// A finite target set; the first `⌈log2 m⌉` digits select the value.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSetOracle {
    values: Vec<Rational>,
    bits: usize,
}

impl FiniteSetOracle {
    pub fn new(mut values: Vec<Rational>) -> Result<Self> {
        values.sort();
        values.dedup();
        if values.is_empty() {
            return Err(Error::EmptySet("finite target set"));
        }
        if values[0] < Rational::zero() {
            return Err(Error::invalid("target values must be nonnegative"));
        }
        let bits = index_bits(values.len());
        Ok(FiniteSetOracle { values, bits })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

impl EffectiveOracle for FiniteSetOracle {
    fn name(&self) -> String {
        "finite_set".into()
    }

    fn bounds(&self) -> (Rational, Rational) {
        (self.values[0], *self.values.last().expect("nonempty"))
    }

    fn f_range(&self, s: &Word) -> (Rational, Rational) {
        let (lo, hi) = index_range(s, self.bits, self.values.len());
        (self.values[lo], self.values[hi])
    }

    fn canonical(&self, s: &Word) -> Rational {
        self.values[index_range(s, self.bits, self.values.len()).0]
    }
}

/// A finite union of closed intervals: leading digits pick the interval, the
/// remaining digits are the binary expansion of the relative position in it.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalUnionOracle {
    intervals: Vec<(Rational, Rational)>,
    bits: usize,
}

impl IntervalUnionOracle {
    pub fn new(mut intervals: Vec<(Rational, Rational)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptySet("interval union"));
        }
        if let Some((l, u)) = intervals.iter().find(|(l, u)| l > u || *l < Rational::zero()) {
            return Err(Error::invalid(format!("bad interval [{l}, {u}]")));
        }
        intervals.sort();
        intervals.dedup();
        let bits = index_bits(intervals.len());
        Ok(IntervalUnionOracle { intervals, bits })
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.intervals
    }

    /// Interval index and `(numerator, log2 denominator)` of the position
    /// digits already fixed by `s`.
    fn locate(&self, s: &Word) -> (usize, BigInt, usize) {
        let idx = index_range(s, self.bits, self.intervals.len()).0;
        let rest = s.len().saturating_sub(self.bits);
        let mut t = BigInt::zero();
        for i in self.bits..s.len() {
            t = (t << 1) + BigInt::from(s.bit(i) as u8);
        }
        (idx, t, rest)
    }

    fn point(&self, idx: usize, t: &Ratio<BigInt>) -> Ratio<BigInt> {
        let (l, u) = self.intervals[idx];
        big(&l) + t * (big(&u) - big(&l))
    }

    /// Whether `v` lies in one of the intervals.
    pub fn contains(&self, v: &Rational) -> bool {
        self.intervals.iter().any(|(l, u)| l <= v && v <= u)
    }
}

impl EffectiveOracle for IntervalUnionOracle {
    fn name(&self) -> String {
        "interval_union".into()
    }

    fn bounds(&self) -> (Rational, Rational) {
        let lo = self.intervals.iter().map(|i| i.0).min().expect("nonempty");
        let hi = self.intervals.iter().map(|i| i.1).max().expect("nonempty");
        (lo, hi)
    }

    fn f_range(&self, s: &Word) -> (Rational, Rational) {
        if s.len() < self.bits {
            let (lo, hi) = index_range(s, self.bits, self.intervals.len());
            let span = &self.intervals[lo..=hi];
            let l = span.iter().map(|i| i.0).min().expect("nonempty");
            let u = span.iter().map(|i| i.1).max().expect("nonempty");
            return (l, u);
        }
        let (idx, t, rest) = self.locate(s);
        let scale = BigInt::one() << rest;
        let lo = self.point(idx, &Ratio::new(t.clone(), scale.clone()));
        let hi = self.point(idx, &Ratio::new(t + 1, scale));
        let (l, u) = self.intervals[idx];
        (
            floor_to_grid(&lo, RANGE_GRID_BITS).max(l),
            ceil_to_grid(&hi, RANGE_GRID_BITS).min(u),
        )
    }

    fn canonical(&self, s: &Word) -> Rational {
        let (idx, t, rest) = self.locate(s);
        let exact = self.point(idx, &Ratio::new(t, BigInt::one() << rest));
        round_to_grid(&exact).max(self.intervals[idx].0)
    }
}

/// `A = {0} ∪ {1/m : m ≥ 1}`: `f(1^j 0 …) = 1/(j+1)` and `f(1^∞) = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReciprocalsOracle;

impl EffectiveOracle for ReciprocalsOracle {
    fn name(&self) -> String {
        "reciprocals".into()
    }

    fn bounds(&self) -> (Rational, Rational) {
        (Rational::zero(), Rational::one())
    }

    fn f_range(&self, s: &Word) -> (Rational, Rational) {
        match s.iter().position(|b| !b) {
            Some(j) => {
                let v = Rational::new(1, j as i64 + 1);
                (v, v)
            }
            None => (Rational::zero(), Rational::new(1, s.len() as i64 + 1)),
        }
    }
}

/// `f(x) = lo` when `x(0) = 0` and `hi` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelOracle {
    pub lo: Rational,
    pub hi: Rational,
}

impl EffectiveOracle for TwoLevelOracle {
    fn name(&self) -> String {
        "two_level".into()
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({ "lo": format_rational(&self.lo), "hi": format_rational(&self.hi) })
    }

    fn bounds(&self) -> (Rational, Rational) {
        (self.lo.min(self.hi), self.lo.max(self.hi))
    }

    fn f_range(&self, s: &Word) -> (Rational, Rational) {
        if s.is_empty() {
            self.bounds()
        } else if s.bit(0) {
            (self.hi, self.hi)
        } else {
            (self.lo, self.lo)
        }
    }
}

/// Every value of `inner` divided by a positive integer.
#[derive(Debug)]
pub struct ScaledOracle {
    inner: Arc<dyn EffectiveOracle>,
    divisor: i64,
}

impl EffectiveOracle for ScaledOracle {
    fn name(&self) -> String {
        format!("{}/{}", self.inner.name(), self.divisor)
    }

    fn bounds(&self) -> (Rational, Rational) {
        let (a, b) = self.inner.bounds();
        (a / self.divisor, b / self.divisor)
    }

    fn index_cap(&self) -> u32 {
        self.inner.index_cap()
    }

    fn closed_meets(&self, m: u32, s: &Word) -> bool {
        self.inner.closed_meets(m, s)
    }

    fn meets_g(&self, s: &Word) -> bool {
        self.inner.meets_g(s)
    }

    fn f_range(&self, s: &Word) -> (Rational, Rational) {
        let (a, b) = self.inner.f_range(s);
        (a / self.divisor, b / self.divisor)
    }

    fn canonical(&self, s: &Word) -> Rational {
        self.inner.canonical(s) / self.divisor
    }
}

/// A presented target set of dimensions.
#[derive(Clone, Debug)]
pub enum TargetSpec {
    FiniteSet(Arc<FiniteSetOracle>),
    IntervalUnion(Arc<IntervalUnionOracle>),
    Effective(Arc<dyn EffectiveOracle>),
}

impl TargetSpec {
    pub fn finite_set(values: Vec<Rational>) -> Result<Self> {
        Ok(TargetSpec::FiniteSet(Arc::new(FiniteSetOracle::new(values)?)))
    }

    pub fn singleton(v: Rational) -> Result<Self> {
        Self::finite_set(vec![v])
    }

    pub fn interval_union(intervals: Vec<(Rational, Rational)>) -> Result<Self> {
        Ok(TargetSpec::IntervalUnion(Arc::new(IntervalUnionOracle::new(intervals)?)))
    }

    pub fn effective(oracle: Arc<dyn EffectiveOracle>) -> Self {
        TargetSpec::Effective(oracle)
    }

    /// One of the built-in effective oracles: `reciprocals`, or `two_level`
    /// with `{"lo": .., "hi": ..}`.
    pub fn builtin(name: &str, params: &serde_json::Value) -> Result<Self> {
        match name {
            "reciprocals" => Ok(Self::effective(Arc::new(ReciprocalsOracle))),
            "two_level" => {
                let get = |key: &str| -> Result<Rational> {
                    let v = params
                        .get(key)
                        .ok_or_else(|| Error::invalid(format!("two_level needs `{key}`")))?;
                    serde_rational::deserialize(v.clone()).map_err(|e| Error::Parse(e.to_string()))
                };
                Ok(Self::effective(Arc::new(TwoLevelOracle { lo: get("lo")?, hi: get("hi")? })))
            }
            other => Err(Error::invalid(format!("unknown oracle `{other}`"))),
        }
    }

    pub fn oracle(&self) -> Arc<dyn EffectiveOracle> {
        match self {
            TargetSpec::FiniteSet(o) => o.clone(),
            TargetSpec::IntervalUnion(o) => o.clone(),
            TargetSpec::Effective(o) => o.clone(),
        }
    }

    pub fn bounds(&self) -> (Rational, Rational) {
        self.oracle().bounds()
    }

    /// Membership for presented sets; `None` for effective oracles.
    pub fn contains(&self, v: &Rational) -> Option<bool> {
        match self {
            TargetSpec::FiniteSet(o) => Some(o.values().binary_search(v).is_ok()),
            TargetSpec::IntervalUnion(o) => Some(o.contains(v)),
            TargetSpec::Effective(_) => None,
        }
    }

    /// The set `{z/d : z ∈ A}`.
    pub fn scaled(&self, d: u32) -> Result<TargetSpec> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let div = |v: &Rational| v / d as i64;
        Ok(match self {
            _ if d == 1 => self.clone(),
            TargetSpec::FiniteSet(o) => Self::finite_set(o.values().iter().map(div).collect())?,
            TargetSpec::IntervalUnion(o) => {
                Self::interval_union(o.intervals().iter().map(|(l, u)| (div(l), div(u))).collect())?
            }
            TargetSpec::Effective(o) => TargetSpec::Effective(Arc::new(ScaledOracle {
                inner: o.clone(),
                divisor: d as i64,
            })),
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum SpecRepr {
    FiniteSet {
        #[serde(with = "serde_rational_vec")]
        values: Vec<Rational>,
    },
    IntervalUnion {
        intervals: Vec<IntervalRepr>,
    },
    Effective {
        oracle: String,
        #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
        params: serde_json::Value,
    },
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr(
    #[serde(with = "serde_rational")] Rational,
    #[serde(with = "serde_rational")] Rational,
);

impl Serialize for TargetSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            TargetSpec::FiniteSet(o) => SpecRepr::FiniteSet { values: o.values().to_vec() },
            TargetSpec::IntervalUnion(o) => SpecRepr::IntervalUnion {
                intervals: o.intervals().iter().map(|&(l, u)| IntervalRepr(l, u)).collect(),
            },
            TargetSpec::Effective(o) => SpecRepr::Effective { oracle: o.name(), params: o.params() },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TargetSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let built = match SpecRepr::deserialize(d)? {
            SpecRepr::FiniteSet { values } => TargetSpec::finite_set(values),
            SpecRepr::IntervalUnion { intervals } => {
                TargetSpec::interval_union(intervals.into_iter().map(|IntervalRepr(l, u)| (l, u)).collect())
            }
            SpecRepr::Effective { oracle, params } => TargetSpec::builtin(&oracle, &params),
        };
        built.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn finite_set_indexing() {
        let o = FiniteSetOracle::new(vec![r(1, 3), r(0, 1), r(1, 2)]).unwrap();
        assert_eq!(o.f_range(&Word::new()), (r(0, 1), r(1, 2)));
        assert_eq!(o.canonical(&w("0")), r(0, 1));
        assert_eq!(o.canonical(&w("01")), r(1, 3));
        // index 3 clamps to the last value
        assert_eq!(o.canonical(&w("11")), r(1, 2));
    }

    #[test]
    fn interval_positions() {
        let o = IntervalUnionOracle::new(vec![(r(3, 10), r(7, 10))]).unwrap();
        assert_eq!(o.f_range(&Word::new()), (r(3, 10), r(7, 10)));
        assert_eq!(o.canonical(&w("1")), r(1, 2));
        let (lo, hi) = o.f_range(&w("01"));
        assert!(lo <= r(4, 10) && hi >= r(5, 10));
        let c = o.canonical(&w("0101010101010101010101010101"));
        assert!(o.contains(&c));
    }

    #[test]
    fn default_canonical_uses_least_branch() {
        let t = TwoLevelOracle { lo: r(1, 4), hi: r(3, 4) };
        assert_eq!(t.canonical(&w("0")), r(1, 4));
        assert_eq!(ReciprocalsOracle.canonical(&w("11")), r(1, 3));
    }

    #[test]
    fn json_round_trip() {
        let spec = TargetSpec::interval_union(vec![(r(3, 10), r(7, 10))]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"mode":"interval_union","intervals":[["3/10","7/10"]]}"#);
        let back: TargetSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.bounds(), spec.bounds());
        let eff: TargetSpec =
            serde_json::from_str(r#"{"mode":"effective","oracle":"two_level","params":{"lo":"1/4","hi":"3/4"}}"#).unwrap();
        assert_eq!(eff.bounds(), (r(1, 4), r(3, 4)));
        let again: TargetSpec = serde_json::from_str(&serde_json::to_string(&eff).unwrap()).unwrap();
        assert_eq!(again.bounds(), eff.bounds());
        assert!(serde_json::from_str::<TargetSpec>(r#"{"mode":"finite_set","values":[]}"#).is_err());
    }
}

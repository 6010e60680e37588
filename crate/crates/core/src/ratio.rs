//! Exact rational helpers.
//!
//! Target values, densities and retention exponents are carried as
//! `Ratio<i64>`. Comparisons against bounds that involve `√n` are decided
//! exactly by squaring; `i128` is tried first and `BigInt` takes over on
//! overflow.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use serde::{de, Deserializer, Serializer};

use crate::{Error, Result};

pub type Rational = Ratio<i64>;

/// Parses `p/q`, an integer, or a finite decimal such as `0.25` into an exact
/// rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
        if q == 0 {
            return Err(Error::Parse(format!("zero denominator in {t:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse()
                .map_err(|_| Error::Parse(format!("bad decimal {t:?}")))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 17 {
            return Err(Error::Parse(format!("bad decimal {t:?}")));
        }
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().unwrap();
        let mag = Rational::from_integer(int_part.abs()) + Rational::new(f, den);
        return Ok(if neg { -mag } else { mag });
    }
    t.parse::<i64>()
        .map(Rational::from_integer)
        .map_err(|_| Error::Parse(format!("bad rational {t:?}")))
}

pub fn format_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    struct RationalVisitor;

    impl de::Visitor<'_> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a rational as \"p/q\", a decimal string, or an integer")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
            parse_rational(v).map_err(E::custom)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
            Ok(Rational::from_integer(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
            i64::try_from(v)
                .map(Rational::from_integer)
                .map_err(|_| E::custom("integer out of range"))
        }
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Item {
            Int(i64),
            Str(String),
        }
        let items = Vec::<Item>::deserialize(d)?;
        items
            .into_iter()
            .map(|it| match it {
                Item::Int(i) => Ok(Rational::from_integer(i)),
                Item::Str(s) => parse_rational(&s).map_err(de::Error::custom),
            })
            .collect()
    }
}

pub mod serde_rational_opt {
    use super::*;
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        match Option::<serde_json::Value>::deserialize(d)? {
            None => Ok(None),
            Some(serde_json::Value::Number(n)) => n
                .as_i64()
                .map(|i| Some(Rational::from_integer(i)))
                .ok_or_else(|| de::Error::custom("expected an integer or a rational string")),
            Some(serde_json::Value::String(s)) => parse_rational(&s).map(Some).map_err(de::Error::custom),
            Some(_) => Err(de::Error::custom("expected an integer or a rational string")),
        }
    }
}

pub(crate) fn big(r: &Rational) -> Ratio<BigInt> {
    Ratio::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Decides `|num/den| ≤ c/√n` exactly (`den > 0`, `c ≥ 0`, `n ≥ 1`).
pub fn abs_le_c_over_sqrt(num: i128, den: i128, c: i128, n: u64) -> bool {
    debug_assert!(den > 0 && n >= 1 && c >= 0);
    let fast = num
        .checked_mul(num)
        .and_then(|sq| sq.checked_mul(n as i128))
        .zip(c.checked_mul(c).and_then(|cc| den.checked_mul(den).and_then(|dd| cc.checked_mul(dd))));
    match fast {
        Some((lhs, rhs)) => lhs <= rhs,
        None => {
            let num = BigInt::from(num);
            let den = BigInt::from(den);
            let c = BigInt::from(c);
            &num * &num * BigInt::from(n) <= &c * &c * &den * &den
        }
    }
}

/// Decides `|x| ≤ c / √n` for an exact rational `x`.
pub fn rational_abs_le_c_over_sqrt(x: &Ratio<BigInt>, c: u32, n: u64) -> bool {
    let lhs = x.numer() * x.numer() * BigInt::from(n);
    let rhs = BigInt::from(c) * BigInt::from(c) * x.denom() * x.denom();
    lhs <= rhs
}

/// Decides `|x| ≤ p/q + c/√n` exactly.
pub fn abs_le_frac_plus_c_over_sqrt(x: &Ratio<BigInt>, frac: &Ratio<BigInt>, c: u32, n: u64) -> bool {
    let slack = x.abs() - frac;
    if !slack.is_positive() {
        return true;
    }
    rational_abs_le_c_over_sqrt(&slack, c, n)
}

/// Exact floor of `(i * p) / q` for `q > 0`, `p ≥ 0`.
pub(crate) fn floor_mul_div(i: u64, p: i64, q: i64) -> i128 {
    let prod = i as i128 * p as i128;
    Integer::div_floor(&prod, &(q as i128))
}

/// Rounds `x` to the grid `2^{-bits}ℤ` towards zero (floor for non-negative).
pub fn floor_to_grid(x: &Ratio<BigInt>, bits: u32) -> Rational {
    let scale = BigInt::from(1u64) << bits;
    let scaled = (x * Ratio::from_integer(scale.clone())).floor().to_integer();
    Rational::new(
        scaled.to_i64().expect("grid value fits in i64"),
        1i64 << bits,
    )
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!(parse_rational("1/3").unwrap(), Rational::new(1, 3));
        assert_eq!(parse_rational("0.25").unwrap(), Rational::new(1, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), Rational::new(-1, 2));
        assert_eq!(parse_rational("2").unwrap(), Rational::from_integer(2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn sqrt_bound_is_exact() {
        // |1/2| <= 2/sqrt(16) = 1/2 holds with equality
        assert!(abs_le_c_over_sqrt(1, 2, 2, 16));
        assert!(!abs_le_c_over_sqrt(51, 100, 2, 16));
        // overflow path agrees with the fast path
        let big = i128::MAX / 4;
        assert!(!abs_le_c_over_sqrt(big, 1, 2, 16));
    }

    #[test]
    fn grid_rounding_floors() {
        let x = big(&Rational::new(1, 3));
        assert_eq!(floor_to_grid(&x, 2), Rational::new(1, 4));
    }
}

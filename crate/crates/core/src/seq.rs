//! Binary words and infinite-sequence programs.
//!
//! A [`Word`] is a finite element of `2^{<ω}`; a [`SeqProgram`] is a total,
//! deterministic description of an element of `2^ω` (periodic, Beatty-balanced,
//! block-spliced, or shifted). Programs serialize as `{"kind": .., "params": ..}`
//! JSON descriptors and words as ASCII `0/1` strings.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ratio::{floor_mul_div, serde_rational, Rational};
use crate::{Error, Result};

/// A finite binary word.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    bits: Vec<bool>,
}

impl Word {
    pub fn new() -> Self {
        Word { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Word { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Word { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        Word { bits: vec![true; n] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// `σ(w)`, the number of ones.
    pub fn sigma(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    /// `ϱ(w) = σ(w)/length(w)`; undefined for the empty word.
    pub fn density(&self) -> Option<Rational> {
        if self.is_empty() {
            None
        } else {
            Some(Rational::new(self.sigma() as i64, self.len() as i64))
        }
    }

    /// `w↾n`. Panics if `n > len`.
    pub fn prefix(&self, n: usize) -> Word {
        Word {
            bits: self.bits[..n].to_vec(),
        }
    }

    /// The finite shift `T^m`: drops the first `m` letters.
    pub fn shift(&self, m: usize) -> Word {
        Word {
            bits: self.bits[m.min(self.len())..].to_vec(),
        }
    }

    pub fn push(&mut self, b: bool) {
        self.bits.push(b);
    }

    /// `s⌢c`.
    pub fn child(&self, c: bool) -> Word {
        let mut bits = Vec::with_capacity(self.len() + 1);
        bits.extend_from_slice(&self.bits);
        bits.push(c);
        Word { bits }
    }

    pub fn append(&mut self, other: &Word) {
        self.bits.extend_from_slice(&other.bits);
    }

    /// Index of the first disagreement, if the words differ on their common
    /// prefix.
    pub fn first_disagreement(&self, other: &Word) -> Option<usize> {
        self.bits
            .iter()
            .zip(&other.bits)
            .position(|(a, b)| a != b)
    }

    /// All words of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = Word> {
        assert!(n < 64, "enumerating 2^{n} words");
        (0u64..(1u64 << n)).map(move |v| Word {
            bits: (0..n).map(|i| (v >> (n - 1 - i)) & 1 == 1).collect(),
        })
    }
}

/// `s⌢t⌢…` for a list of words.
pub fn concat(ws: &[Word]) -> Word {
    let mut out = Word::new();
    for w in ws {
        out.append(w);
    }
    out
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .bytes()
            .map(|b| match b {
                b'0' => Ok(false),
                b'1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "word contains {:?}, expected 0 or 1",
                    other as char
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word::from_bits)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How block lengths grow in a [`SeqProgram::Blocks`] program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSchedule {
    /// Programs the blocks are cut from, used cyclically.
    pub sources: Vec<SeqProgram>,
    /// Length of block 0.
    pub first_len: u64,
    /// Block `j` has length `first_len · growth^j`.
    pub growth: u64,
}

impl BlockSchedule {
    fn block_len(&self, j: u32) -> u64 {
        let first = self.first_len.max(1);
        self.growth
            .max(1)
            .checked_pow(j)
            .and_then(|g| g.checked_mul(first))
            .unwrap_or(u64::MAX)
    }

    /// Block index containing position `i`, with the block's start.
    fn locate(&self, i: u64) -> (usize, u64) {
        let mut start = 0u64;
        let mut j = 0u32;
        loop {
            let len = self.block_len(j);
            if i < start.saturating_add(len) {
                return (j as usize, start);
            }
            start = start.saturating_add(len);
            j += 1;
        }
    }

    /// Boundaries (start indices) of all blocks beginning before `n`.
    pub fn boundaries(&self, n: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut start = 0u64;
        let mut j = 0u32;
        while start < n {
            out.push(start);
            start = start.saturating_add(self.block_len(j));
            j += 1;
        }
        out
    }
}

/// A total, deterministic program for an infinite binary sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SeqProgram {
    /// `www…`; the empty word denotes the zero sequence.
    Periodic { word: Word },
    /// `x(i) = ⌊(i+1)a⌋ − ⌊ia⌋`.
    Beatty {
        #[serde(with = "serde_rational")]
        density: Rational,
    },
    /// Consecutive blocks spliced from the source programs: bit `i` of block
    /// `j` is bit `i` of `sources[j mod len]`, so each block is a factor of
    /// its source.
    Blocks(BlockSchedule),
    /// `T^by(inner)`.
    Shifted { inner: Box<SeqProgram>, by: u64 },
}

impl SeqProgram {
    pub fn periodic(word: Word) -> Self {
        SeqProgram::Periodic { word }
    }

    pub fn shifted(self, m: u64) -> Self {
        SeqProgram::Shifted {
            inner: Box::new(self),
            by: m,
        }
    }

    pub fn blocks(sources: Vec<SeqProgram>, first_len: u64, growth: u64) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::invalid("block program needs at least one source"));
        }
        if first_len == 0 || growth == 0 {
            return Err(Error::invalid("block lengths must be positive"));
        }
        Ok(SeqProgram::Blocks(BlockSchedule {
            sources,
            first_len,
            growth,
        }))
    }

    /// Bit at index `i`.
    pub fn bit(&self, i: u64) -> bool {
        match self {
            SeqProgram::Periodic { word } => {
                if word.is_empty() {
                    false
                } else {
                    word.bit((i % word.len() as u64) as usize)
                }
            }
            SeqProgram::Beatty { density } => {
                let (p, q) = (*density.numer(), *density.denom());
                floor_mul_div(i + 1, p, q) - floor_mul_div(i, p, q) == 1
            }
            SeqProgram::Blocks(schedule) => {
                if schedule.sources.is_empty() {
                    return false;
                }
                let (j, _) = schedule.locate(i);
                schedule.sources[j % schedule.sources.len()].bit(i)
            }
            SeqProgram::Shifted { inner, by } => inner.bit(i.saturating_add(*by)),
        }
    }

    /// `(x(k), …, x(k+n−1))`.
    pub fn factor(&self, k: u64, n: usize) -> Word {
        Word::from_bits((0..n as u64).map(|i| self.bit(k + i)).collect())
    }

    pub fn prefix(&self, n: usize) -> Word {
        self.factor(0, n)
    }
}

/// The balanced (Sturmian/Beatty) sequence of density `a`.
pub fn beatty_balanced(a: Rational) -> Result<SeqProgram> {
    if a < Rational::zero() || a > Rational::from_integer(1) {
        return Err(Error::invalid(format!(
            "density {a} outside [0,1]"
        )));
    }
    Ok(SeqProgram::Beatty { density: a })
}

/// `true` iff for every `n ≤ max_factor_len` all length-`n` factors of `w`
/// have `σ`-values spanning at most one.
pub fn is_balanced(w: &Word, max_factor_len: usize) -> bool {
    let len = w.len();
    let max_n = max_factor_len.min(len);
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0u32);
    for b in w.iter() {
        prefix.push(prefix.last().unwrap() + b as u32);
    }
    (1..=max_n).all(|n| {
        let (mut lo, mut hi) = (u32::MAX, 0u32);
        for k in 0..=(len - n) {
            let s = prefix[k + n] - prefix[k];
            lo = lo.min(s);
            hi = hi.max(s);
            if hi - lo > 1 {
                return false;
            }
        }
        true
    })
}

/// `ϱ(w↾n)` for `n = 1..=len`.
pub fn density_profile(w: &Word) -> Result<Vec<Rational>> {
    if w.is_empty() {
        return Err(Error::invalid("density profile of the empty word"));
    }
    let mut sigma = 0i64;
    Ok(w
        .iter()
        .enumerate()
        .map(|(i, b)| {
            sigma += b as i64;
            Rational::new(sigma, i as i64 + 1)
        })
        .collect())
}

/// Running minimum and maximum of a density profile from index `from`
/// onwards: finite proxies for the lower and upper density.
pub fn density_bounds(profile: &[Rational], from: usize) -> Option<(Rational, Rational)> {
    let tail = profile.get(from..)?;
    let lo = *tail.iter().min()?;
    let hi = *tail.iter().max()?;
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn beatty_examples() {
        let zero = beatty_balanced(r(0, 1)).unwrap();
        assert_eq!(zero.prefix(8), Word::zeros(8));
        let one = beatty_balanced(r(1, 1)).unwrap();
        assert_eq!(one.prefix(8), Word::ones(8));
        let two_fifths = beatty_balanced(r(2, 5)).unwrap();
        let w = two_fifths.prefix(10);
        assert_eq!(w.to_string(), "0010100101");
        assert_eq!(w.sigma(), 4);
        assert_eq!(w.density(), Some(r(2, 5)));
        assert_eq!(two_fifths.factor(0, 5).to_string(), "00101");
    }

    #[test]
    fn beatty_rejects_out_of_range() {
        assert!(beatty_balanced(r(-1, 3)).is_err());
        assert!(beatty_balanced(r(4, 3)).is_err());
    }

    #[test]
    fn balancedness_examples() {
        let alt: Word = "0101010".parse().unwrap();
        for m in 0..=alt.len() {
            assert!(is_balanced(&alt, m));
        }
        let w: Word = "1100".parse().unwrap();
        assert!(!is_balanced(&w, 2));
        assert!(is_balanced(&w, 1));
        assert!(is_balanced(&Word::new(), 0));
        let b = beatty_balanced(r(2, 5)).unwrap().prefix(64);
        assert!(is_balanced(&b, 64));
    }

    #[test]
    fn density_profile_examples() {
        assert_eq!(
            density_profile(&"1111".parse().unwrap()).unwrap(),
            vec![r(1, 1); 4]
        );
        assert_eq!(
            density_profile(&"10".parse().unwrap()).unwrap(),
            vec![r(1, 1), r(1, 2)]
        );
        assert!(density_profile(&Word::new()).is_err());
        let w = beatty_balanced(r(1, 3)).unwrap().prefix(100);
        for (i, d) in density_profile(&w).unwrap().into_iter().enumerate() {
            let n = i as i64 + 1;
            assert!((d - r(1, 3)).abs() <= r(1, n));
        }
    }

    #[test]
    fn concat_and_shift() {
        let a: Word = "10".parse().unwrap();
        let b: Word = "01".parse().unwrap();
        assert_eq!(concat(&[a, b]).to_string(), "1001");
        let p = beatty_balanced(r(3, 7)).unwrap();
        let shifted = p.clone().shifted(3);
        assert_eq!(shifted.factor(0, 20), p.factor(3, 20));
    }

    #[test]
    fn block_program_splices_sources() {
        let lo = beatty_balanced(r(1, 4)).unwrap();
        let hi = beatty_balanced(r(3, 4)).unwrap();
        let p = SeqProgram::blocks(vec![lo.clone(), hi.clone()], 4, 2).unwrap();
        // blocks: [0,4) from lo, [4,12) from hi, [12,28) from lo
        assert_eq!(p.factor(0, 4), lo.factor(0, 4));
        assert_eq!(p.factor(4, 8), hi.factor(4, 8));
        assert_eq!(p.factor(12, 16), lo.factor(12, 16));
        if let SeqProgram::Blocks(s) = &p {
            assert_eq!(s.boundaries(30), vec![0, 4, 12, 28]);
        }
    }

    #[test]
    fn program_json_round_trip() {
        let p = SeqProgram::blocks(
            vec![
                beatty_balanced(r(1, 3)).unwrap(),
                SeqProgram::periodic("110".parse().unwrap()).shifted(2),
            ],
            3,
            5,
        )
        .unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"kind\":\"blocks\""));
        let back: SeqProgram = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let beatty: SeqProgram =
            serde_json::from_str(r#"{"kind":"beatty","params":{"density":"2/5"}}"#).unwrap();
        assert_eq!(beatty.prefix(5).to_string(), "00101");
    }
}

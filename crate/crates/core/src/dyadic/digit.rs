use num_bigint::BigUint;

use super::{CubeIdx, CubeSet, DyadicSet, MAX_DIM, MAX_EXPLICIT_DEPTH};
use crate::seq::Word;
use crate::{Error, Result};

/// Largest `σ` for which [`kx_set`] enumerates leaves explicitly.
const MAX_ENUMERATED_SIGMA: u64 = 24;

/// `K(x_1) × … × K(x_d)` cut at the depth of the shortest word, kept symbolic.
///
/// A level-`m` cube is live iff, in every coordinate, each binary digit sitting
/// under a `0` of the corresponding word is `0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitProduct {
    words: Vec<Word>,
    depth: u32,
    // masks[k][m]: allowed-digit mask of coordinate k at level m (m ≤ 62)
    masks: Vec<Vec<u64>>,
}

impl DigitProduct {
    pub fn new(words: Vec<Word>) -> Result<Self> {
        if words.is_empty() || words.len() > MAX_DIM {
            return Err(Error::invalid(format!("dimension {} outside 1..={MAX_DIM}", words.len())));
        }
        let depth = words.iter().map(Word::len).min().unwrap_or(0);
        let depth = u32::try_from(depth).map_err(|_| Error::ResourceLimit("word too long".into()))?;
        let words: Vec<Word> = words.into_iter().map(|w| w.prefix(depth as usize)).collect();
        let masks = words
            .iter()
            .map(|w| {
                let top = depth.min(MAX_EXPLICIT_DEPTH) as usize;
                let mut out = Vec::with_capacity(top + 1);
                let mut m = 0u64;
                out.push(0);
                for i in 0..top {
                    m = (m << 1) | w.bit(i) as u64;
                    out.push(m);
                }
                out
            })
            .collect();
        Ok(DigitProduct { words, depth, masks })
    }

    /// `K(x)` in dimension one.
    pub fn kx(x: &Word) -> Self {
        Self::new(vec![x.clone()]).expect("one word is a valid dimension")
    }

    /// `K(x)^d`.
    pub fn kx_power(x: &Word, d: usize) -> Result<Self> {
        Self::new(vec![x.clone(); d])
    }

    /// The full cube `[0,1]^d` at `depth`.
    pub fn full(d: usize, depth: u32) -> Result<Self> {
        Self::new(vec![Word::ones(depth as usize); d])
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        let mut words = self.words.clone();
        words.extend(other.words.iter().cloned());
        Self::new(words)
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// Base-2 logarithm of the exact number of live cubes at `level`.
    pub fn log2_count(&self, level: u32) -> u64 {
        self.words.iter().map(|w| w.prefix(level as usize).sigma()).sum()
    }

    pub fn to_dyadic_set(&self, limit: usize) -> Result<DyadicSet> {
        if self.depth > MAX_EXPLICIT_DEPTH {
            return Err(Error::ResourceLimit(format!("depth {} is too deep to rasterize", self.depth)));
        }
        DyadicSet::rasterize(self, limit)
    }
}

impl CubeSet for DigitProduct {
    fn dim(&self) -> usize {
        self.words.len()
    }

    fn depth(&self) -> u32 {
        self.depth
    }

    fn is_live(&self, cube: &CubeIdx) -> bool {
        let m = cube.level;
        if m > self.depth || cube.dim() != self.words.len() {
            return false;
        }
        if m <= MAX_EXPLICIT_DEPTH {
            return cube
                .coords
                .iter()
                .zip(&self.masks)
                .all(|(&c, masks)| c >> m == 0 && c & !masks[m as usize] == 0);
        }
        // coordinates are u64, so only the last 64 digits can be nonzero
        cube.coords.iter().zip(&self.words).all(|(&c, w)| {
            (0..64u32).all(|j| (c >> j) & 1 == 0 || w.bit((m - 1 - j) as usize))
        })
    }

    fn count_at(&self, level: u32) -> BigUint {
        BigUint::from(1u8) << self.log2_count(level.min(self.depth))
    }

    fn least_leaf_below(&self, cube: &CubeIdx) -> Option<CubeIdx> {
        if !self.is_live(cube) || self.depth > MAX_EXPLICIT_DEPTH {
            return None;
        }
        let shift = self.depth - cube.level;
        Some(CubeIdx {
            level: self.depth,
            coords: cube.coords.iter().map(|c| c << shift).collect(),
        })
    }
}

/// Numerators (over `2^n`) of the left endpoints `F_n(x)`, increasing.
pub fn left_endpoints(x: &Word) -> Result<Vec<u64>> {
    let n = x.len();
    if n as u32 > MAX_EXPLICIT_DEPTH {
        return Err(Error::ResourceLimit(format!("word length {n} exceeds {MAX_EXPLICIT_DEPTH}")));
    }
    let sigma = x.sigma();
    if sigma > MAX_ENUMERATED_SIGMA {
        return Err(Error::ResourceLimit(format!("2^{sigma} intervals")));
    }
    // weight of each free digit, most significant first
    let weights: Vec<u64> = (0..n).filter(|&i| x.bit(i)).map(|i| 1u64 << (n - 1 - i)).collect();
    let count = 1u64 << sigma;
    Ok((0..count)
        .map(|idx| {
            weights
                .iter()
                .enumerate()
                .filter(|(j, _)| (idx >> (sigma as usize - 1 - j)) & 1 == 1)
                .map(|(_, w)| w)
                .sum()
        })
        .collect())
}

/// The level-`len(x)` intervals of `K(x)` as an explicit one-dimensional set.
pub fn kx_set(x: &Word) -> Result<DyadicSet> {
    let ends = left_endpoints(x)?;
    Ok(DyadicSet::from_sorted_flat(1, x.len() as u32, ends))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn endpoints_of_small_words() {
        assert_eq!(left_endpoints(&w("101")).unwrap(), vec![0, 1, 4, 5]);
        assert_eq!(left_endpoints(&w("000")).unwrap(), vec![0]);
        assert_eq!(kx_set(&w("101101")).unwrap().leaf_count(), 16);
    }

    #[test]
    fn symbolic_matches_explicit() {
        let x = w("1101001110");
        let sym = DigitProduct::kx(&x);
        let exp = kx_set(&x).unwrap();
        assert_eq!(sym.to_dyadic_set(1 << 20).unwrap(), exp);
        let sq = DigitProduct::kx_power(&x, 2).unwrap().to_dyadic_set(1 << 20).unwrap();
        assert_eq!(sq, exp.product(&exp).unwrap());
    }

    #[test]
    fn deep_counts_are_exact() {
        let x = Word::ones(2048);
        let k = DigitProduct::kx(&x);
        assert_eq!(k.count_at(2048), BigUint::from(1u8) << 2048usize);
        assert!(k.is_live(&CubeIdx::new(2048, &[u64::MAX])));
        let z = DigitProduct::kx(&Word::zeros(100));
        assert!(!z.is_live(&CubeIdx::new(100, &[1])));
        assert!(z.is_live(&CubeIdx::new(100, &[0])));
    }
}

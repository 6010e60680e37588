//! Finite-depth unions of dyadic cubes in `[0,1]^d`.
//!
//! Two representations share the [`CubeSet`] interface: [`DyadicSet`] stores the
//! full ancestor-closed tree explicitly, while [`DigitProduct`] describes
//! products of digit-restriction sets `K(x_1) × … × K(x_d)` symbolically so
//! that counts at depth in the thousands stay exact.

mod codec;
mod digit;
mod hausdorff;
mod set;
mod zoom;

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::ratio::Rational;
use crate::{Error, Result};

pub use codec::{decode_binary, encode_binary};
pub use digit::{kx_set, left_endpoints, DigitProduct};
pub use hausdorff::{directed_sup_half_cells, hausdorff_distance, Metric};
pub use set::DyadicSet;
pub use zoom::{decompose, verify_sandwich, zoom, ZoomView};

/// Largest depth whose cube coordinates fit the explicit representation.
pub const MAX_EXPLICIT_DEPTH: u32 = 62;
/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

pub type Coords = SmallVec<[u64; 4]>;

/// The closed cube `Π_j [c_j 2^{-n}, (c_j+1) 2^{-n}]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeIdx {
    pub level: u32,
    pub coords: Coords,
}

impl CubeIdx {
    pub fn new(level: u32, coords: &[u64]) -> Self {
        CubeIdx {
            level,
            coords: Coords::from_slice(coords),
        }
    }

    pub fn root(d: usize) -> Self {
        CubeIdx {
            level: 0,
            coords: smallvec::smallvec![0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn parent(&self) -> Option<CubeIdx> {
        (self.level > 0).then(|| CubeIdx {
            level: self.level - 1,
            coords: self.coords.iter().map(|c| c >> 1).collect(),
        })
    }

    /// Ancestor at `level ≤ self.level`.
    pub fn ancestor(&self, level: u32) -> CubeIdx {
        assert!(level <= self.level);
        let shift = self.level - level;
        CubeIdx {
            level,
            coords: self.coords.iter().map(|c| c >> shift).collect(),
        }
    }

    /// Child number `idx`: bit `k` of `idx` is the low bit of coordinate `k`.
    pub fn child(&self, idx: usize) -> CubeIdx {
        CubeIdx {
            level: self.level + 1,
            coords: self
                .coords
                .iter()
                .enumerate()
                .map(|(k, c)| (c << 1) | ((idx >> k) & 1) as u64)
                .collect(),
        }
    }

    pub fn children(&self) -> impl Iterator<Item = CubeIdx> + '_ {
        (0..1usize << self.dim()).map(move |i| self.child(i))
    }

    /// Whether `other` (at a level at least as deep) lies inside `self`.
    pub fn contains(&self, other: &CubeIdx) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        let s = self.side();
        self.coords.iter().map(|&c| c as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.coords.iter().map(|&c| (c as f64 + 0.5) * s).collect()
    }
}

impl fmt::Debug for CubeIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cube(L{}:{:?})", self.level, self.coords.as_slice())
    }
}

/// A finite-depth union of dyadic cubes, queried level by level.
pub trait CubeSet: Sync {
    fn dim(&self) -> usize;

    fn depth(&self) -> u32;

    /// Whether `cube` (at `cube.level ≤ depth`) is an ancestor of some leaf.
    fn is_live(&self, cube: &CubeIdx) -> bool;

    /// Number of live cubes at `level`.
    fn count_at(&self, level: u32) -> BigUint {
        let mut frontier = if self.is_live(&CubeIdx::root(self.dim())) {
            vec![CubeIdx::root(self.dim())]
        } else {
            Vec::new()
        };
        for _ in 0..level {
            frontier = frontier
                .iter()
                .flat_map(|c| c.children().filter(|ch| self.is_live(ch)).collect::<Vec<_>>())
                .collect();
        }
        BigUint::from(frontier.len())
    }

    fn live_children(&self, cube: &CubeIdx) -> Vec<CubeIdx> {
        cube.children().filter(|c| self.is_live(c)).collect()
    }

    /// The first live leaf below `cube` in lexicographic child order, if any.
    fn least_leaf_below(&self, cube: &CubeIdx) -> Option<CubeIdx> {
        if !self.is_live(cube) {
            return None;
        }
        let mut cur = cube.clone();
        while cur.level < self.depth() {
            let next = lex_children(&cur).find(|c| self.is_live(c))?;
            cur = next;
        }
        Some(cur)
    }
}

impl serde::Serialize for CubeIdx {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.level, self.coords.as_slice()).serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for CubeIdx {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (level, coords): (u32, Vec<u64>) = Deserialize::deserialize(d)?;
        Ok(CubeIdx::new(level, &coords))
    }
}

/// Children ordered lexicographically by coordinate tuple.
pub(crate) fn lex_children(cube: &CubeIdx) -> impl Iterator<Item = CubeIdx> + '_ {
    let d = cube.dim();
    (0..1usize << d).map(move |i| {
        // coordinate 0 is the most significant position in lexicographic order
        let idx = (0..d).fold(0usize, |acc, k| acc | (((i >> (d - 1 - k)) & 1) << k));
        cube.child(idx)
    })
}

/// A dyadic rational `num / 2^log_den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    pub num: i64,
    pub log_den: u32,
}

impl Dyadic {
    /// `num / 2^log_den` in lowest terms.
    pub fn new(mut num: i64, mut log_den: u32) -> Self {
        if num == 0 {
            return Dyadic::zero();
        }
        let twos = num.trailing_zeros().min(log_den);
        num >>= twos;
        log_den -= twos;
        Dyadic { num, log_den }
    }

    pub fn zero() -> Self {
        Dyadic { num: 0, log_den: 0 }
    }

    pub fn integer(n: i64) -> Self {
        Dyadic { num: n, log_den: 0 }
    }

    pub fn from_rational(r: &Rational) -> Result<Self> {
        let den = *r.denom();
        if den <= 0 || den & (den - 1) != 0 {
            return Err(Error::invalid(format!("{r} is not a dyadic rational")));
        }
        Ok(Dyadic::new(*r.numer(), den.trailing_zeros()))
    }

    pub fn to_rational(self) -> Rational {
        Rational::new(self.num, 1i64 << self.log_den)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 * (-(self.log_den as f64)).exp2()
    }

    /// `self · 2^level` when it is an integer.
    pub fn cells_at(self, level: u32) -> Option<i64> {
        if self.log_den <= level {
            self.num.checked_mul(1i64.checked_shl(level - self.log_den)?)
        } else {
            let drop = self.log_den - level;
            if drop >= 63 {
                return (self.num == 0).then_some(0);
            }
            (self.num % (1i64 << drop) == 0).then(|| self.num >> drop)
        }
    }

    /// `2^m · self`.
    pub fn scale_pow2(self, m: u32) -> Self {
        if self.log_den >= m {
            Dyadic::new(self.num, self.log_den - m)
        } else {
            Dyadic::new(self.num << (m - self.log_den), 0)
        }
    }

    pub fn add(self, other: Dyadic) -> Self {
        let den = self.log_den.max(other.log_den);
        let a = self.num << (den - self.log_den);
        let b = other.num << (den - other.log_den);
        Dyadic::new(a + b, den)
    }
}

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{CubeIdx, CubeSet, Coords, MAX_DIM, MAX_EXPLICIT_DEPTH};
use crate::{Error, Result};

/// An explicit union of level-`depth` dyadic cubes.
///
/// Every level `0..=depth` is stored as a lexicographically sorted, flattened
/// list of coordinate tuples, so ancestor queries are binary searches.
#[derive(Clone, PartialEq, Eq)]
pub struct DyadicSet {
    d: usize,
    depth: u32,
    levels: Vec<Vec<u64>>,
}

fn check_shape(d: usize, depth: u32) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::invalid(format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    if depth > MAX_EXPLICIT_DEPTH {
        return Err(Error::ResourceLimit(format!(
            "explicit depth {depth} exceeds {MAX_EXPLICIT_DEPTH}"
        )));
    }
    Ok(())
}

/// Sorts and dedups a flat array of `d`-tuples.
fn sort_tuples(flat: Vec<u64>, d: usize) -> Vec<u64> {
    let mut rows: Vec<&[u64]> = flat.chunks_exact(d).collect();
    rows.sort_unstable();
    rows.dedup();
    rows.concat()
}

pub(crate) fn search(level: &[u64], d: usize, coords: &[u64]) -> std::result::Result<usize, usize> {
    let n = level.len() / d;
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match level[mid * d..(mid + 1) * d].cmp(coords) {
            Ordering::Less => lo = mid + 1,
            Ordering::Greater => hi = mid,
            Ordering::Equal => return Ok(mid),
        }
    }
    Err(lo)
}

impl DyadicSet {
    pub fn empty(d: usize, depth: u32) -> Result<Self> {
        check_shape(d, depth)?;
        Ok(DyadicSet {
            d,
            depth,
            levels: vec![Vec::new(); depth as usize + 1],
        })
    }

    /// Builds the set from leaf coordinates at `depth`; duplicates are merged.
    pub fn from_leaves<I, C>(d: usize, depth: u32, leaves: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[u64]>,
    {
        check_shape(d, depth)?;
        let limit = 1u64 << depth;
        let mut flat = Vec::new();
        for leaf in leaves {
            let leaf = leaf.as_ref();
            if leaf.len() != d {
                return Err(Error::DimensionMismatch { left: d, right: leaf.len() });
            }
            if let Some(c) = leaf.iter().find(|&&c| c >= limit) {
                return Err(Error::invalid(format!("coordinate {c} outside [0, 2^{depth})")));
            }
            flat.extend_from_slice(leaf);
        }
        Ok(Self::from_sorted_flat(d, depth, sort_tuples(flat, d)))
    }

    /// `leaves` must be sorted, deduplicated and in range.
    pub(crate) fn from_sorted_flat(d: usize, depth: u32, leaves: Vec<u64>) -> Self {
        let mut levels = vec![Vec::new(); depth as usize + 1];
        levels[depth as usize] = leaves;
        for m in (0..depth as usize).rev() {
            let up: Vec<u64> = levels[m + 1].iter().map(|c| c >> 1).collect();
            levels[m] = sort_tuples(up, d);
        }
        DyadicSet { d, depth, levels }
    }

    /// All `2^{depth·d}` cubes.
    pub fn full(d: usize, depth: u32) -> Result<Self> {
        check_shape(d, depth)?;
        let bits = depth as u64 * d as u64;
        if bits > 26 {
            return Err(Error::ResourceLimit(format!("full grid with 2^{bits} cells")));
        }
        let side = 1u64 << depth;
        let total = 1u64 << bits;
        let mut flat = Vec::with_capacity((total as usize) * d);
        for i in 0..total {
            let mut rest = i;
            let mut row = vec![0u64; d];
            for k in (0..d).rev() {
                row[k] = rest % side;
                rest /= side;
            }
            flat.extend_from_slice(&row);
        }
        Ok(Self::from_sorted_flat(d, depth, flat))
    }

    /// Rasterizes any [`CubeSet`] by walking its live tree.
    pub fn rasterize(set: &dyn CubeSet, limit: usize) -> Result<Self> {
        let d = set.dim();
        let depth = set.depth();
        check_shape(d, depth)?;
        let root = CubeIdx::root(d);
        let mut frontier = if set.is_live(&root) { vec![root] } else { Vec::new() };
        for _ in 0..depth {
            let mut next = Vec::new();
            for c in &frontier {
                next.extend(set.live_children(c));
            }
            if next.len() > limit {
                return Err(Error::ResourceLimit(format!(
                    "rasterizing more than {limit} cubes"
                )));
            }
            frontier = next;
        }
        let flat: Vec<u64> = frontier.iter().flat_map(|c| c.coords.iter().copied()).collect();
        Ok(Self::from_sorted_flat(d, depth, sort_tuples(flat, d)))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn is_empty(&self) -> bool {
        self.levels[self.depth as usize].is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.levels[self.depth as usize].len() / self.d
    }

    /// Number of live cubes at `level`.
    pub fn count(&self, level: u32) -> Result<usize> {
        if level > self.depth {
            return Err(Error::LevelExceedsDepth { level, depth: self.depth });
        }
        Ok(self.levels[level as usize].len() / self.d)
    }

    /// Live cubes at `level` as coordinate slices in lexicographic order.
    pub fn cells(&self, level: u32) -> impl ExactSizeIterator<Item = &[u64]> + '_ {
        self.levels[level as usize].chunks_exact(self.d)
    }

    pub fn leaves(&self) -> impl ExactSizeIterator<Item = &[u64]> + '_ {
        self.cells(self.depth)
    }

    pub(crate) fn level_flat(&self, level: u32) -> &[u64] {
        &self.levels[level as usize]
    }

    pub fn contains_cell(&self, level: u32, coords: &[u64]) -> bool {
        level <= self.depth && search(&self.levels[level as usize], self.d, coords).is_ok()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { left: self.d, right: other.d });
        }
        if self.depth != other.depth {
            return Err(Error::DepthMismatch { left: self.depth, right: other.depth });
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        self.check_compatible(other)?;
        Ok(self.leaves().all(|c| other.contains_cell(self.depth, c)))
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut flat = self.levels[self.depth as usize].clone();
        flat.extend_from_slice(&other.levels[other.depth as usize]);
        Ok(Self::from_sorted_flat(self.d, self.depth, sort_tuples(flat, self.d)))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let flat: Vec<u64> = self
            .leaves()
            .filter(|c| other.contains_cell(self.depth, c))
            .flat_map(|c| c.iter().copied())
            .collect();
        Ok(Self::from_sorted_flat(self.d, self.depth, flat))
    }

    /// Refines every leaf into its `2^{extra·d}` descendants.
    pub fn refine(&self, extra: u32) -> Result<Self> {
        let depth = self.depth + extra;
        check_shape(self.d, depth)?;
        let per = 1u64 << extra;
        let mut flat = Vec::new();
        for leaf in self.leaves() {
            let count = per.pow(self.d as u32);
            for i in 0..count {
                let mut rest = i;
                for &c in leaf {
                    flat.push((c << extra) | (rest % per));
                    rest /= per;
                }
            }
        }
        Ok(Self::from_sorted_flat(self.d, depth, sort_tuples(flat, self.d)))
    }

    /// The same set viewed at a shallower depth (leaves become the level-`depth` ancestors).
    pub fn truncate(&self, depth: u32) -> Result<Self> {
        if depth > self.depth {
            return Err(Error::LevelExceedsDepth { level: depth, depth: self.depth });
        }
        Ok(DyadicSet {
            d: self.d,
            depth,
            levels: self.levels[..=depth as usize].to_vec(),
        })
    }

    /// Cells shifted by an integer offset (in leaf units); cells leaving the grid are dropped.
    pub fn translate_cells(&self, offset: &[i64]) -> Result<Self> {
        if offset.len() != self.d {
            return Err(Error::DimensionMismatch { left: self.d, right: offset.len() });
        }
        let limit = 1i128 << self.depth;
        let mut flat = Vec::new();
        'cells: for leaf in self.leaves() {
            let start = flat.len();
            for (&c, &o) in leaf.iter().zip(offset) {
                let v = c as i128 + o as i128;
                if v < 0 || v >= limit {
                    flat.truncate(start);
                    continue 'cells;
                }
                flat.push(v as u64);
            }
        }
        Ok(Self::from_sorted_flat(self.d, self.depth, sort_tuples(flat, self.d)))
    }

    /// Cartesian product; leaf coordinates are concatenated.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch { left: self.depth, right: other.depth });
        }
        let d = self.d + other.d;
        check_shape(d, self.depth)?;
        let total = self.leaf_count().checked_mul(other.leaf_count());
        match total {
            Some(t) if t <= 1 << 26 => {}
            _ => return Err(Error::ResourceLimit("product too large to enumerate".into())),
        }
        let mut flat = Vec::new();
        for a in self.leaves() {
            for b in other.leaves() {
                flat.extend_from_slice(a);
                flat.extend_from_slice(b);
            }
        }
        Ok(Self::from_sorted_flat(d, self.depth, flat))
    }

    pub fn leaf_set(&self) -> HashSet<Coords> {
        self.leaves().map(Coords::from_slice).collect()
    }
}

impl CubeSet for DyadicSet {
    fn dim(&self) -> usize {
        self.d
    }

    fn depth(&self) -> u32 {
        self.depth
    }

    fn is_live(&self, cube: &CubeIdx) -> bool {
        self.contains_cell(cube.level, &cube.coords)
    }

    fn count_at(&self, level: u32) -> BigUint {
        BigUint::from(self.count(level.min(self.depth)).unwrap_or(0))
    }
}

impl std::fmt::Debug for DyadicSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DyadicSet(d={}, depth={}, leaves={})", self.d, self.depth, self.leaf_count())
    }
}

#[derive(Serialize, Deserialize)]
struct SetJson {
    d: usize,
    depth: u32,
    leaves: Vec<Vec<u64>>,
}

impl Serialize for DyadicSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SetJson {
            d: self.d,
            depth: self.depth,
            leaves: self.leaves().map(<[u64]>::to_vec).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicSet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = SetJson::deserialize(de)?;
        DyadicSet::from_leaves(raw.d, raw.depth, raw.leaves).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ancestors_are_alive() {
        let s = DyadicSet::from_leaves(2, 3, [[0u64, 7], [5, 2]]).unwrap();
        assert_eq!(s.count(0).unwrap(), 1);
        assert!(s.contains_cell(1, &[0, 1]));
        assert!(s.contains_cell(1, &[1, 0]));
        assert!(!s.contains_cell(1, &[1, 1]));
        assert_eq!(s.count(2).unwrap(), 2);
    }

    #[test]
    fn product_and_full() {
        let a = DyadicSet::full(1, 3).unwrap();
        let sq = a.product(&a).unwrap();
        assert_eq!(sq, DyadicSet::full(2, 3).unwrap());
        assert_eq!(sq.leaf_count(), 64);
    }

    #[test]
    fn refine_and_truncate_round_trip() {
        let s = DyadicSet::from_leaves(1, 2, [[1u64], [3]]).unwrap();
        let r = s.refine(2).unwrap();
        assert_eq!(r.leaf_count(), 8);
        assert_eq!(r.truncate(2).unwrap(), s);
    }

    #[test]
    fn json_shape() {
        let s = DyadicSet::from_leaves(1, 2, [[2u64], [0]]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"d":1,"depth":2,"leaves":[[0],[2]]}"#);
        let back: DyadicSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<DyadicSet>(r#"{"d":1,"depth":1,"leaves":[[2]]}"#).is_err());
    }
}

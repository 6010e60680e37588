use serde::{Deserialize, Serialize};

use super::digit::left_endpoints;
use super::{Dyadic, DyadicSet};
use crate::seq::Word;
use crate::{Error, Result};

/// A zoomed view `(2^m A + u) ∩ [0,1]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoomView {
    pub set: DyadicSet,
    /// Some retained cube sits at positive distance from the boundary of
    /// `[0,1]^d`, so the view certainly meets the open cube.
    pub meets_open_cube: bool,
}

fn offsets(u: &[Dyadic], level: u32, d: usize) -> Result<Vec<i64>> {
    if u.len() != d {
        return Err(Error::DimensionMismatch { left: d, right: u.len() });
    }
    u.iter()
        .map(|v| {
            v.cells_at(level).ok_or_else(|| {
                Error::invalid(format!(
                    "translation {}/2^{} is not aligned to the level-{level} grid",
                    v.num, v.log_den
                ))
            })
        })
        .collect()
}

/// Scales by `2^m`, translates by `u` and clips to the unit cube.
///
/// Cubes that only touch `[0,1]^d` along a face are dropped.
pub fn zoom(a: &DyadicSet, m: u32, u: &[Dyadic]) -> Result<ZoomView> {
    if m > a.depth() {
        return Err(Error::LevelExceedsDepth { level: m, depth: a.depth() });
    }
    let depth = a.depth() - m;
    let shift = offsets(u, depth, a.dim())?;
    let moved = DyadicSet::from_leaves(
        a.dim(),
        depth,
        a.leaves().filter_map(|c| {
            let limit = 1i128 << depth;
            c.iter()
                .zip(&shift)
                .map(|(&x, &o)| {
                    let v = x as i128 + o as i128;
                    (0..limit).contains(&v).then_some(v as u64)
                })
                .collect::<Option<Vec<u64>>>()
        }),
    )?;
    if moved.is_empty() {
        return Err(Error::EmptySet("zoomed view"));
    }
    let top = (1u64 << depth).saturating_sub(2);
    let meets_open_cube = depth >= 2 && moved.leaves().any(|c| c.iter().all(|&x| x >= 1 && x <= top));
    Ok(ZoomView { set: moved, meets_open_cube })
}

/// The pieces `2^{-n} K(T^n x) + u`, `u ∈ F_n(x)`, of `K(x)` at level `n`.
pub fn decompose(x: &Word, n: usize) -> Result<Vec<(Dyadic, DyadicSet)>> {
    if n > x.len() {
        return Err(Error::LevelExceedsDepth { level: n as u32, depth: x.len() as u32 });
    }
    let depth = x.len() as u32;
    let heads = left_endpoints(&x.prefix(n))?;
    let tails = left_endpoints(&x.shift(n))?;
    let tail_bits = depth - n as u32;
    Ok(heads
        .into_iter()
        .map(|h| {
            let leaves: Vec<u64> = tails.iter().map(|t| (h << tail_bits) | t).collect();
            (
                Dyadic::new(h as i64, n as u32),
                DyadicSet::from_sorted_flat(1, depth, leaves),
            )
        })
        .collect())
}

/// Checks `C + v_1 ⊆ E ⊆ ⋃_i (C + v_i)` cell by cell.
pub fn verify_sandwich(e: &DyadicSet, c: &DyadicSet, translates: &[Vec<Dyadic>]) -> Result<bool> {
    if e.depth() != c.depth() {
        return Err(Error::DepthMismatch { left: e.depth(), right: c.depth() });
    }
    if e.dim() != c.dim() {
        return Err(Error::DimensionMismatch { left: e.dim(), right: c.dim() });
    }
    if translates.is_empty() {
        return Ok(e.is_empty());
    }
    let depth = e.depth();
    let shifts: Vec<Vec<i64>> = translates
        .iter()
        .map(|v| offsets(v, depth, e.dim()))
        .collect::<Result<_>>()?;
    let limit = 1i128 << depth;
    // C + v_1 ⊆ E, including cells that would fall outside the grid
    for cell in c.leaves() {
        let mut moved = Vec::with_capacity(cell.len());
        for (&x, &o) in cell.iter().zip(&shifts[0]) {
            let v = x as i128 + o as i128;
            if !(0..limit).contains(&v) {
                return Ok(false);
            }
            moved.push(v as u64);
        }
        if !e.contains_cell(depth, &moved) {
            return Ok(false);
        }
    }
    // E ⊆ ⋃ (C + v_i)
    let covered = |cell: &[u64]| {
        shifts.iter().any(|s| {
            let back: Option<Vec<u64>> = cell
                .iter()
                .zip(s)
                .map(|(&x, &o)| {
                    let v = x as i128 - o as i128;
                    (0..limit).contains(&v).then_some(v as u64)
                })
                .collect();
            back.is_some_and(|b| c.contains_cell(depth, &b))
        })
    };
    Ok(e.leaves().all(covered))
}

//! Exact Hausdorff distance between unions of equal-size grid cubes.
//!
//! Under the sup metric the critical radius is always a multiple of half a
//! cell, so the distance reduces to integer arithmetic on the half-cell grid:
//! a half-cell `q` lies in the `t/2`-neighbourhood of cube `j` iff every
//! coordinate gap `m_k(q_k, j_k) ≤ t`. Euclidean distances in dimension ≥ 2 are
//! computed by a certified branch-and-bound to relative tolerance `2^{-30}`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::DyadicSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Sup,
    Euclidean,
}

/// Gap between half-cell `q` and cube `j`, in half-cell units.
#[inline]
fn gap(q: u64, j: u64) -> u64 {
    let lo = 2 * j;
    if q < lo {
        lo - q
    } else if q > lo + 1 {
        q - lo - 1
    } else {
        0
    }
}

/// First index whose first coordinate is `≥ c0`.
fn lower_bound_first(flat: &[u64], d: usize, c0: u64) -> usize {
    let n = flat.len() / d;
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if flat[mid * d] < c0 {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Visits `b`'s cells outward from the first coordinate `c0`; `step` returns
/// `false` once the first-coordinate gap alone rules out improvement, which
/// ends the scan in that direction.
fn sweep<F>(b: &[u64], d: usize, c0: u64, mut step: F)
where
    F: FnMut(&[u64]) -> bool,
{
    let n = b.len() / d;
    let start = lower_bound_first(b, d, c0);
    let (mut right, mut left) = (start, start);
    while right < n || left > 0 {
        if right < n {
            if step(&b[right * d..(right + 1) * d]) {
                right += 1;
            } else {
                right = n;
            }
        }
        if left > 0 {
            if step(&b[(left - 1) * d..left * d]) {
                left -= 1;
            } else {
                left = 0;
            }
        }
    }
}

fn check(a: &DyadicSet, b: &DyadicSet) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    if a.depth() != b.depth() {
        return Err(Error::DepthMismatch { left: a.depth(), right: b.depth() });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("hausdorff operand"));
    }
    Ok(())
}

/// `sup_{p∈A} dist_∞(p, B)` in units of half a leaf cell.
pub fn directed_sup_half_cells(a: &DyadicSet, b: &DyadicSet) -> Result<u64> {
    check(a, b)?;
    let d = a.dim();
    let depth = a.depth();
    let bf = b.level_flat(depth);
    let halves = 1usize << d;
    let mut worst = 0u64;
    let mut best = vec![0u64; halves];
    for c in a.leaves() {
        if b.contains_cell(depth, c) {
            continue;
        }
        best.iter_mut().for_each(|v| *v = u64::MAX);
        sweep(bf, d, c[0], |j| {
            // a first-coordinate gap of g cells is at least 2g-1 half-cells
            let lb = (2 * j[0].abs_diff(c[0])).saturating_sub(1);
            if lb >= *best.iter().max().unwrap() {
                return false;
            }
            for (e, slot) in best.iter_mut().enumerate() {
                let mut m = 0;
                for k in 0..d {
                    let q = 2 * c[k] + ((e >> k) & 1) as u64;
                    m = m.max(gap(q, j[k]));
                    if m >= *slot {
                        break;
                    }
                }
                *slot = (*slot).min(m);
            }
            true
        });
        worst = worst.max(*best.iter().max().unwrap());
    }
    Ok(worst)
}

pub fn hausdorff_distance(a: &DyadicSet, b: &DyadicSet, metric: Metric) -> Result<f64> {
    check(a, b)?;
    let half = (-(a.depth() as f64) - 1.0).exp2();
    if metric == Metric::Sup || a.dim() == 1 {
        let h = directed_sup_half_cells(a, b)?.max(directed_sup_half_cells(b, a)?);
        return Ok(h as f64 * half);
    }
    let cell = (-(a.depth() as f64)).exp2();
    Ok(directed_euclid(a, b).max(directed_euclid(b, a)) * cell)
}

// Euclidean branch-and-bound, in units of one leaf cell.

struct Node {
    upper: f64,
    lo: Vec<f64>,
    side: f64,
    candidates: Vec<usize>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.upper == other.upper
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

fn point_to_cell_sq(p: &[f64], j: &[u64]) -> f64 {
    p.iter()
        .zip(j)
        .map(|(&x, &c)| {
            let (l, h) = (c as f64, c as f64 + 1.0);
            let g = if x < l { l - x } else if x > h { x - h } else { 0.0 };
            g * g
        })
        .sum()
}

fn box_to_cell_min_sq(lo: &[f64], side: f64, j: &[u64]) -> f64 {
    lo.iter()
        .zip(j)
        .map(|(&x, &c)| {
            let (l, h) = (c as f64, c as f64 + 1.0);
            let g = if x + side < l { l - x - side } else if x > h { x - h } else { 0.0 };
            g * g
        })
        .sum()
}

/// Farthest distance² from the box to cell `j`; convexity puts it at a vertex,
/// and the vertex choice separates by coordinate.
fn box_to_cell_max_sq(lo: &[f64], side: f64, j: &[u64]) -> f64 {
    lo.iter()
        .zip(j)
        .map(|(&x, &c)| {
            let (l, h) = (c as f64, c as f64 + 1.0);
            let gap = |v: f64| if v < l { l - v } else if v > h { v - h } else { 0.0 };
            let g = gap(x).max(gap(x + side));
            g * g
        })
        .sum()
}

fn directed_euclid(a: &DyadicSet, b: &DyadicSet) -> f64 {
    let d = a.dim();
    let depth = a.depth();
    let bf = b.level_flat(depth);
    let cell = |i: usize| &bf[i * d..(i + 1) * d];
    let tol = (-30f64).exp2();
    let mut lower = 0.0f64;
    let mut heap = BinaryHeap::new();
    for c in a.leaves() {
        if b.contains_cell(depth, c) {
            continue;
        }
        let lo: Vec<f64> = c.iter().map(|&v| v as f64).collect();
        let mut upper = f64::INFINITY;
        let mut seen = Vec::new();
        let start = lower_bound_first(bf, d, c[0]);
        let n = bf.len() / d;
        let visit = |i: usize, upper: &mut f64, seen: &mut Vec<usize>| {
            *upper = upper.min(box_to_cell_max_sq(&lo, 1.0, cell(i)));
            seen.push(i);
        };
        let (mut r, mut l) = (start, start);
        loop {
            let mut moved = false;
            if r < n {
                let g = bf[r * d].abs_diff(c[0]).saturating_sub(1) as f64;
                if g * g <= upper {
                    visit(r, &mut upper, &mut seen);
                    r += 1;
                    moved = true;
                } else {
                    r = n;
                }
            }
            if l > 0 {
                let g = bf[(l - 1) * d].abs_diff(c[0]).saturating_sub(1) as f64;
                if g * g <= upper {
                    visit(l - 1, &mut upper, &mut seen);
                    l -= 1;
                    moved = true;
                } else {
                    l = 0;
                }
            }
            if !moved {
                break;
            }
        }
        let candidates: Vec<usize> = seen
            .into_iter()
            .filter(|&i| box_to_cell_min_sq(&lo, 1.0, cell(i)) <= upper)
            .collect();
        let center: Vec<f64> = lo.iter().map(|x| x + 0.5).collect();
        let at_center = candidates
            .iter()
            .map(|&i| point_to_cell_sq(&center, cell(i)))
            .fold(f64::INFINITY, f64::min);
        lower = lower.max(at_center.sqrt());
        heap.push(Node { upper: upper.sqrt(), lo, side: 1.0, candidates });
    }
    while let Some(node) = heap.pop() {
        if node.upper <= lower + tol * (1.0 + lower) {
            return node.upper.max(lower);
        }
        let half = node.side / 2.0;
        for e in 0..1usize << d {
            let lo: Vec<f64> = node
                .lo
                .iter()
                .enumerate()
                .map(|(k, &x)| x + if (e >> k) & 1 == 1 { half } else { 0.0 })
                .collect();
            let upper_sq = node
                .candidates
                .iter()
                .map(|&i| box_to_cell_max_sq(&lo, half, cell(i)))
                .fold(f64::INFINITY, f64::min);
            let upper = upper_sq.sqrt();
            if upper <= lower {
                continue;
            }
            let candidates: Vec<usize> = node
                .candidates
                .iter()
                .copied()
                .filter(|&i| box_to_cell_min_sq(&lo, half, cell(i)) <= upper_sq)
                .collect();
            let center: Vec<f64> = lo.iter().map(|x| x + half / 2.0).collect();
            let at_center = candidates
                .iter()
                .map(|&i| point_to_cell_sq(&center, cell(i)))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            lower = lower.max(at_center);
            heap.push(Node { upper, lo, side: half, candidates });
        }
    }
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set1(depth: u32, cells: &[u64]) -> DyadicSet {
        DyadicSet::from_leaves(1, depth, cells.iter().map(|&c| [c])).unwrap()
    }

    #[test]
    fn interval_against_half() {
        let a = set1(1, &[0, 1]);
        let b = set1(1, &[0]);
        assert_eq!(hausdorff_distance(&a, &b, Metric::Sup).unwrap(), 0.5);
        assert_eq!(hausdorff_distance(&a, &a, Metric::Sup).unwrap(), 0.0);
    }

    #[test]
    fn gap_midpoint_is_found() {
        // B = [0,1/4] ∪ [3/4,1]; the point 1/2 is 1/4 away
        let a = set1(2, &[0, 1, 2, 3]);
        let b = set1(2, &[0, 3]);
        assert_eq!(hausdorff_distance(&a, &b, Metric::Sup).unwrap(), 0.25);
    }

    #[test]
    fn euclidean_diagonal() {
        let a = DyadicSet::from_leaves(2, 1, [[1u64, 1]]).unwrap();
        let b = DyadicSet::from_leaves(2, 1, [[0u64, 0]]).unwrap();
        let e = hausdorff_distance(&a, &b, Metric::Euclidean).unwrap();
        assert!((e - 0.5 * 2f64.sqrt()).abs() < 1e-8, "{e}");
        assert_eq!(hausdorff_distance(&a, &b, Metric::Sup).unwrap(), 0.5);
    }

    #[test]
    fn empty_operand_rejected() {
        let a = set1(2, &[0]);
        let e = DyadicSet::empty(1, 2).unwrap();
        assert!(matches!(hausdorff_distance(&a, &e, Metric::Sup), Err(Error::EmptySet(_))));
    }
}

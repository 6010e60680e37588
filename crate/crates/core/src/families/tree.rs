use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::schedule::{pow2_floor, KSeq, Variant};
use super::MetricSpaceView;
use crate::ratio::{format_rational, serde_rational, Rational};
use crate::realize::{TargetSpec, VarphiMap};
use crate::seq::Word;
use crate::{Error, Result};

/// What one extension step chose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Effective `φ(t)` after capping at `α_n`.
    #[serde(with = "serde_rational")]
    pub phi: Rational,
    /// `ℓ(t)` for the box variant, `ℓ_i(t)` per old ball for the packing variant.
    pub ells: Vec<u32>,
    /// `T` (box) or the `S_i` (packing).
    pub packings: Vec<Vec<usize>>,
}

/// `C(s) = ⋃ B(y_i(s), 2^{-k_n})` for one prefix `s`, with the history that
/// produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallTree {
    pub variant: Variant,
    pub prefix: Word,
    /// Centers at every depth `0..=len(prefix)`; the origin comes first in
    /// the box variant.
    pub centers: Vec<Vec<usize>>,
    pub steps: Vec<StepRecord>,
}

impl BallTree {
    pub fn root(view: &MetricSpaceView, variant: Variant) -> Self {
        BallTree {
            variant,
            prefix: Word::new(),
            centers: vec![vec![view.origin()]],
            steps: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    /// Centers at the deepest level: the finite trace of `C(x)`.
    pub fn trace(&self) -> &[usize] {
        self.centers.last().expect("root level")
    }

    pub fn m(&self) -> usize {
        self.trace().len()
    }

    /// `{prefix, levels, centers}` with real coordinates where available.
    pub fn to_json(&self, view: &MetricSpaceView, kseq: &KSeq) -> serde_json::Value {
        let coords = |ids: &[usize]| -> serde_json::Value {
            ids.iter()
                .map(|&i| match view.point(i) {
                    Some(p) => json!(p),
                    None => json!(i),
                })
                .collect()
        };
        let levels: Vec<serde_json::Value> = self
            .steps
            .iter()
            .enumerate()
            .map(|(n, st)| {
                json!({
                    "depth": n + 1,
                    "k": kseq.k(n + 1),
                    "phi": format_rational(&st.phi),
                    "ells": st.ells,
                    "m": self.centers[n + 1].len(),
                    "packings": st.packings.iter().map(|p| coords(p)).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "prefix": self.prefix.to_string(),
            "variant": self.variant,
            "levels": levels,
            "centers": coords(self.trace()),
        })
    }
}

fn check_step(kseq: &KSeq, tree: &BallTree, phi: Rational) -> Result<usize> {
    let n = tree.depth();
    if tree.variant != kseq.variant {
        return Err(Error::invalid("tree and schedule belong to different variants"));
    }
    if n >= kseq.levels() {
        return Err(Error::ResolutionExhausted {
            level: n,
            detail: format!("the schedule covers {} steps", kseq.levels()),
        });
    }
    if phi < Rational::from_integer(0) || phi > kseq.alpha(n) {
        return Err(Error::InvariantViolation(format!(
            "phi = {phi} outside [0, alpha_{n} = {}]",
            kseq.alpha(n)
        )));
    }
    Ok(n)
}

/// Least `ℓ` in the admissible range whose canonical packing of
/// `B(center, 2^{-g(k_n)})` has at least `⌊2^{φℓ}⌋` points; returns `ℓ` and
/// the first `⌊2^{φℓ}⌋` of them.
fn select_packing(
    view: &MetricSpaceView,
    kseq: &KSeq,
    n: usize,
    center: usize,
    phi: Rational,
) -> Result<(u32, Vec<usize>)> {
    let (lo, hi) = kseq.ell_range(n);
    for ell in lo.max(1)..=hi {
        let need = pow2_floor(phi, ell)? as usize;
        let packing = view.ball_packing(center, lo as i32, ell as i32, Some(need));
        // ⌊2^{φℓ}⌋ ≤ P_ℓ is the same as P_ℓ ≥ 2^{φℓ} for integer P_ℓ
        if packing.len() >= need {
            return Ok((ell, packing));
        }
    }
    Err(Error::ResolutionExhausted {
        level: n,
        detail: format!("no packing level in [{lo}, {hi}] carries 2^({phi}·l) points around point {center}"),
    })
}

/// Box-variant step `s ↦ s⌢c`.
pub fn extend_box(view: &MetricSpaceView, kseq: &KSeq, tree: &BallTree, c: bool, phi: Rational) -> Result<BallTree> {
    let n = check_step(kseq, tree, phi)?;
    let y0 = view.origin();
    let (ell, s) = select_packing(view, kseq, n, y0, phi)?;
    let half = ell as i32 + 1;
    // swap y0 into the packing
    let t: Vec<usize> = if s.contains(&y0) {
        s.clone()
    } else if let Some(pos) = s.iter().position(|&y| view.within(y, y0, half)) {
        let mut t = s.clone();
        t[pos] = y0;
        t
    } else {
        let mut t = s.clone();
        *t.last_mut().expect("nonempty packing") = y0;
        t
    };
    if !view.is_packing(&t, half) {
        return Err(Error::InvariantViolation("swapped packing lost its separation".into()));
    }
    let mut centers = tree.trace().to_vec();
    centers.extend(t.iter().copied().filter(|&y| y != y0));
    let mut next = tree.clone();
    next.prefix.push(c);
    next.centers.push(centers);
    next.steps.push(StepRecord { phi, ells: vec![ell], packings: vec![t] });
    Ok(next)
}

/// Packing-variant step `s ↦ s⌢c`.
pub fn extend_packing(view: &MetricSpaceView, kseq: &KSeq, tree: &BallTree, c: bool, phi: Rational) -> Result<BallTree> {
    let n = check_step(kseq, tree, phi)?;
    let picks = tree
        .trace()
        .par_iter()
        .map(|&y| select_packing(view, kseq, n, y, phi))
        .collect::<Result<Vec<_>>>()?;
    let ells = picks.iter().map(|p| p.0).collect();
    let packings: Vec<Vec<usize>> = picks.into_iter().map(|p| p.1).collect();
    let centers = packings.iter().flatten().copied().collect();
    let mut next = tree.clone();
    next.prefix.push(c);
    next.centers.push(centers);
    next.steps.push(StepRecord { phi, ells, packings });
    Ok(next)
}

pub fn extend(view: &MetricSpaceView, kseq: &KSeq, tree: &BallTree, c: bool, phi: Rational) -> Result<BallTree> {
    match tree.variant {
        Variant::Box => extend_box(view, kseq, tree, c, phi),
        Variant::Packing => extend_packing(view, kseq, tree, c, phi),
    }
}

/// `min(φ(t), α_n)` for `t` of length `n + 1`.
fn capped_phi(varphi: &VarphiMap, kseq: &KSeq, t: &Word) -> Result<Rational> {
    let v = varphi.value(t)?;
    if v < Rational::from_integer(0) {
        return Err(Error::invalid(format!("target value {v} is negative")));
    }
    Ok(v.min(kseq.alpha(t.len() - 1)))
}

/// The construction along `x↾levels`.
pub fn family_member(
    x: &Word,
    spec: &TargetSpec,
    view: &MetricSpaceView,
    kseq: &KSeq,
    levels: usize,
) -> Result<BallTree> {
    if levels > x.len() {
        return Err(Error::invalid(format!("word of length {} is shorter than {levels}", x.len())));
    }
    let varphi = VarphiMap::new(spec);
    let mut tree = BallTree::root(view, kseq.variant);
    for n in 0..levels {
        let t = x.prefix(n + 1);
        let phi = capped_phi(&varphi, kseq, &t)?;
        tree = extend(view, kseq, &tree, x.bit(n), phi)?;
    }
    Ok(tree)
}

/// Every member `C(s)` for `s ∈ 2^depth`, in lexicographic order, sharing
/// the work on common prefixes.
pub fn family_members(spec: &TargetSpec, view: &MetricSpaceView, kseq: &KSeq, depth: usize) -> Result<Vec<BallTree>> {
    let varphi = VarphiMap::new(spec);
    let mut layer = vec![BallTree::root(view, kseq.variant)];
    for _ in 0..depth {
        layer = layer
            .par_iter()
            .map(|tree| {
                [false, true]
                    .iter()
                    .map(|&c| {
                        let t = tree.prefix.child(c);
                        let phi = capped_phi(&varphi, kseq, &t)?;
                        extend(view, kseq, tree, c, phi)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
    }
    Ok(layer)
}

/// `C(s⌢c) ⊆ C(s)` as ball unions: every new ball sits inside an old one,
/// certified by `d(y', y) + 2^{-k_{n+1}} ≤ 2^{-k_n}`.
pub fn is_nested(view: &MetricSpaceView, kseq: &KSeq, tree: &BallTree) -> bool {
    (0..tree.depth()).all(|n| {
        let (k, k1) = (kseq.k(n), kseq.k(n + 1));
        if k1 <= k {
            return false;
        }
        // d ≤ 2^{-k} − 2^{-k1} is implied by d ≤ 2^{-k-1} when k1 > k
        tree.centers[n + 1]
            .iter()
            .all(|&y| tree.centers[n].iter().any(|&z| view.within(y, z, k as i32 + 1) || fits(view, y, z, k, k1)))
    })
}

fn fits(view: &MetricSpaceView, y: usize, z: usize, k: u32, k1: u32) -> bool {
    view.dist(y, z) + (-(k1 as f64)).exp2() <= (-(k as f64)).exp2()
}

/// Same-level centers are pairwise more than `2^{2−k_n}` apart.
pub fn is_separated(view: &MetricSpaceView, kseq: &KSeq, tree: &BallTree) -> bool {
    tree.centers
        .iter()
        .enumerate()
        .all(|(n, cs)| view.is_packing(cs, kseq.k(n) as i32 - 2))
}

/// Whether every stored packing has exactly `⌊2^{φℓ}⌋` points.
pub fn has_exact_cardinalities(tree: &BallTree) -> Result<bool> {
    for st in &tree.steps {
        for (ell, p) in st.ells.iter().zip(&st.packings) {
            if p.len() as u64 != pow2_floor(st.phi, *ell)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `d_H(C(x), C(y)) / 2^{1−k_n}` seen.
    pub worst_ratio: f64,
}

/// Checks `d_H(C(x), C(y)) ≤ 2^{1−k_n}` for every pair, `n` the length of
/// the common prefix.
pub fn continuity_check(view: &MetricSpaceView, kseq: &KSeq, members: &[BallTree]) -> ContinuityReport {
    let pairs: Vec<(usize, usize)> = (0..members.len())
        .flat_map(|a| (a + 1..members.len()).map(move |b| (a, b)))
        .collect();
    let results: Vec<(bool, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (x, y) = (&members[a], &members[b]);
            let n = x.prefix.first_disagreement(&y.prefix).unwrap_or(x.depth().min(y.depth()));
            let k = kseq.k(n) as i32;
            let ok = view.hausdorff_within(x.trace(), y.trace(), k - 1);
            let ratio = view.hausdorff(x.trace(), y.trace()) / (1.0 - k as f64).exp2();
            (ok, ratio)
        })
        .collect();
    ContinuityReport {
        pairs: pairs.len(),
        violations: results.iter().filter(|r| !r.0).count(),
        worst_ratio: results.iter().map(|r| r.1).fold(0.0, f64::max),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub depth: usize,
    pub k: u32,
    #[serde(with = "serde_rational")]
    pub phi: Rational,
    pub ells: Vec<u32>,
    pub required: Vec<u64>,
    pub stored: Vec<usize>,
    pub separated: bool,
    /// `m(x↾n)`, the center count before the step.
    pub m: usize,
    /// Trace points outside `B(y0, 2^{-g(k_n)})` (box variant).
    pub outside: usize,
    /// An upper bound for `N_ℓ(trace)`: `outside` plus a greedy cover of the ball part.
    pub cover_bound: usize,
    /// `N_ℓ ≤ ℓ + 2^{φℓ}`; only guaranteed when `g ≥ P_n(K)`.
    pub paper_chain: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub variant: Variant,
    pub steps: Vec<StepReport>,
    pub checks: Vec<(String, bool)>,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

/// Re-verifies a construction from its stored data.
pub fn family_dim_report(view: &MetricSpaceView, kseq: &KSeq, tree: &BallTree) -> Result<FamilyReport> {
    let trace = tree.trace();
    let y0 = view.origin();
    let mut steps = Vec::new();
    let mut sizes_ok = true;
    let mut sep_ok = true;
    let mut outside_ok = true;
    let mut chain_ok = true;
    let mut rich_ok = true;
    for (n, st) in tree.steps.iter().enumerate() {
        let required = st
            .ells
            .iter()
            .map(|&l| pow2_floor(st.phi, l))
            .collect::<Result<Vec<_>>>()?;
        let stored: Vec<usize> = st.packings.iter().map(Vec::len).collect();
        sizes_ok &= required.iter().zip(&stored).all(|(r, s)| *r == *s as u64);
        let separated = st.ells.iter().zip(&st.packings).all(|(&l, p)| {
            let sep = match tree.variant {
                Variant::Box => l as i32 + 1,
                Variant::Packing => l as i32,
            };
            view.is_packing(p, sep)
        });
        sep_ok &= separated;
        let m = tree.centers[n].len();
        let g = kseq.g(n) as i32;
        let ell = *st.ells.iter().min().unwrap_or(&0);
        let (outside, cover_bound) = match tree.variant {
            Variant::Box => {
                let (inner, outer): (Vec<usize>, Vec<usize>) = trace.iter().partition(|&&p| view.within(p, y0, g));
                let cover = view.greedy_packing(inner.iter().copied(), ell as i32, None).len();
                outside_ok &= outer.len() < m.max(1);
                (outer.len(), outer.len() + cover)
            }
            Variant::Packing => {
                // every S_i point has a trace point within 2^{-k_{n+1}}, and
                // those representatives form a 2^{-ℓ_i-1}-packing
                for (&l, p) in st.ells.iter().zip(&st.packings) {
                    let k1 = kseq.k(n + 1) as i32;
                    let reps: Option<Vec<usize>> = p
                        .iter()
                        .map(|&s| trace.iter().copied().find(|&q| view.within(q, s, k1)))
                        .collect();
                    rich_ok &= reps.is_some_and(|r| view.is_packing(&r, l as i32 + 1));
                }
                (0, view.greedy_packing(trace.iter().copied(), ell as i32, None).len())
            }
        };
        let bound = ell as f64 + (crate::ratio::to_f64(&st.phi) * ell as f64).exp2();
        let paper_chain = cover_bound as f64 <= bound;
        if tree.variant == Variant::Box {
            chain_ok &= cover_bound <= m + stored[0];
        }
        steps.push(StepReport {
            depth: n + 1,
            k: kseq.k(n + 1),
            phi: st.phi,
            ells: st.ells.clone(),
            required,
            stored,
            separated,
            m,
            outside,
            cover_bound,
            paper_chain,
        });
    }
    let mut checks = vec![
        ("packing sizes equal floor(2^(phi l))".to_string(), sizes_ok),
        ("stored packings keep their separation".to_string(), sep_ok),
        ("balls are nested".to_string(), is_nested(view, kseq, tree)),
        ("centers are separated by more than 2^(2-k_n)".to_string(), is_separated(view, kseq, tree)),
    ];
    match tree.variant {
        Variant::Box => {
            let anchored = tree.centers.iter().all(|c| c.first() == Some(&y0));
            checks.push(("origin is a center at every level".to_string(), anchored));
            checks.push(("only old centers lie outside the origin ball".to_string(), outside_ok));
            checks.push(("N_l <= m + #T".to_string(), chain_ok));
        }
        Variant::Packing => {
            checks.push(("every stored ball keeps a packing of the mandated size".to_string(), rich_ok));
        }
    }
    Ok(FamilyReport { variant: tree.variant, steps, checks })
}

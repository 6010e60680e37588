use crate::dyadic::{DigitProduct, DyadicSet};
use crate::seq::Word;
use crate::{Error, Result};

/// Produces a set at the requested depth.
pub type Generator<'a> = &'a (dyn Fn(u32) -> Result<DyadicSet> + Sync);

/// Places copy `j = 1, …, depth−1` as `2^{-j} K + 2^{-j}(1,…,1)` inside
/// `[2^{-j}, 2^{1-j}]^d`, cycling through the generators, and adds the
/// level-`depth` cube at the origin for the accumulation point `0`.
///
/// Copy `j` is generated at depth `depth − j`, so `zoom(G, j, −(1,…,1))`
/// returns it unchanged.
pub fn assemble_gallery(generators: &[Generator<'_>], depth: u32) -> Result<DyadicSet> {
    if generators.is_empty() {
        return Err(Error::invalid("gallery needs at least one generator"));
    }
    let slots = depth.saturating_sub(1) as usize;
    if generators.len() > slots {
        return Err(Error::PlacementOverflow {
            generators: generators.len(),
            slots,
            depth,
        });
    }
    let mut d = None;
    let mut leaves: Vec<Vec<u64>> = Vec::new();
    for j in 1..depth {
        let copy_depth = depth - j;
        let k = generators[(j as usize - 1) % generators.len()](copy_depth)?;
        if k.depth() != copy_depth {
            return Err(Error::DepthMismatch { left: k.depth(), right: copy_depth });
        }
        match d {
            None => d = Some(k.dim()),
            Some(d0) if d0 != k.dim() => {
                return Err(Error::DimensionMismatch { left: d0, right: k.dim() });
            }
            _ => {}
        }
        let offset = 1u64 << copy_depth;
        leaves.extend(k.leaves().map(|c| c.iter().map(|x| x + offset).collect()));
    }
    let d = d.expect("at least one placement");
    leaves.push(vec![0; d]);
    DyadicSet::from_leaves(d, depth, leaves)
}

/// A generator for `K(w)^d` cut at the requested depth.
pub fn kx_generator(w: Word, d: usize) -> impl Fn(u32) -> Result<DyadicSet> + Sync {
    move |depth| {
        if depth as usize > w.len() {
            return Err(Error::LevelExceedsDepth { level: depth, depth: w.len() as u32 });
        }
        DigitProduct::kx_power(&w.prefix(depth as usize), d)?.to_dyadic_set(1 << 22)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{zoom, Dyadic};

    #[test]
    fn copies_are_recovered_by_zoom() {
        let full = |depth: u32| DyadicSet::full(1, depth);
        let kx = kx_generator("1011011101".parse().unwrap(), 1);
        let gens: [Generator<'_>; 2] = [&full, &kx];
        let g = assemble_gallery(&gens, 8).unwrap();
        assert!(g.contains_cell(8, &[0]));
        for j in 1..8u32 {
            let view = zoom(&g, j, &[Dyadic::integer(-1)]).unwrap();
            let expected = gens[(j as usize - 1) % 2](8 - j).unwrap();
            assert_eq!(view.set, expected, "placement {j}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let full = |depth: u32| DyadicSet::full(1, depth);
        let gens: [Generator<'_>; 3] = [&full, &full, &full];
        assert!(matches!(assemble_gallery(&gens, 3), Err(Error::PlacementOverflow { .. })));
    }
}

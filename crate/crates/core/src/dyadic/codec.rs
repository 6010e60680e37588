//! Bit-packed binary form: `DYS1`, `d: u8`, `depth: u32 LE`, a nonempty flag
//! byte, then for every live cube of levels `0..depth` (sorted within each
//! level) a `2^d`-bit child bitmap, least significant bit first.

use super::set::search;
use super::{CubeIdx, DyadicSet, MAX_DIM, MAX_EXPLICIT_DEPTH};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"DYS1";

fn bitmap_bytes(d: usize) -> usize {
    (1usize << d).div_ceil(8)
}

pub fn encode_binary(set: &DyadicSet) -> Vec<u8> {
    let d = set.dim();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(d as u8);
    out.extend_from_slice(&set.depth().to_le_bytes());
    out.push(u8::from(!set.is_empty()));
    let width = bitmap_bytes(d);
    for level in 0..set.depth() {
        let below = set.level_flat(level + 1);
        for cell in set.cells(level) {
            let cube = CubeIdx::new(level, cell);
            let mut map = vec![0u8; width];
            for idx in 0..1usize << d {
                let child = cube.child(idx);
                if search(below, d, &child.coords).is_ok() {
                    map[idx / 8] |= 1 << (idx % 8);
                }
            }
            out.extend_from_slice(&map);
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<DyadicSet> {
    let err = |m: &str| Error::Decode(m.to_string());
    if bytes.len() < 10 || &bytes[..4] != MAGIC {
        return Err(err("missing DYS1 header"));
    }
    let d = bytes[4] as usize;
    let depth = u32::from_le_bytes(bytes[5..9].try_into().expect("four bytes"));
    if d == 0 || d > MAX_DIM || depth > MAX_EXPLICIT_DEPTH {
        return Err(err("unsupported dimension or depth"));
    }
    let nonempty = match bytes[9] {
        0 => false,
        1 => true,
        _ => return Err(err("bad flag byte")),
    };
    if !nonempty {
        return if bytes.len() == 10 {
            DyadicSet::empty(d, depth)
        } else {
            Err(err("trailing bytes after empty set"))
        };
    }
    let width = bitmap_bytes(d);
    let mut pos = 10;
    let mut frontier: Vec<CubeIdx> = vec![CubeIdx::root(d)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for cube in &frontier {
            let map = bytes
                .get(pos..pos + width)
                .ok_or_else(|| err("truncated bitmap stream"))?;
            pos += width;
            if map.iter().all(|&b| b == 0) {
                return Err(err("live cube without children"));
            }
            for idx in 0..1usize << d {
                if map[idx / 8] >> (idx % 8) & 1 == 1 {
                    next.push(cube.child(idx));
                }
            }
            if d < 3 && map[0] >> (1 << d) != 0 {
                return Err(err("padding bits set"));
            }
        }
        next.sort_unstable_by(|a, b| a.coords.cmp(&b.coords));
        frontier = next;
    }
    if pos != bytes.len() {
        return Err(err("trailing bytes"));
    }
    let flat: Vec<u64> = frontier.iter().flat_map(|c| c.coords.iter().copied()).collect();
    Ok(DyadicSet::from_sorted_flat(d, depth, flat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = DyadicSet::from_leaves(2, 3, [[0u64, 7], [5, 2], [5, 3]]).unwrap();
        let bytes = encode_binary(&s);
        assert_eq!(&bytes[..4], b"DYS1");
        assert_eq!(decode_binary(&bytes).unwrap(), s);
        let e = DyadicSet::empty(1, 4).unwrap();
        assert_eq!(decode_binary(&encode_binary(&e)).unwrap(), e);
    }

    #[test]
    fn corrupt_input_rejected() {
        let s = DyadicSet::full(1, 2).unwrap();
        let mut bytes = encode_binary(&s);
        bytes.pop();
        assert!(decode_binary(&bytes).is_err());
        assert!(decode_binary(b"nope").is_err());
    }
}

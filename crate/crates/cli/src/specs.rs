//! Text grammars for sequences, sets, targets and nets.
//!
//! ```text
//! seq    := beatty:p/q | periodic:<bits> | word:<bits> | random
//! set    := full:<d> | <seq>[^d] | file:<path>
//! target := set:q,q,… | intervals:q-q,q-q,… | oracle:reciprocals
//!         | oracle:two_level:q:q | <json>
//! net    := uniform:<d>:<side_bits> | zoom:<d>:<per_axis>:<spread>
//!         | kx:<seq>:<len>:<d> | csv:<path> | matrix:<path>
//! ```

use std::fs;

use microsets::dyadic::{decode_binary, left_endpoints, CubeSet, DigitProduct, DyadicSet, Metric};
use microsets::families::MetricSpaceView;
use microsets::ratio::parse_rational;
use microsets::realize::TargetSpec;
use microsets::seq::{beatty_balanced, SeqProgram, Word};
use microsets::{Error, Rational, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An infinite or finite binary sequence.
#[derive(Clone, Debug)]
pub enum SeqSource {
    Program(SeqProgram),
    Finite(Word),
    Random(u64),
}

impl SeqSource {
    pub fn prefix(&self, n: usize) -> Result<Word> {
        match self {
            SeqSource::Program(p) => Ok(p.prefix(n)),
            SeqSource::Finite(w) if w.len() >= n => Ok(w.prefix(n)),
            SeqSource::Finite(w) => Err(Error::InvalidArgument(format!(
                "word has {} bits but {n} are needed",
                w.len()
            ))),
            SeqSource::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(Word::from_bits((0..n).map(|_| rng.gen()).collect()))
            }
        }
    }
}

fn bits(text: &str) -> Result<Word> {
    if text.is_empty() {
        return Err(Error::Parse("empty bit string".into()));
    }
    text.parse()
}

/// Parses a sequence spec; `random` draws from `seed`.
pub fn parse_seq(text: &str, seed: u64) -> Result<SeqSource> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    match kind {
        "beatty" => Ok(SeqSource::Program(beatty_balanced(parse_rational(rest)?)?)),
        "periodic" => Ok(SeqSource::Program(SeqProgram::periodic(bits(rest)?))),
        "word" => Ok(SeqSource::Finite(bits(rest)?)),
        "random" if rest.is_empty() => Ok(SeqSource::Random(seed)),
        _ => Err(Error::Parse(format!("unknown sequence spec {text:?}"))),
    }
}

/// Parses a set spec at the given depth.
pub fn parse_set(text: &str, depth: u32, seed: u64) -> Result<Box<dyn CubeSet>> {
    if let Some(d) = text.strip_prefix("full:") {
        let d: usize = d.parse().map_err(|_| Error::Parse(format!("bad dimension in {text:?}")))?;
        return Ok(Box::new(DigitProduct::full(d, depth)?));
    }
    if let Some(path) = text.strip_prefix("file:") {
        let bytes = fs::read(path).map_err(|e| Error::InvalidArgument(format!("{path}: {e}")))?;
        let set = decode_binary(&bytes)?;
        if set.depth() < depth {
            return Err(Error::LevelExceedsDepth { level: depth, depth: set.depth() });
        }
        return Ok(Box::new(set));
    }
    let (seq, d) = match text.rsplit_once('^') {
        Some((s, d)) => (s, d.parse().map_err(|_| Error::Parse(format!("bad power in {text:?}")))?),
        None => (text, 1usize),
    };
    let x = parse_seq(seq, seed)?.prefix(depth as usize)?;
    Ok(Box::new(DigitProduct::kx_power(&x, d)?))
}

/// Rasterizes a set spec, refusing more than `max_cells` leaves.
pub fn parse_set_cells(text: &str, depth: u32, seed: u64, max_cells: usize) -> Result<DyadicSet> {
    if let Some(path) = text.strip_prefix("file:") {
        let bytes = fs::read(path).map_err(|e| Error::InvalidArgument(format!("{path}: {e}")))?;
        return decode_binary(&bytes);
    }
    let set = parse_set(text, depth, seed)?;
    DyadicSet::rasterize(set.as_ref(), max_cells)
}

fn rationals(list: &str) -> Result<Vec<Rational>> {
    list.split(',').map(parse_rational).collect()
}

pub fn parse_rational_list(list: &str) -> Result<Vec<Rational>> {
    rationals(list)
}

/// Parses a target-set spec.
pub fn parse_target(text: &str) -> Result<TargetSpec> {
    let t = text.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| Error::Parse(e.to_string()));
    }
    let (kind, rest) = t.split_once(':').unwrap_or((t, ""));
    match kind {
        "set" => TargetSpec::finite_set(rationals(rest)?),
        "intervals" => {
            let ivs = rest
                .split(',')
                .map(|iv| {
                    let (lo, hi) = iv
                        .split_once('-')
                        .ok_or_else(|| Error::Parse(format!("interval {iv:?} needs lo-hi")))?;
                    Ok((parse_rational(lo)?, parse_rational(hi)?))
                })
                .collect::<Result<Vec<_>>>()?;
            TargetSpec::interval_union(ivs)
        }
        "oracle" => {
            let mut parts = rest.split(':');
            match (parts.next(), parts.next(), parts.next()) {
                (Some("reciprocals"), None, _) => TargetSpec::builtin("reciprocals", &serde_json::Value::Null),
                (Some("two_level"), Some(lo), Some(hi)) => {
                    TargetSpec::builtin("two_level", &serde_json::json!({ "lo": lo, "hi": hi }))
                }
                _ => Err(Error::Parse(format!("unknown oracle spec {text:?}"))),
            }
        }
        _ => Err(Error::Parse(format!("unknown target spec {text:?}"))),
    }
}

pub fn parse_metric(text: &str) -> Result<Metric> {
    match text {
        "sup" => Ok(Metric::Sup),
        "euclidean" => Ok(Metric::Euclidean),
        _ => Err(Error::Parse(format!("unknown metric {text:?}"))),
    }
}

fn int<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.parse().map_err(|_| Error::Parse(format!("bad {what} {text:?}")))
}

/// Parses a net spec. File nets use point 0 as the origin.
pub fn parse_net(text: &str, metric: Metric, seed: u64) -> Result<MetricSpaceView> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["uniform", d, bits] => MetricSpaceView::uniform_grid(int(d, "dimension")?, int(bits, "side bits")?, metric),
        ["zoom", d, per_axis, spread] => {
            let d: usize = int(d, "dimension")?;
            MetricSpaceView::zoom_grid(&vec![1; d], 1, int(per_axis, "axis size")?, int(spread, "spread")?, metric)
        }
        ["kx", seq @ .., len, d] if !seq.is_empty() => {
            let len: usize = int(len, "length")?;
            let d: usize = int(d, "dimension")?;
            let x = parse_seq(&seq.join(":"), seed)?.prefix(len)?;
            let axis: Vec<i64> = left_endpoints(&x)?.into_iter().map(|v| v as i64).collect();
            let o = axis[axis.len() / 2];
            MetricSpaceView::product_grid(vec![axis; d], len as u32, metric, &vec![o; d])
        }
        ["csv", path @ ..] if !path.is_empty() => {
            let text = read(&path.join(":"))?;
            MetricSpaceView::from_csv(&text, metric, 0, 0.0)
        }
        ["matrix", path @ ..] if !path.is_empty() => {
            let text = read(&path.join(":"))?;
            MetricSpaceView::from_matrix_text(&text, 0, 0.0)
        }
        _ => Err(Error::Parse(format!("unknown net spec {text:?}"))),
    }
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{path}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences() {
        let w = parse_seq("beatty:1/3", 0).unwrap().prefix(6).unwrap();
        assert_eq!(w.sigma(), 2);
        assert_eq!(parse_seq("periodic:01", 0).unwrap().prefix(4).unwrap().to_string(), "0101");
        assert!(parse_seq("word:01", 0).unwrap().prefix(3).is_err());
        assert_eq!(
            parse_seq("random", 5).unwrap().prefix(30).unwrap(),
            parse_seq("random", 5).unwrap().prefix(30).unwrap()
        );
        assert!(parse_seq("beaty:1/3", 0).is_err());
    }

    #[test]
    fn sets() {
        let k = parse_set("beatty:1/2^2", 8, 0).unwrap();
        assert_eq!(k.dim(), 2);
        assert_eq!(k.count_at(8), 256u32.into());
        assert_eq!(parse_set("full:1", 5, 0).unwrap().count_at(5), 32u32.into());
    }

    #[test]
    fn targets() {
        let t = parse_target("intervals:3/10-7/10").unwrap();
        assert_eq!(t.bounds(), (Rational::new(3, 10), Rational::new(7, 10)));
        assert_eq!(parse_target("set:1/2,0.25").unwrap().bounds().0, Rational::new(1, 4));
        assert_eq!(parse_target("oracle:two_level:1/4:3/4").unwrap().bounds().1, Rational::new(3, 4));
        assert!(parse_target("oracle:nope").is_err());
    }
}

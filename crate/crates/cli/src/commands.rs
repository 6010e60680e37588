//! Running one experiment: validate, compute, render the artifact.

use std::fmt::Write as _;
use std::fs;

use microsets::dims::{ball_covering_counts, chain_check, log2_big, packing_counts, Grade, PointCloud};
use microsets::dyadic::{encode_binary, zoom, CubeIdx, Dyadic};
use microsets::families::{
    continuity_check, family_dim_report, family_member, family_members, level_schedule, LevelFunction, Variant,
};
use microsets::percolation::{hawkes_experiment, sample_on, PercField, RetentionSchedule};
use microsets::ratio::{format_rational, parse_rational};
use microsets::realize::{realized_density_check, KRule, PsiBuilder};
use microsets::Error;
use serde_json::{json, Value};

use crate::config::*;
use crate::specs::*;
use crate::Failure;

/// A rendered artifact, its one-line summary, and whether every checked
/// invariant held.
#[derive(Debug)]
pub struct Outcome {
    pub artifact: String,
    pub summary: String,
    pub violations: Vec<String>,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seed from the config, else `MICROSETS_SEED`, else 0.
pub fn resolve_seed(config: &ExperimentConfig) -> Result<u64, Failure> {
    if let Some(s) = config.seed {
        return Ok(s);
    }
    match std::env::var("MICROSETS_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Validation(format!("MICROSETS_SEED={v:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}

fn header_lines(config: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("microsets {VERSION} {}", config.command.name()),
        format!("config {}", serde_json::to_string(config).expect("config serializes")),
    ]
}

fn csv(config: &ExperimentConfig, columns: &str, rows: &[String]) -> String {
    let mut out = String::new();
    for line in header_lines(config) {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{columns}");
    for r in rows {
        let _ = writeln!(out, "{r}");
    }
    out
}

fn document(config: &ExperimentConfig, result: Value) -> String {
    let doc = json!({
        "microsets": VERSION,
        "config": config,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    s
}

fn depth_ok(depth: u32, limits: &Limits) -> Result<(), Failure> {
    if depth > limits.max_depth {
        return Err(Failure::Resource(format!("depth {depth} exceeds max_depth {}", limits.max_depth)));
    }
    Ok(())
}

fn trials_ok(trials: u64, limits: &Limits) -> Result<(), Failure> {
    if trials > limits.max_trials {
        return Err(Failure::Resource(format!("{trials} trials exceed max_trials {}", limits.max_trials)));
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Runs `config` with every default resolved; the recorded config carries
/// the seed actually used and no output path.
pub fn run(config: &ExperimentConfig) -> Result<Outcome, Failure> {
    let mut config = config.clone();
    let seed = resolve_seed(&config)?;
    config.seed = Some(seed);
    // where the artifact goes does not change it
    config.out = None;
    let limits = config.limits.clone();
    match &config.command {
        Command::Dims(a) => dims(&config, a, seed, &limits),
        Command::Realize(a) => realize(&config, a, seed, &limits),
        Command::Zoom(a) => zoom_cmd(&config, a, seed, &limits),
        Command::Percolate(a) => percolate(&config, a, seed, &limits),
        Command::Hawkes(a) => hawkes(&config, a, seed, &limits),
        Command::Family(a) => family(&config, a, seed, &limits),
    }
}

fn dims(config: &ExperimentConfig, a: &DimsArgs, seed: u64, limits: &Limits) -> Result<Outcome, Failure> {
    depth_ok(a.depth, limits)?;
    if let Some(path) = &a.points {
        let text = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        let points = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate {v:?}"))))
                    .collect::<Result<Vec<f64>, Error>>()
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let cloud = PointCloud::new(points, parse_metric(&a.metric)?)?;
        let levels: Vec<u32> = (0..=a.depth).collect();
        let covers = ball_covering_counts(&cloud, &levels)?;
        let packs = packing_counts(&cloud, &levels)?;
        let chain = chain_check(&covers, &packs)?;
        let grade = if covers.grade == Grade::Exact { "exact" } else { "greedy" };
        let rows: Vec<String> = levels
            .iter()
            .map(|&n| format!("{n},{},{},{grade}", covers.get(n).unwrap(), packs.get(n).unwrap()))
            .collect();
        let mut violations = Vec::new();
        if !chain && covers.grade == Grade::Exact {
            violations.push("N_n <= P_n <= N_{n+1} fails".to_string());
        }
        return Ok(Outcome {
            artifact: csv(config, "level,covering,packing,grade", &rows),
            summary: format!("dims: {} levels of {grade} counts, chain {}", levels.len(), if chain { "holds" } else { "fails" }),
            violations,
        });
    }
    let word = a
        .word
        .as_deref()
        .ok_or_else(|| Failure::Validation("dims needs --word or --points".into()))?;
    let set = parse_set(&format!("{word}^{}", a.d), a.depth, seed)?;
    let x = parse_seq(word, seed)?.prefix(a.depth as usize)?;
    let mut rows = Vec::new();
    let mut last = 0.0;
    for n in 1..=a.depth {
        let log2 = log2_big(&set.count_at(n));
        last = log2 / n as f64;
        rows.push(format!("{n},{},{},{last:.12}", x.prefix(n as usize).sigma(), log2));
    }
    Ok(Outcome {
        artifact: csv(config, "n,sigma,log2_count,slope", &rows),
        summary: format!("dims: depth {}, slope {last:.6}", a.depth),
        violations: Vec::new(),
    })
}

fn realize(config: &ExperimentConfig, a: &RealizeArgs, seed: u64, limits: &Limits) -> Result<Outcome, Failure> {
    depth_ok(a.blocks as u32, limits)?;
    let spec = parse_target(&a.spec)?;
    let rule = match a.rule.as_str() {
        "nearest" => KRule::Nearest,
        "minimal" => KRule::Minimal,
        other => return Err(Failure::Validation(format!("unknown k rule {other:?}"))),
    };
    let x = parse_seq(&a.word, seed)?.prefix(a.blocks)?;
    let psi = PsiBuilder::new(&spec, a.d as u32, rule)?.build(&x, a.blocks)?;
    let expected = *psi.targets.last().ok_or_else(|| Failure::Validation("no blocks".into()))?;
    let report = realized_density_check(&psi, expected)?;
    let mut violations = Vec::new();
    if report.max_bound_ratio > 1.0 {
        violations.push(format!("a block density misses its bound by ratio {}", report.max_bound_ratio));
    }
    let summary = format!(
        "realize: {} blocks, {} bits, density {} vs phi {}",
        a.blocks,
        psi.word.len(),
        format_rational(&report.cumulative_density),
        format_rational(&expected)
    );
    let result = json!({ "x": x, "psi": psi, "report": report });
    Ok(Outcome { artifact: document(config, result), summary, violations })
}

fn zoom_cmd(config: &ExperimentConfig, a: &ZoomArgs, seed: u64, limits: &Limits) -> Result<Outcome, Failure> {
    depth_ok(a.depth, limits)?;
    let set = parse_set_cells(&a.k, a.depth, seed, limits.max_cells)?;
    let u = a
        .u
        .split(',')
        .map(|t| Dyadic::from_rational(&parse_rational(t)?))
        .collect::<Result<Vec<_>, Error>>()?;
    let view = zoom(&set, a.m, &u)?;
    if let Some(path) = &a.bin {
        fs::write(path, encode_binary(&view.set)).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    }
    let summary = format!(
        "zoom: {} cells at depth {}, meets open cube: {}",
        view.set.leaf_count(),
        view.set.depth(),
        view.meets_open_cube
    );
    Ok(Outcome {
        artifact: document(config, serde_json::to_value(&view).expect("json")),
        summary,
        violations: Vec::new(),
    })
}

fn percolate(config: &ExperimentConfig, a: &PercolateArgs, seed: u64, limits: &Limits) -> Result<Outcome, Failure> {
    depth_ok(a.depth, limits)?;
    trials_ok(a.trials, limits)?;
    let beta = parse_rational(&a.beta)?;
    let k = parse_set(&a.k, a.depth, seed)?;
    let field = PercField::new(seed);
    let depths: Vec<u32> = (1..=a.depth).collect();
    let report = hawkes_experiment(k.as_ref(), beta, &depths, a.trials, &field)?;
    if let Some(path) = &a.sample_out {
        let schedule = RetentionSchedule::constant(beta, k.dim())?;
        let s = sample_on(k.as_ref(), &schedule, &field, 0, a.depth, &CubeIdx::root(k.dim()))?;
        fs::write(path, encode_binary(&s.survivors)).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    }
    let rows: Vec<String> = report
        .levels
        .iter()
        .map(|l| format!("{},{:.6},{:.6},{:.6},{}", l.depth, l.fraction, l.ci_low, l.ci_high, opt(l.cond_slope)))
        .collect();
    let last = report.levels.last().expect("depth >= 1");
    let summary = format!(
        "percolate: survival at depth {} is {:.4} [{:.4}, {:.4}] over {} trials",
        last.depth, last.fraction, last.ci_low, last.ci_high, a.trials
    );
    Ok(Outcome {
        artifact: csv(config, "depth,survival_frac,ci_low,ci_high,cond_slope", &rows),
        summary,
        violations: Vec::new(),
    })
}

fn hawkes(config: &ExperimentConfig, a: &HawkesArgs, seed: u64, limits: &Limits) -> Result<Outcome, Failure> {
    trials_ok(a.trials, limits)?;
    let depths = a
        .depths
        .split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| Failure::Validation(format!("bad depth {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let deepest = *depths.iter().max().ok_or_else(|| Failure::Validation("no depths".into()))?;
    depth_ok(deepest, limits)?;
    let beta = parse_rational(&a.beta)?;
    let k = parse_set(&a.k, deepest, seed)?;
    let report = hawkes_experiment(k.as_ref(), beta, &depths, a.trials, &PercField::new(seed))?;
    let violations: Vec<String> = report.checks.iter().filter(|c| !c.1).map(|c| c.0.clone()).collect();
    let last = report.levels.last().expect("nonempty");
    let summary = format!(
        "hawkes: dim K ~ {:.4}, beta {}, survival at depth {} is {:.4}, slope {}",
        report.k_dim_estimate,
        format_rational(&beta),
        last.depth,
        last.fraction,
        opt(report.conditional_slope)
    );
    Ok(Outcome {
        artifact: document(config, serde_json::to_value(&report).expect("json")),
        summary,
        violations,
    })
}

fn family(config: &ExperimentConfig, a: &FamilyArgs, seed: u64, limits: &Limits) -> Result<Outcome, Failure> {
    depth_ok(a.depth as u32, limits)?;
    let variant = match a.variant.as_str() {
        "box" => Variant::Box,
        "packing" => Variant::Packing,
        other => return Err(Failure::Validation(format!("unknown variant {other:?}"))),
    };
    let level_fn = match a.level_fn.as_str() {
        "linear" => LevelFunction::Linear,
        "packing_count" => LevelFunction::PackingCount,
        other => return Err(Failure::Validation(format!("unknown level function {other:?}"))),
    };
    let mut alphas = parse_rational_list(&a.alphas)?;
    if alphas.len() == 1 {
        alphas = vec![alphas[0]; a.depth];
    }
    if alphas.len() < a.depth {
        return Err(Failure::Validation(format!("{} caps given for depth {}", alphas.len(), a.depth)));
    }
    let spec = parse_target(&a.spec)?;
    let view = parse_net(&a.net, parse_metric(&a.metric)?, seed)?;
    let kseq = level_schedule(&view, &alphas, variant, level_fn, a.k_cap)?;
    let members = match &a.word {
        Some(w) => {
            let x = parse_seq(w, seed)?.prefix(a.depth)?;
            vec![family_member(&x, &spec, &view, &kseq, a.depth)?]
        }
        None => {
            if a.depth >= usize::BITS as usize || 1usize << a.depth > limits.max_members {
                return Err(Failure::Resource(format!(
                    "2^{} members exceed max_members {}",
                    a.depth, limits.max_members
                )));
            }
            family_members(&spec, &view, &kseq, a.depth)?
        }
    };
    let mut violations = Vec::new();
    let mut entries = Vec::new();
    for m in &members {
        let report = family_dim_report(&view, &kseq, m)?;
        for (name, ok) in &report.checks {
            if !ok {
                violations.push(format!("{}: {name}", m.prefix));
            }
        }
        let mut trace = m.to_json(&view, &kseq);
        trace["checks"] = serde_json::to_value(&report.checks).expect("json");
        entries.push(trace);
    }
    let continuity = if a.no_continuity || members.len() < 2 {
        None
    } else {
        let c = continuity_check(&view, &kseq, &members);
        if c.violations > 0 {
            violations.push(format!("{} of {} pairs break the continuity modulus", c.violations, c.pairs));
        }
        Some(c)
    };
    let summary = format!(
        "family: {} members to depth {}, k = {:?}, {} violations",
        members.len(),
        a.depth,
        kseq.ks,
        violations.len()
    );
    let result = json!({
        "net_points": view.len(),
        "schedule": kseq,
        "members": entries,
        "continuity": continuity,
    });
    Ok(Outcome { artifact: document(config, result), summary, violations })
}

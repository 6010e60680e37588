//! End-to-end acceptance run. Prints one line per criterion and exits nonzero
//! if any criterion misses its tolerance or its time budget.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use microsets::dims::{ball_covering_counts, box_dim_estimate, chain_check, covering_counts, packing_counts, PointCloud};
use microsets::dyadic::{hausdorff_distance, kx_set, left_endpoints, DigitProduct, Metric};
use microsets::families::*;
use microsets::percolation::{coupled_pair, hawkes_experiment, PercField, RetentionSchedule};
use microsets::realize::{build_psi_prefix, choose_k_nearest, realized_density_check, TargetSpec, VarphiMap};
use microsets::seq::{beatty_balanced, is_balanced, Word};
use microsets::Rational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn r(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + stream)
}

fn random_word(rng: &mut ChaCha8Rng, n: usize) -> Word {
    Word::from_bits((0..n).map(|_| rng.gen()).collect())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn balancedness() -> Outcome {
    for a in [r(1, 3), r(2, 5), r(7, 12)] {
        let x = beatty_balanced(a).map_err(err)?.prefix(256);
        ensure(is_balanced(&x, 256), || format!("beatty({a}) prefix is not balanced"))?;
        for n in 1..=256usize {
            let rho = x.prefix(n).density().expect("nonempty");
            ensure((rho - a).abs() <= r(1, n as i64), || format!("a={a} n={n}: density {rho}"))?;
        }
    }
    Ok("3 densities, factor lengths 1..256, |rho - a| <= 1/n".into())
}

fn dimension_formula() -> Outcome {
    let mut g = rng(2);
    let levels: Vec<u32> = (0..=20).collect();
    for _ in 0..50 {
        let x = random_word(&mut g, 20);
        let counts = covering_counts(&kx_set(&x).map_err(err)?, &levels).map_err(err)?;
        for &n in &levels {
            let want = num_bigint::BigUint::from(1u8) << x.prefix(n as usize).sigma();
            ensure(counts.get(n) == Some(&want), || format!("{x} level {n}"))?;
        }
    }
    let x = beatty_balanced(r(1, 3)).map_err(err)?.prefix(2048);
    let levels: Vec<u32> = (1..=2048).collect();
    let series = covering_counts(&DigitProduct::kx(&x), &levels).map_err(err)?;
    let (lo, hi) = box_dim_estimate(&series, None).map_err(err)?;
    let tol = 1.0 / 512.0;
    ensure((lo - 1.0 / 3.0).abs() <= tol && (hi - 1.0 / 3.0).abs() <= tol, || {
        format!("slope window [{lo}, {hi}]")
    })?;
    Ok(format!("50 words exact; beatty(1/3) slopes in [{lo:.5}, {hi:.5}]"))
}

fn hausdorff_contraction() -> Outcome {
    let mut g = rng(3);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let x = random_word(&mut g, 16);
        // half the pairs share a random prefix so that late disagreements occur
        let y = if i % 2 == 0 {
            random_word(&mut g, 16)
        } else {
            let j = g.gen_range(0..16);
            let mut bits = x.bits()[..j].to_vec();
            bits.push(!x.bit(j));
            bits.extend((j + 1..16).map(|_| g.gen::<bool>()));
            Word::from_bits(bits)
        };
        let d = hausdorff_distance(&kx_set(&x).map_err(err)?, &kx_set(&y).map_err(err)?, Metric::Sup)
            .map_err(err)?;
        let bound = match x.first_disagreement(&y) {
            Some(j) => (-(j as f64)).exp2(),
            None => 0.0,
        };
        if d > bound {
            violations += 1;
        }
        if bound > 0.0 {
            worst = worst.max(d / bound);
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("1000 pairs, 0 violations, worst ratio {worst:.3}"))
}

fn psi_realization() -> Outcome {
    let spec = TargetSpec::interval_union(vec![(r(3, 10), r(7, 10))]).map_err(err)?;
    let map = VarphiMap::new(&spec);
    let mut g = rng(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = random_word(&mut g, 400);
        let psi = build_psi_prefix(&x, &spec, 101).map_err(err)?;
        let limit = map.value(&x).map_err(err)?;
        let report = realized_density_check(&psi, limit).map_err(err)?;
        ensure(report.cumulative_error <= 0.15, || format!("{x}: {report:?}"))?;
        worst = worst.max(report.cumulative_error);
    }
    Ok(format!("20 branches, block bounds exact, worst cumulative error {worst:.4}"))
}

/// `k` lies in `(√n − 1, n√n + 1)` and `|(na + kb)/(n+k) − t| ≤ 2/√n`, with
/// `a, b, t` over the common denominator `q`, in integer arithmetic.
fn k_oracle(n: u64, k: u64, q: i128, a: i128, b: i128, t: i128) -> bool {
    let (n, k) = (n as i128, k as i128);
    let lower = (k + 1) * (k + 1) > n;
    let upper = k <= 1 || (k - 1) * (k - 1) < n * n * n;
    let num = n * a + k * b - (n + k) * t;
    lower && upper && num * num * n <= 4 * q * q * (n + k) * (n + k)
}

fn choose_k_totality() -> Outcome {
    let mut g = rng(5);
    let mut failures = 0u64;
    let mut first = None;
    for n in 1..=10_000u64 {
        for _ in 0..100 {
            let q = g.gen_range(1..=1000i64);
            let mut v = [g.gen_range(0..=q), g.gen_range(0..=q), g.gen_range(0..=q)];
            v.sort_unstable();
            let [a, t, b] = v;
            let ok = match choose_k_nearest(n, r(a, q), r(b, q), r(t, q)) {
                Ok(k) => k_oracle(n, k, q as i128, a as i128, b as i128, t as i128),
                Err(_) => false,
            };
            if !ok {
                failures += 1;
                first.get_or_insert((n, a, b, t, q));
            }
        }
    }
    ensure(failures == 0, || format!("{failures} failures, first {first:?}"))?;
    Ok("10^6 calls, 0 failures".into())
}

fn percolation_oracle() -> Outcome {
    let k = DigitProduct::full(1, 20).map_err(err)?;
    let depths: Vec<u32> = (1..=20).collect();
    let report = hawkes_experiment(&k, r(1, 2), &depths, 10_000, &PercField::new(6)).map_err(err)?;
    // extinction q = s² where s = 1 − p + p s² is the smaller root
    let p = 0.5f64.sqrt();
    let q = ((1.0 - (1.0 - 4.0 * p * (1.0 - p)).sqrt()) / (2.0 * p)).powi(2);
    let want = 1.0 - q;
    let got = report.at(20).expect("depth 20").fraction;
    ensure((got - want).abs() <= 0.02, || format!("survival {got} vs {want}"))?;
    let mut worst = 0.0f64;
    for l in &report.levels {
        let expected = (l.depth as f64 / 2.0).exp2();
        let z = (l.mean_count - expected).abs() / l.count_se;
        ensure(z <= 3.0, || format!("depth {}: mean {} vs {expected}, se {}", l.depth, l.mean_count, l.count_se))?;
        worst = worst.max(z);
    }
    Ok(format!("survival {got:.4} (oracle {want:.4}), worst count z {worst:.2}"))
}

fn monotone_coupling() -> Outcome {
    let mut g = rng(7);
    let mut included = 0;
    for i in 0..100u64 {
        // d = 2 schedules keep α ≥ 1 so that survivor sets stay near 2^12 cells
        let (d, floor) = if i % 2 == 0 { (1usize, 0i64) } else { (2, 8) };
        let top = 8 * d as i64;
        let (mut hi, mut lo) = (Vec::new(), Vec::new());
        for _ in 0..12 {
            let (x, y) = (g.gen_range(floor..=top), g.gen_range(floor..=top));
            hi.push(r(x.max(y), 8));
            lo.push(r(x.min(y), 8));
        }
        let a = RetentionSchedule::new(hi, None, d).map_err(err)?;
        let b = RetentionSchedule::new(lo, None, d).map_err(err)?;
        let (sa, sb) = coupled_pair(&a, &b, &PercField::new(g.gen()), i, 12).map_err(err)?;
        if sa.survivors.is_subset(&sb.survivors).map_err(err)? {
            included += 1;
        }
    }
    ensure(included == 100, || format!("inclusion {included}/100"))?;
    Ok("inclusion 100/100".into())
}

fn hawkes_directionality() -> Outcome {
    let x = beatty_balanced(r(1, 3)).map_err(err)?.prefix(24);
    let k = DigitProduct::kx(&x);
    let thin = hawkes_experiment(&k, r(3, 5), &[8, 24], 10_000, &PercField::new(8)).map_err(err)?;
    let (s8, s24) = (thin.at(8).expect("8").fraction, thin.at(24).expect("24").fraction);
    ensure(s24 < s8 && s24 < 0.1, || format!("survival {s8} at 8, {s24} at 24"))?;
    let full = DigitProduct::full(1, 20).map_err(err)?;
    let fat = hawkes_experiment(&full, r(1, 2), &[20], 10_000, &PercField::new(9)).map_err(err)?;
    let slope = fat.conditional_slope.ok_or("no survivors at depth 20")?;
    ensure((0.35..=0.6).contains(&slope), || format!("conditional slope {slope}"))?;
    Ok(format!("survival {s8:.4} -> {s24:.4}; conditional slope {slope:.4}"))
}

fn check_family(view: &MetricSpaceView, kseq: &KSeq, spec: &TargetSpec) -> Result<String, String> {
    let members = family_members(spec, view, kseq, 6).map_err(err)?;
    ensure(members.len() == 64, || format!("{} members", members.len()))?;
    for m in &members {
        let report = family_dim_report(view, kseq, m).map_err(err)?;
        ensure(report.passed(), || format!("{}: {:?}", m.prefix, report.checks))?;
        ensure(has_exact_cardinalities(m).map_err(err)?, || format!("{}: cardinalities", m.prefix))?;
        ensure(is_nested(view, kseq, m), || format!("{}: not nested", m.prefix))?;
        ensure(is_separated(view, kseq, m), || format!("{}: not separated", m.prefix))?;
    }
    let c = continuity_check(view, kseq, &members);
    ensure(c.pairs == 2016 && c.violations == 0, || format!("continuity {c:?}"))?;
    Ok(format!("worst ratio {:.3}", c.worst_ratio))
}

fn ball_tree_families() -> Outcome {
    let specs = [
        ("A={1/2}", TargetSpec::singleton(r(1, 2)).map_err(err)?),
        ("A=[0,1/2]", TargetSpec::interval_union(vec![(r(0, 1), r(1, 2))]).map_err(err)?),
    ];
    let mut notes = Vec::new();

    let view = MetricSpaceView::zoom_grid(&[1, 1], 1, 256, 8, Metric::Euclidean).map_err(err)?;
    ensure(view.len() == 1 << 16, || format!("box net has {} points", view.len()))?;
    let kseq = level_schedule(&view, &[r(1, 4); 6], Variant::Box, LevelFunction::Linear, 60).map_err(err)?;
    for (name, spec) in &specs {
        notes.push(format!("box {name} {}", check_family(&view, &kseq, spec).map_err(|e| format!("box {name}: {e}"))?));
    }

    let x = beatty_balanced(r(1, 4)).map_err(err)?.prefix(32);
    let axis: Vec<i64> = left_endpoints(&x).map_err(err)?.into_iter().map(|v| v as i64).collect();
    let o = axis[axis.len() / 2];
    let view = MetricSpaceView::product_grid(vec![axis.clone(), axis], 32, Metric::Sup, &[o, o]).map_err(err)?;
    ensure(view.len() == 1 << 16, || format!("packing net has {} points", view.len()))?;
    let kseq = level_schedule(&view, &[r(1, 12); 6], Variant::Packing, LevelFunction::Linear, 32).map_err(err)?;
    for (name, spec) in &specs {
        notes.push(format!("packing {name} {}", check_family(&view, &kseq, spec).map_err(|e| format!("packing {name}: {e}"))?));
    }
    Ok(notes.join("; "))
}

fn packing_chain() -> Outcome {
    let mut g = rng(10);
    let levels: Vec<u32> = (0..=12).collect();
    for i in 0..200 {
        let n = g.gen_range(1..=32);
        let d = g.gen_range(1..=3);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| g.gen_range(0..1024) as f64 / 1024.0).collect()).collect();
        let metric = if i % 2 == 0 { Metric::Sup } else { Metric::Euclidean };
        let cloud = PointCloud::new(pts, metric).map_err(err)?;
        let covers = ball_covering_counts(&cloud, &levels).map_err(err)?;
        let packs = packing_counts(&cloud, &levels).map_err(err)?;
        ensure(chain_check(&covers, &packs).map_err(err)?, || format!("set {i}: chain broken"))?;
    }
    Ok("200 sets, levels 0..12, chain holds".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("balanced Beatty prefixes", 1, balancedness),
        ("K(x) counts and slope", 5, dimension_formula),
        ("Hausdorff contraction", 5, hausdorff_contraction),
        ("psi realization", 10, psi_realization),
        ("choose_k totality", 10, choose_k_totality),
        ("percolation oracle", 60, percolation_oracle),
        ("monotone coupling", 10, monotone_coupling),
        ("Hawkes directionality", 120, hawkes_directionality),
        ("ball-tree families", 120, ball_tree_families),
        ("packing chain", 30, packing_chain),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let verdict = match outcome {
            Ok(note) if took < Duration::from_secs(*budget) => format!("PASS  {note}"),
            Ok(note) => format!("FAIL  over budget of {budget} s: {note}"),
            Err(e) => format!("FAIL  {e}"),
        };
        if verdict.starts_with("FAIL") {
            failed += 1;
        }
        println!("criterion {:>2} {name:<26} {verdict} ({:.2} s)", i + 1, took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

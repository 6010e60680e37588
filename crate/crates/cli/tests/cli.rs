use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use microsets::dyadic::decode_binary;

fn microsets(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_microsets"));
    cmd.args(args).env_remove("MICROSETS_SEED");
    if let Some(s) = seed_env {
        cmd.env("MICROSETS_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn dims_reports_sigma_over_n() {
    let o = microsets(&["dims", "--word", "beatty:1/3", "--depth", "12"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# microsets "));
    assert!(text.contains("n,sigma,log2_count,slope"));
    let r = rows(&text);
    assert_eq!(r.len(), 12);
    for (i, row) in r.iter().enumerate() {
        let n = (i + 1) as f64;
        let sigma: f64 = row[1].parse().unwrap();
        let log2: f64 = row[2].parse().unwrap();
        let slope: f64 = row[3].parse().unwrap();
        assert_eq!(sigma, log2);
        assert!((slope - sigma / n).abs() < 1e-9);
        // a balanced word of density 1/3 stays within one of n/3
        assert!((sigma - n / 3.0).abs() <= 1.0);
    }
}

#[test]
fn invalid_beta_is_a_validation_error() {
    let o = microsets(&["percolate", "--k", "full:1", "--beta", "2", "--depth", "5", "--trials", "10"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta"));
}

#[test]
fn limits_are_resource_errors() {
    let args = ["percolate", "--k", "full:1", "--beta", "1/2", "--depth", "5", "--trials", "10", "--max-trials", "5"];
    assert_eq!(microsets(&args, None).status.code(), Some(3));
    let args = ["dims", "--word", "beatty:1/3", "--depth", "40", "--max-depth", "30"];
    assert_eq!(microsets(&args, None).status.code(), Some(3));
}

#[test]
fn percolate_csv_matches_extinction_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let args = [
        "percolate", "--k", "full:1", "--beta", "1/2", "--depth", "20", "--trials", "3000", "--seed", "11",
        "--out", out.to_str().unwrap(),
    ];
    let o = microsets(&args, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("percolate:"));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("depth,survival_frac,ci_low,ci_high,cond_slope"));
    let r = rows(&text);
    assert_eq!(r.len(), 20);
    // q = ((1-p)/p)^2 with p = 2^{-1/2}
    let p = 0.5f64.sqrt();
    let survival = 1.0 - ((1.0 - p) / p).powi(2);
    let last: f64 = r[19][1].parse().unwrap();
    assert!((last - survival).abs() < 0.03, "{last} vs {survival}");
    let lo: f64 = r[19][2].parse().unwrap();
    let hi: f64 = r[19][3].parse().unwrap();
    assert!(lo <= last && last <= hi);
    let fracs: Vec<f64> = r.iter().map(|row| row[1].parse().unwrap()).collect();
    assert!(fracs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let base = ["percolate", "--k", "beatty:1/2^2", "--beta", "1/2", "--depth", "8", "--trials", "200"];
    let run = |out: &Path, env: Option<&str>| {
        let mut args = base.to_vec();
        args.extend(["--out", out.to_str().unwrap()]);
        assert!(microsets(&args, env).status.success());
        fs::read(out).unwrap()
    };
    let first = run(&a, Some("99"));
    assert_eq!(first, run(&b, Some("99")));
    assert!(String::from_utf8_lossy(&first).contains("\"seed\":99"));
    assert_ne!(first, run(&b, Some("100")));
}

#[test]
fn seed_flag_overrides_environment() {
    let args = ["hawkes", "--k", "full:1", "--beta", "1/2", "--depths", "4,8", "--trials", "50", "--seed", "7"];
    let with_env = stdout(&microsets(&args, Some("123")));
    let without = stdout(&microsets(&args, None));
    assert_eq!(with_env, without);
    let doc: serde_json::Value = serde_json::from_str(&without).unwrap();
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["result"]["levels"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"command":"realize","params":{"spec":"intervals:3/10-7/10","word":"beatty:1/3","blocks":12},"seed":5}"#,
    )
    .unwrap();
    let from_file = microsets(&["run", "--config", cfg.to_str().unwrap()], None);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let from_flags = microsets(
        &["realize", "--spec", "intervals:3/10-7/10", "--word", "beatty:1/3", "--blocks", "12", "--seed", "5"],
        None,
    );
    assert_eq!(stdout(&from_file), stdout(&from_flags));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert!(doc["result"]["report"]["max_bound_ratio"].as_f64().unwrap() <= 1.0);
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"command":"dims","params":{"word":"beatty:1/3","depth":4,"colour":"red"}}"#).unwrap();
    assert_eq!(microsets(&["run", "--config", cfg.to_str().unwrap()], None).status.code(), Some(1));
}

#[test]
fn zoom_exports_binary_set() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("z.bin");
    let args = ["zoom", "--k", "full:2", "--depth", "6", "--m", "1", "--u", "-1/4,0", "--bin", bin.to_str().unwrap()];
    let o = microsets(&args, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let set = decode_binary(&fs::read(&bin).unwrap()).unwrap();
    // doubling [0,1]^2 and shifting left by 1/4 leaves [0,1] x [0,1]
    assert_eq!(set.depth(), 5);
    assert_eq!(set.leaf_count(), 32 * 32);
}

#[test]
fn family_on_a_small_net() {
    let args = [
        "family", "--net", "zoom:2:64:6", "--variant", "box", "--spec", "set:1/2", "--alphas", "1/4", "--depth",
        "3",
    ];
    let o = microsets(&args, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["result"]["members"].as_array().unwrap().len(), 8);
    assert_eq!(doc["result"]["continuity"]["violations"], 0);
    let tiny = ["family", "--net", "uniform:2:3", "--variant", "box", "--spec", "set:1/2", "--alphas", "1/2", "--depth", "4"];
    assert_eq!(microsets(&tiny, None).status.code(), Some(3));
}

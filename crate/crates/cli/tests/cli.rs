use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// Runs the binary with a whitespace-separated argument line.
fn cc(line: &str) -> Output {
    cc_env(line, None)
}

fn cc_env(line: &str, workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_clustercert"));
    cmd.args(line.split_whitespace());
    match workers {
        Some(w) => cmd.env("CLUSTERCERT_WORKERS", w),
        None => cmd.env_remove("CLUSTERCERT_WORKERS"),
    };
    cmd.output().expect("spawn clustercert")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_sample(dir: &TempDir, name: &str, function: &str, grid: &str) -> String {
    let path = dir.path().join(name).to_str().unwrap().to_string();
    let out = cc(&format!("sample --function {function} --grid {grid} --output {path}"));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

// Inline specs must stay free of whitespace for `cc`.
const CONSTANT_2: &str = r#"{"family":"constant","params":{"value":2}}"#;
const ZERO: &str = r#"{"family":"constant","params":{"value":0}}"#;
const TRIG: &str = r#"{"family":"random-trig","params":{"seed":1,"terms":6,"amplitude":1}}"#;
const HALFSPACE: &str = r#"{"family":"indicator-halfspace","params":{"axis":0,"threshold":0,"low":0,"high":2}}"#;
const BUMP: &str = r#"{"family":"bump","params":{"center":[0.05,-0.1],"width":0.45,"height":1}}"#;
const QUERY: &str = "--c 1 --alpha 0.5 --delta 0.5 --lambda 0.5 --s 0.5 --p 2";
const BV_LEVELS: &str = "--corollary bv --gamma-prime 1 --c 1 --alpha 0.4 --delta 0.5 --lambda 0.5 --s 0.5";

#[test]
fn sample_constant_writes_sixteen_twos() {
    let dir = TempDir::new().unwrap();
    let path = write_sample(&dir, "c.json", CONSTANT_2, "2,4");
    let u: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let values = u["values"].as_array().unwrap();
    assert_eq!(values.len(), 16);
    assert!(values.iter().all(|v| v.as_f64() == Some(2.0)));
    assert_eq!(u["m"], 4);
}

#[test]
fn sample_reports_levels() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("h.json");
    let out = cc(&format!(
        "sample --function {HALFSPACE} --grid 2,8 --c 1,3 --output {}",
        path.display()
    ));
    assert_eq!(code(&out), 0);
    let summary = json(&out);
    assert_eq!(summary["levels"][0]["fraction"], 0.5);
    assert_eq!(summary["levels"][1]["fraction"], 0.0);
    assert_eq!(summary["max"], 2.0);
}

#[test]
fn sample_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = write_sample(&dir, "a.json", TRIG, "2,16");
    let b = write_sample(&dir, "b.json", TRIG, "2,16 --seed 7");
    let c = write_sample(&dir, "c.json", TRIG, "2,16 --seed 7");
    assert_eq!(fs::read(&b).unwrap(), fs::read(&c).unwrap());
    assert_ne!(fs::read(a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invalid_family_exits_two() {
    let out = cc(r#"sample --function {"family":"sawtooth","params":{}} --grid 2,4"#);
    assert_eq!(code(&out), 2);
}

#[test]
fn seminorms_of_constant_vanish() {
    let dir = TempDir::new().unwrap();
    let path = write_sample(&dir, "c.json", CONSTANT_2, "3,6");
    let out = cc(&format!("seminorm --input {path} --s 0.5 --p 2"));
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["gagliardo"], 0.0);
    assert_eq!(r["grad_lp"], 0.0);
    assert_eq!(r["bv"], 0.0);
}

#[test]
fn seminorm_subset_and_oracle() {
    let out = cc(&format!(
        "seminorm --function {BUMP} --grid 2,8 --s 0.75 --p 1.5 --which gagliardo --oracle"
    ));
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert!(r.get("grad_lp").is_none() && r.get("bv").is_none());
    assert!(r["gagliardo"].as_f64().unwrap() > 0.0);
    assert!(r["oracle"]["relative_gap"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn missing_input_exits_two() {
    assert_eq!(code(&cc("seminorm --input /nonexistent/grid.json --s 0.5 --p 2")), 2);
}

#[test]
fn worker_count_does_not_change_output() {
    let run = |w: &str| {
        let out = cc(&format!(
            "seminorm --function {TRIG} --grid 2,30 --s 0.4 --p 2 --workers {w}"
        ));
        assert_eq!(code(&out), 0);
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
    assert_eq!(
        code(&cc(&format!(
            "seminorm --function {TRIG} --grid 2,4 --s 0.4 --p 2 --workers 0"
        ))),
        2
    );
}

#[test]
fn workers_env_var_is_the_default() {
    let line = format!("seminorm --function {CONSTANT_2} --grid 2,4 --s 0.5 --p 2");
    assert_eq!(code(&cc_env(&line, Some("2"))), 0);
    assert_eq!(code(&cc_env(&line, Some("0"))), 2);
    assert_eq!(code(&cc_env(&format!("{line} --workers 1"), Some("0"))), 0);
}

#[test]
fn search_constant_finds_at_depth_two() {
    let dir = TempDir::new().unwrap();
    let path = write_sample(&dir, "c.json", CONSTANT_2, "2,4");
    let plot = dir.path().join("per_k.csv");
    let out = cc(&format!(
        "search --input {path} --gamma 1 {QUERY} --plot-data {}",
        plot.display()
    ));
    assert_eq!(code(&out), 0);
    let cert = json(&out);
    assert_eq!(cert["found"], true);
    assert_eq!(cert["k"], 2);
    assert_eq!(cert["fraction"], 1.0);
    assert_eq!(cert["reduction"], Value::Null);
    let csv = fs::read_to_string(plot).unwrap();
    assert_eq!(csv.lines().next(), Some("k,plus_count,clu1_holds"));
    assert_eq!(csv.lines().nth(1), Some("2,4,true"));
}

#[test]
fn search_zero_exhausts_with_exit_three() {
    let dir = TempDir::new().unwrap();
    let path = write_sample(&dir, "z.json", ZERO, "2,12");
    let out = cc(&format!("search --input {path} --gamma 1 {QUERY}"));
    assert_eq!(code(&out), 3);
    let cert = json(&out);
    assert_eq!(cert["found"], false);
    assert_eq!(cert["hypothesis_a"], false);
    assert_eq!(cert["checked_ks"], serde_json::json!([2, 3, 4, 6, 12]));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(a)"));
}

#[test]
fn search_validation_exits_two() {
    let dir = TempDir::new().unwrap();
    let path = write_sample(&dir, "c.json", CONSTANT_2, "2,4");
    assert_eq!(
        code(&cc(&format!("search --input {path} --gamma 1 {QUERY} --lambda 1"))),
        2
    );
    assert_eq!(code(&cc(&format!("search --input {path} {QUERY}"))), 2);
    // No divisor of 7 lies in [2, k*].
    let path = write_sample(&dir, "c7.json", CONSTANT_2, "2,7");
    assert_eq!(code(&cc(&format!("search --input {path} --gamma 0.01 {QUERY}"))), 2);
}

#[test]
fn halfspace_bv_corollary_populates_reduction() {
    let dir = TempDir::new().unwrap();
    let path = write_sample(&dir, "h.json", HALFSPACE, "2,48");
    let out = cc(&format!("search --input {path} {BV_LEVELS}"));
    assert_eq!(code(&out), 0);
    let cert = json(&out);
    let red = &cert["reduction"];
    assert_eq!(red["kind"], "bv");
    assert_eq!(red["gamma_prime"], 1.0);
    let c = red["C"].as_f64().unwrap();
    assert_eq!(red["gamma"].as_f64().unwrap(), c);
    assert_eq!(cert["query"]["gamma"].as_f64().unwrap(), c);
    assert_eq!(cert["query"]["params"]["p"], 1.0);

    // Rigorous mode swaps in the larger closed-form constant.
    let rigorous = json(&cc(&format!("search --input {path} {BV_LEVELS} --rigorous")));
    assert!(rigorous["reduction"]["C"].as_f64().unwrap() > c);

    assert_eq!(code(&cc(&format!("search --input {path} {BV_LEVELS} --p 2"))), 2);
    assert_eq!(code(&cc(&format!("search --input {path} {BV_LEVELS} --gamma 3"))), 2);
}

#[test]
fn bound_worked_query() {
    let out = cc("bound --dim 2 --alpha 0.5 --gamma 1 --delta 0.5 --lambda 0.5 --s 0.5 --p 2");
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["k_star"], 4345);
    assert!((r["B"].as_f64().unwrap() - 4344.464).abs() < 1e-3);
    assert!((r["eta_lower_bound"].as_f64().unwrap() - 2.3e-4).abs() < 1e-6);
    assert_eq!(r["factors"]["four_pow_p"], 16.0);
    assert_eq!(r["factors"]["two_minus_alpha"], 1.5);
}

#[test]
fn bound_clamps_and_validates() {
    let base = "bound --dim 2 --alpha 0.5 --delta 0.5 --s 0.5 --p 2";
    let out = cc(&format!("{base} --gamma 0.001 --lambda 0.5"));
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["k_star"], 2);
    assert_eq!(code(&cc(&format!("{base} --gamma 1 --lambda 1"))), 2);
}

#[test]
fn verify_scaling_sweep_passes() {
    let dir = TempDir::new().unwrap();
    let plot = dir.path().join("rows.csv");
    let out = cc(&format!(
        "verify --suite scaling --dim 2 --m 12 --plot-data {}",
        plot.display()
    ));
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["failed"], 0);
    // 14 functions × 3 radii × (6 gagliardo + 2 grad + 1 bv)
    assert_eq!(r["passed"], 14 * 3 * 9);
    assert_eq!(fs::read_to_string(plot).unwrap().lines().count(), 1 + 14 * 3 * 9);
}

#[test]
fn verify_embedding_sweep_passes() {
    let out = cc("verify --suite embedding --dim 2 --m 48");
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["failed"], 0);
    for row in r["rows"].as_array().unwrap() {
        assert!(row["ratio"].as_f64().unwrap() <= 1.05);
    }
}

#[test]
fn verify_refinement_covers_each_resolution() {
    let out = cc("verify --suite refinement --corpus bump-central,halfspace-axis0 --s 0.5 --p 2");
    assert_eq!(code(&out), 0);
    let ms: Vec<u64> = json(&out)["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["m"].as_u64().unwrap())
        .collect();
    assert_eq!(ms, [12, 12, 24, 24, 48, 48, 96, 96]);
}

#[test]
fn verify_empty_selection_exits_two() {
    assert_eq!(code(&cc("verify --corpus")), 2);
    assert_eq!(code(&cc("verify --corpus no-such-function")), 2);
}

#[test]
fn config_round_trip_reproduces_output() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    let cfg = cfg.to_str().unwrap();
    let first = cc(&format!(
        "seminorm --function {TRIG} --grid 2,12 --s 0.5 --p 2 --seed 3 --save-config {cfg}"
    ));
    assert_eq!(code(&first), 0);
    let replay = cc(&format!("seminorm --config {cfg}"));
    assert_eq!(code(&replay), 0);
    assert_eq!(first.stdout, replay.stdout);

    // Flags override the file.
    let changed = cc(&format!("seminorm --config {cfg} --s 0.25"));
    assert_ne!(json(&changed)["gagliardo"], json(&first)["gagliardo"]);

    // A config for another subcommand is rejected.
    assert_eq!(code(&cc(&format!("search --config {cfg}"))), 2);
}

#[test]
fn one_dimensional_runs_warn() {
    let bump = BUMP.replace("[0.05,-0.1]", "[0.05]");
    let out = cc(&format!("seminorm --function {bump} --grid 1,16 --s 0.5 --p 2"));
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

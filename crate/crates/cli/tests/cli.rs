use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use shiftshare_ri::diagnostics::diagnose;
use shiftshare_ri::{load_design, IngestOptions, Scheme, Spec, Statistic};

fn data(dir: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(dir)
}

fn data_args(dir: &Path) -> Vec<String> {
    ["outcomes", "exposures", "shocks"]
        .iter()
        .flat_map(|f| [format!("--{f}"), dir.join(format!("{f}.csv")).display().to_string()])
        .collect()
}

fn ssri(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssri"))
        .args(args)
        .env_remove("SHIFTSHARE_RI_SEED")
        .output()
        .expect("run ssri")
}

fn args(command: &str, dir: &str, rest: &[&str]) -> Vec<String> {
    let mut v = vec![command.to_string()];
    v.extend(data_args(&data(dir)));
    v.extend(rest.iter().map(|s| s.to_string()));
    v
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is a single JSON document")
}

const GOLDEN_ARGS: [&str; 13] = [
    "--b", "0", "--stat", "t1", "--scheme", "sign-change", "--L", "999", "--alpha", "0.05", "--seed", "42", "--format",
];

#[test]
fn golden_test_output() {
    let mut a = GOLDEN_ARGS.to_vec();
    a.push("json");
    let out = ssri(&args("test", "example", &a));
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/test_t1_sign_change.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn sampled_p_value_tracks_enumeration() {
    let sampled = json_stdout(&ssri(&args("test", "example", &GOLDEN_ARGS[..12])));
    let exact = json_stdout(&ssri(&args("enumerate", "example", &["--b", "0", "--stat", "t1", "--scheme", "sign-change"])));
    assert_eq!(exact["group_size"], "256");
    let p = sampled["result"]["p_value"].as_f64().unwrap();
    let q = exact["result"]["p_value"].as_f64().unwrap();
    let se = (q * (1.0 - q) / 999.0).sqrt();
    assert!((p - q).abs() <= 4.0 * se, "sampled {p} vs exact {q}");
    assert_eq!(sampled["result"]["t_obs"], exact["result"]["t_obs"]);
}

#[test]
fn json_header_and_draws_flag() {
    let v = json_stdout(&ssri(&args("test", "example", &["--L", "99"])));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "test");
    assert!(v["result"].get("t_sims").is_none());
    let v = json_stdout(&ssri(&args("test", "example", &["--L", "99", "--emit-draws"])));
    assert_eq!(v["result"]["t_sims"].as_array().unwrap().len(), 99);
}

#[test]
fn seed_from_environment() {
    let flag = ssri(&args("test", "example", &["--seed", "42"]));
    let env = Command::new(env!("CARGO_BIN_EXE_ssri"))
        .args(args("test", "example", &[]))
        .env("SHIFTSHARE_RI_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
    let other = ssri(&args("test", "example", &["--seed", "43"]));
    assert_ne!(flag.stdout, other.stdout);
}

#[test]
fn thread_count_does_not_change_output() {
    let outputs: Vec<Vec<u8>> = ["1", "4", "16"]
        .iter()
        .map(|t| ssri(&args("test", "example", &["--scheme", "bootstrap", "--stat", "t2", "--threads", t])).stdout)
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn t2_on_iv_data_is_a_data_error() {
    let out = ssri(&args("test", "iv", &["--stat", "t2"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T2 requires reduced form"));
    assert!(out.stdout.is_empty());
    // Forcing the reduced form discards X.
    assert!(ssri(&args("test", "iv", &["--stat", "t2", "--reduced-form"])).status.success());
}

#[test]
fn invalid_flags_exit_with_code_2() {
    for bad in [&["--L", "0"][..], &["--alpha", "1.5"], &["--scheme", "known"], &["--scheme", "zigzag"], &["--stat", "t9"]] {
        let out = ssri(&args("test", "example", bad));
        assert_eq!(out.status.code(), Some(2), "{bad:?}");
    }
    let missing = ssri(&["test".into(), "--outcomes".into(), "nope.csv".into(), "--exposures".into(), "x".into(), "--shocks".into(), "y".into()]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));
}

#[test]
fn cluster_robust_without_clusters_is_rejected() {
    let out = ssri(&args("test", "iv", &["--cluster-robust"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_degeneracy_exits_with_code_3() {
    // Y = Z exactly, so residuals vanish at b = 1 and T1 has no studentizer.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("outcomes.csv"), "unit,Y\na,1\nb,2\nc,3\n").unwrap();
    std::fs::write(dir.path().join("exposures.csv"), "unit,s1,s2\na,1,0\nb,0,1\nc,1,1\n").unwrap();
    std::fs::write(dir.path().join("shocks.csv"), "sector,g\ns1,1\ns2,2\n").unwrap();
    let mut a = vec!["test".to_string()];
    a.extend(data_args(dir.path()));
    a.extend(["--b".into(), "1".into()]);
    let out = ssri(&a);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero variance"));
}

#[test]
fn output_flag_writes_file_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let mut a = args("test", "example", &["--format", "csv", "--output"]);
    a.push(path.display().to_string());
    let out = ssri(&a);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("b,statistic,scheme"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn berger_boos_adds_a_larger_p_value() {
    let v = json_stdout(&ssri(&args(
        "test",
        "example",
        &["--bb-lower", "-0.3", "--bb-upper", "0.3", "--bb-confidence", "0.95", "--bb-grid", "5", "--bb-exact"],
    )));
    let bb = &v["berger_boos"]["result"];
    assert_eq!(bb["grid"].as_array().unwrap().len(), 5);
    assert!((bb["gamma"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert!(bb["p_value"].as_f64().unwrap() >= bb["sup_p"].as_f64().unwrap());
    let needs_pair = ssri(&args("test", "example", &["--bb-lower", "-0.3"]));
    assert_eq!(needs_pair.status.code(), Some(2));
}

fn retained(v: &Value) -> Vec<f64> {
    v["set"]["retained"].as_array().unwrap().iter().map(|b| b.as_f64().unwrap()).collect()
}

#[test]
fn confidence_sets_nest_in_alpha() {
    let grid = ["--b-min", "-2", "--b-max", "3", "--b-steps", "26", "--L", "499", "--seed", "3"];
    let mut wide = grid.to_vec();
    wide.extend(["--alpha", "0.05"]);
    let mut narrow = grid.to_vec();
    narrow.extend(["--alpha", "0.20"]);
    let wide = retained(&json_stdout(&ssri(&args("ci", "example", &wide))));
    let narrow = retained(&json_stdout(&ssri(&args("ci", "example", &narrow))));
    assert!(!narrow.is_empty());
    assert!(narrow.iter().all(|b| wide.contains(b)), "{narrow:?} not within {wide:?}");
}

#[test]
fn ci_csv_and_empty_set() {
    let out = ssri(&args("ci", "example", &["--b-grid", "-1,0,1", "--format", "csv", "--L", "199"]));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "b,p_value");
    assert_eq!(lines.len(), 4);

    let out = ssri(&args("ci", "example", &["--b-grid", "20,30"]));
    let v = json_stdout(&out);
    assert_eq!(v["set"]["empty"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    let unsorted = ssri(&args("ci", "example", &["--b-grid", "1,0"]));
    assert_eq!(unsorted.status.code(), Some(2));
    assert_eq!(ssri(&args("ci", "example", &[])).status.code(), Some(2));
}

#[test]
fn diagnose_matches_library() {
    let out = ssri(&args("diagnose", "concentrated", &["--scheme", "normal", "--moment-draws", "2000", "--seed", "9"]));
    let v = json_stdout(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("concentrated"));

    let dir = data("concentrated");
    let design = load_design::<f64>(
        &dir.join("outcomes.csv"),
        &dir.join("exposures.csv"),
        &dir.join("shocks.csv"),
        IngestOptions {
            use_clusters: true,
            ..Default::default()
        },
    )
    .unwrap();
    let spec = Spec::new(0.0, Statistic::T1, Scheme::IidNormal { sigma: 1.0 }).with_seed(9);
    let direct = diagnose(&design, &spec, 2000).unwrap();
    assert_eq!(v["report"], serde_json::to_value(&direct).unwrap());
    assert!(direct.hhi > 0.9);
}

#[test]
fn diagnose_human_lists_warnings() {
    let out = ssri(&args("diagnose", "concentrated", &["--format", "human", "--moment-draws", "500"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("hhi"));
    assert!(text.lines().any(|l| l.starts_with("warning:") && l.contains("concentrated")));
}

fn simulate(config: &Path, extra: &[&str]) -> Output {
    let mut a = vec!["simulate".to_string(), "--config".into(), config.display().to_string()];
    a.extend(extra.iter().map(|s| s.to_string()));
    ssri(&a)
}

#[test]
fn simulate_is_deterministic_and_seeded() {
    let cfg = data("size_small_J.cfg");
    let a = simulate(&cfg, &["--format", "csv"]);
    let b = simulate(&cfg, &["--format", "csv", "--threads", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.starts_with("method,b,reject_rate,mc_se,reps,failures"));
    assert_eq!(text.lines().count(), 4);
    let reseeded = simulate(&cfg, &["--format", "csv", "--seed", "1"]);
    assert_ne!(a.stdout, reseeded.stdout);
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n_sectors = 10\nexposure = single\nmethods = akm-normal\nreps = 100\nwarp_factor = 9\n").unwrap();
    let out = simulate(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp_factor"));
}

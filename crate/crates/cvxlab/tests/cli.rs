use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cvxlab(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cvxlab"));
    cmd.args(args).env_remove("CVXLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn cvxlab");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> String {
    let r = cvxlab(args, &[]);
    assert_eq!(r.code, 0, "{args:?} failed: {}", r.stderr);
    r.stdout
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let s: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).expect("schema compiles")
}

fn conforms(name: &str, text: &str) -> Value {
    let v: Value = serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"));
    let errors: Vec<String> = schema(name).iter_errors(&v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}\n{text}");
    v
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn moduli_example_is_csv_and_stable_across_thread_counts() {
    let args = ["moduli", "--space", "lp:1:2", "--modulus", "H", "--exp", "1", "--eps", "0.1:1.0:10", "--seed", "42"];
    let one = cvxlab(&[&["--threads", "1"], &args[..]].concat(), &[]);
    assert_eq!(one.code, 0, "{}", one.stderr);
    let lines: Vec<&str> = one.stdout.lines().collect();
    assert_eq!(lines[0], "eps,value,budget,err_flag");
    assert_eq!(lines.len(), 11);
    let mut prev = f64::NEG_INFINITY;
    for row in &lines[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        let v: f64 = cols[1].parse().unwrap();
        assert!(v >= prev && v >= 0.0, "{row}");
        prev = v;
        assert_eq!(cols[2], "4096");
    }
    let many = cvxlab(&args, &[("CVXLAB_THREADS", "4")]);
    assert_eq!(many.code, 0);
    assert_eq!(one.stdout, many.stdout, "output depends on thread count");
}

#[test]
fn moduli_json_conforms() {
    let out = ok(&[
        "moduli",
        "--space",
        "lp:2:2",
        "--modulus",
        "delta",
        "--eps",
        "0.5,1",
        "--budget",
        "64",
        "--format",
        "json",
    ]);
    let v = conforms("envelope", &out);
    assert_eq!(v["command"], "moduli");
    assert_eq!(v["result"]["curve"]["values"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_example_passes_and_conforms() {
    let out = ok(&["verify", "--suite", "weissler", "--space", "lp:2:3", "--p", "1.5", "--q", "3", "--seed", "1"]);
    let v = conforms("verdict_report", &out);
    assert_eq!(v["pass"], true);
    assert!(v.get("runtime_ms").is_none());
    let timed = ok(&[
        "--timing", "verify", "--suite", "weissler", "--space", "lp:2:3", "--p", "1.5", "--q", "3", "--seed", "1",
    ]);
    assert!(conforms("verdict_report", &timed)["runtime_ms"].is_u64());
}

#[test]
fn levi_example_is_nonnegative() {
    let out = ok(&["domain", "levi", "--space", "lp:4:2", "--point", "1,0,0,0"]);
    let v = conforms("envelope", &out);
    assert!(v["result"]["min_eigenvalue"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn every_json_command_conforms() {
    let cases: &[&[&str]] = &[
        &["psh", "check", "--fn", "abs_z1z2", "--dim", "2", "--region", "polydisc:1", "--samples", "20"],
        &["psh", "phi", "--fn", "norm:lp:1:2", "--point", "1,0,1,0", "--r-max", "0.05", "--dirs", "4"],
        &["psh", "phi", "--fn", "norm2sq", "--dim", "2", "--region", "ball:lp:2:2", "--samples", "5"],
        &["domain", "scan", "--space", "lp:2:2", "--samples", "4", "--format", "json"],
        &["domain", "exhaustion", "--space", "lp:2:2", "--samples", "4"],
        &["domain", "radius", "--space", "lp:2:2", "--point", "0,0,0,0", "--dir", "1,0,0,0"],
    ];
    for args in cases {
        let v = conforms("envelope", &ok(args));
        assert_eq!(v["command"], format!("{} {}", args[0], args[1]));
    }
    conforms("verdict_report", &ok(&["domain", "uniform", "--space", "lp:2:2", "--samples", "50"]));
    conforms("verdict_report", &ok(&["verify", "--suite", "known_facts"]));
}

#[test]
fn scan_csv_has_one_row_per_sample() {
    let out = ok(&["domain", "scan", "--space", "lp:2:2", "--samples", "5", "--format", "csv"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "index,re1,im1,re2,im2,min_eigenvalue,skipped");
    assert_eq!(lines.len(), 6);
}

#[test]
fn failing_checks_exit_one() {
    let scan =
        cvxlab(&["psh", "check", "--fn", "neg_norm2sq", "--dim", "1", "--region", "cube:1", "--samples", "10"], &[]);
    assert_eq!(scan.code, 1);
    assert_eq!(conforms("envelope", &scan.stdout)["result"]["pass"], false);
    let phi = cvxlab(&["psh", "phi", "--fn", "neg_norm2sq", "--dim", "1", "--point", "0.1,0"], &[]);
    assert_eq!(phi.code, 1, "{}", phi.stderr);
    let sup = cvxlab(&["domain", "uniform", "--space", "lp:inf:2", "--samples", "200"], &[]);
    assert_eq!(sup.code, 1);
    assert_eq!(conforms("verdict_report", &sup.stdout)["pass"], false);
}

#[test]
fn usage_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &[],
        &["moduli", "--bogus"],
        &["moduli", "--space", "lp:0.5:2", "--modulus", "H", "--eps", "0.5"],
        &["moduli", "--space", "lp:2:2", "--modulus", "zeta", "--eps", "0.5"],
        &["moduli", "--space", "lp:2:2", "--modulus", "delta", "--eps", "1,0.5"],
        &["verify"],
        &["psh", "check", "--fn", "nope", "--region", "cube:1"],
        &["domain", "levi", "--space", "lp:2:2", "--point", "0.1,0,0,0"],
        &["domain", "levi", "--space", "lp:2:2", "--format", "csv", "--point", "1,0,0,0"],
    ];
    for args in cases {
        let r = cvxlab(args, &[]);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert!(!r.stderr.is_empty());
        assert!(r.stdout.is_empty(), "{args:?} wrote to stdout");
    }
    assert_eq!(cvxlab(&["--help"], &[]).code, 0);
    let bad_env = cvxlab(
        &["domain", "radius", "--space", "lp:2:2", "--point", "0,0,0,0", "--dir", "1,0,0,0"],
        &[("CVXLAB_THREADS", "many")],
    );
    assert_eq!(bad_env.code, 2);
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn config_files_merge_with_flags() {
    let dir = tmp();
    let text = r#"{"command": "verify", "suite": "weissler", "space": {"family": "lp", "p": 2, "dim": 3},
                  "p": 1.5, "q": 3, "seed": 1}"#;
    let v: Value = serde_json::from_str(text).unwrap();
    assert!(schema("run_config").is_valid(&v));
    let cfg = write(dir.path(), "run.json", text);
    let from_file = ok(&["verify", "--config", path_str(&cfg)]);
    let from_flags =
        ok(&["verify", "--suite", "weissler", "--space", "lp:2:3", "--p", "1.5", "--q", "3", "--seed", "1"]);
    assert_eq!(from_file, from_flags);

    let overridden = conforms("verdict_report", &ok(&["verify", "--config", path_str(&cfg), "--seed", "7"]));
    assert_eq!(overridden["seed"], 7);

    let unknown = write(dir.path(), "bad.json", r#"{"suite": "weissler", "sede": 3}"#);
    let r = cvxlab(&["verify", "--config", path_str(&unknown)], &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("sede"), "{}", r.stderr);
    assert!(!schema("run_config").is_valid(&serde_json::json!({"suite": "weissler", "sede": 3})));

    let r = cvxlab(&["moduli", "--config", path_str(&cfg)], &[]);
    assert_eq!(r.code, 2, "command mismatch must be rejected");
}

#[test]
fn domain_from_config_ball() {
    let dir = tmp();
    let cfg = write(
        dir.path(),
        "dom.json",
        r#"{"domain": {"ball_of": {"family": "lp", "p": 4, "dim": 2}, "radius": 2.0}, "point": [2, 0, 0, 0]}"#,
    );
    let v = conforms("envelope", &ok(&["domain", "levi", "--config", path_str(&cfg)]));
    assert!(v["result"]["min_eigenvalue"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn reruns_are_byte_identical() {
    // The ℓ₃ ball is only weakly pseudoconvex, so this check fails (exit 1),
    // but it must fail identically.
    let args = ["domain", "exhaustion", "--space", "lp:3:2", "--samples", "16", "--seed", "5"];
    let (a, b) = (cvxlab(&args, &[]), cvxlab(&args, &[]));
    assert_eq!((a.code, b.code), (1, 1));
    assert_eq!(a.stdout, b.stdout);
    let t1 = cvxlab(&["--threads", "1", "psh", "check", "--fn", "abs_z1z2", "--dim", "2", "--region", "cube:1"], &[]);
    let t3 = cvxlab(&["--threads", "3", "psh", "check", "--fn", "abs_z1z2", "--dim", "2", "--region", "cube:1"], &[]);
    assert_eq!(t1.code, 0);
    assert_eq!(t1.stdout, t3.stdout);
}

#[test]
fn mollified_grids_round_trip_through_files() {
    let dir = tmp();
    let g = dir.path().join("g.json");
    let out = ok(&[
        "psh",
        "mollify",
        "--fn",
        "abs_re_z1",
        "--box",
        "-1:1",
        "--shape",
        "21",
        "--delta",
        "0.25",
        "--out",
        path_str(&g),
    ]);
    let env = conforms("envelope", &out);
    let header: Value = serde_json::from_str(&fs::read_to_string(&g).unwrap()).unwrap();
    assert!(schema("grid_header").is_valid(&header));
    assert_eq!(env["result"]["output"], header);
    assert!(dir.path().join("g.csv").exists());

    let check = conforms("envelope", &ok(&["psh", "check", "--grid", path_str(&g), "--samples", "50"]));
    assert_eq!(check["result"]["pass"], true);

    let h = dir.path().join("h.json");
    ok(&["psh", "mollify", "--grid", path_str(&g), "--delta", "0.2", "--out", path_str(&h), "--binary"]);
    assert!(dir.path().join("h.bin").exists());
    let header: Value = serde_json::from_str(&fs::read_to_string(&h).unwrap()).unwrap();
    assert_eq!(header["format"], "f64le");

    let r = cvxlab(
        &["psh", "mollify", "--grid", path_str(&h), "--delta", "0.6", "--out", path_str(&dir.path().join("k.json"))],
        &[],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("needs at least"), "{}", r.stderr);
}

#[test]
fn verdicts_replay() {
    let dir = tmp();
    let rep = dir.path().join("rep.json");
    ok(&[
        "verify",
        "--suite",
        "weissler",
        "--space",
        "lp:1:2",
        "--p",
        "1.5",
        "--q",
        "3",
        "--seed",
        "2",
        "--out",
        path_str(&rep),
    ]);
    let saved: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    let out = conforms("envelope", &ok(&["verify", "--replay", path_str(&rep)]));
    assert_eq!(out["command"], "verify replay");
    assert_eq!(out["result"]["worst_margin"], saved["worst_margin"]);

    let mut tampered = saved.clone();
    tampered["worst_margin"] = serde_json::json!(saved["worst_margin"].as_f64().unwrap() + 1e-3);
    let bad = write(dir.path(), "bad.json", &tampered.to_string());
    assert_eq!(cvxlab(&["verify", "--replay", path_str(&bad)], &[]).code, 1);
}

//! The binary end to end: outputs, exit codes and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;
use tempfile::TempDir;

const GAUSSIAN: &str = r#"{"mu": 1.0, "nu": 1.0, "alpha": 2.0, "theta": 0.0, "eta": 1.0}"#;
const SKEWED: &str = r#"{"mu": 0.8, "nu": 0.5, "alpha": 1.5, "theta": 0.3, "eta": 1.0}"#;
const NEUTRAL: &str = r#"{"mu": 0.75, "nu": 1.0, "alpha": 0.75, "theta": 0.2, "eta": 1.0}"#;
const ONE_TERM: &str = r#"{"mu": 0.8, "nu": 0.5, "terms": [{"eta": 1.0, "alpha": 1.5, "theta": 0.3}]}"#;
const TWO_TERMS: &str =
    r#"{"mu": 0.9, "nu": 1.0, "terms": [{"eta": 1.0, "alpha": 2.0, "theta": 0.0}, {"eta": 0.5, "alpha": 1.8, "theta": 0.1}]}"#;

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    run_env(args, None)
}

fn run_env(args: &[&dyn AsRef<std::ffi::OsStr>], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracgreen"));
    cmd.args(args.iter().map(|a| a.as_ref()));
    cmd.env_remove("FRACGREEN_THREADS");
    if let Some(n) = threads {
        cmd.env("FRACGREEN_THREADS", n);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `(x, value, err_est, route_tag)` rows of an eval CSV.
fn rows(csv: &str) -> Vec<(f64, f64, f64, String)> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,value,err_est,route_tag"));
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            assert_eq!(c.len(), 4, "{l}");
            (c[0].parse().unwrap(), c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].to_string())
        })
        .collect()
}

fn gaussian(x: f64, t: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
}

#[test]
fn eval_closed_gaussian() {
    let d = Dir::new();
    let p = d.file("g.json", GAUSSIAN);
    let o = run(&[&"eval", &p, &"--route", &"closed", &"--t", &"0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 101);
    for (x, v, _, tag) in r {
        assert!((v - gaussian(x, 0.5)).abs() <= 1e-15 * gaussian(x, 0.5) + 1e-300);
        assert_eq!(tag, "closed_gaussian");
    }
}

#[test]
fn eval_auto_switches_routes() {
    let d = Dir::new();
    let p = d.file("s.json", SKEWED);
    let o = run(&[&"eval", &p, &"--x-min", &"-12", &"--x-max", &"12", &"--t", &"0.2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(&stdout(&o));
    let tags: Vec<&str> = r.iter().map(|r| r.3.as_str()).collect();
    for tag in ["series_ascending", "fourier", "series_descending"] {
        assert!(tags.contains(&tag), "{tag} missing");
    }
    // the ascending series serves the points with x^alpha / (eta t^mu) <= 0.8
    for (x, _, err, tag) in &r {
        if x.abs().powf(1.5) / 0.2f64.powf(0.8) <= 0.79 {
            assert_eq!(tag, "series_ascending", "x = {x}");
        }
        assert!(err.is_finite() && *err >= 0.0);
    }
}

#[test]
fn json_output_mirrors_csv() {
    let d = Dir::new();
    let p = d.file("s.json", SKEWED);
    let (csv, js) = (d.path("o.csv"), d.path("o.json"));
    for (out, fmt) in [(&csv, "csv"), (&js, "json")] {
        let o = run(&[&"eval", &p, &"--points", &"21", &"--kind", &"g2", &"--out", out, &"--format", &fmt]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let r = rows(&std::fs::read_to_string(&csv).unwrap());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), r.len());
    for (row, obj) in r.iter().zip(arr) {
        assert_eq!(obj["x"].as_f64().unwrap(), row.0);
        assert_eq!(obj["value"].as_f64().unwrap(), row.1);
        assert_eq!(obj["err_est"].as_f64().unwrap(), row.2);
        assert_eq!(obj["route_tag"].as_str().unwrap(), row.3);
    }
}

#[test]
fn invalid_params_list_every_violation() {
    let d = Dir::new();
    let p = d.file("bad.json", r#"{"mu": 1.5, "nu": 0.5, "alpha": 2.5, "theta": 0.0, "eta": -1.0}"#);
    let o = run(&[&"eval", &p]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    for field in ["mu", "alpha", "eta"] {
        assert!(e.contains(field), "{field} not named in {e}");
    }
    let o = run(&[&"eval", &d.file("junk.json", "{\"mu\": ")]);
    assert_eq!(code(&o), 2);
    let o = run(&[&"eval", &d.path("missing.json")]);
    assert_eq!(code(&o), 1);
    let o = run(&[&"eval", &d.file("s.json", SKEWED), &"--route", &"closed"]);
    assert_eq!(code(&o), 2, "no closed form for skewed parameters");
    let o = run(&[&"eval", &d.file("m.json", TWO_TERMS), &"--route", &"series"]);
    assert_eq!(code(&o), 2, "series need a single term");
}

#[test]
fn numerical_failure_lists_points() {
    let d = Dir::new();
    let p = d.file("s.json", SKEWED);
    let cfg = d.file("cfg.json", r#"{"k_max": 2.0}"#);
    let o = run(&[&"eval", &p, &"--route", &"fourier", &"--points", &"3", &"--config", &cfg]);
    assert_eq!(code(&o), 3);
    let e = stderr(&o);
    assert!(e.contains("x = ") && e.contains("tolerance not met"), "{e}");
    assert!(stdout(&o).is_empty(), "no partial table");
}

#[test]
fn compare_routes() {
    let d = Dir::new();
    let s = d.file("s.json", SKEWED);
    let o = run(&[&"compare", &s, &"--routes", &"fourier,series", &"--x-min", &"0.05", &"--x-max", &"0.8", &"--points", &"20"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("result: PASS"));

    let n = d.file("n.json", NEUTRAL);
    let o = run(&[&"compare", &n, &"--routes", &"fourier,mellin"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    // x = 0: the kernel diverges for alpha < 1 and the contour route does not apply
    assert!(stdout(&o).contains("skipped (not applicable): 1"), "{}", stdout(&o));

    let o = run(&[&"compare", &s, &"--routes", &"fourier"]);
    assert_eq!(code(&o), 2);
}

/// A route loosened to `rel_tol = 1e-2` widens its own error estimate, so
/// it still agrees with a tight route within the combined estimates. The
/// accuracy requirement `--max-rel` is what turns it into a failure.
#[test]
fn loosened_route_fails_an_accuracy_requirement() {
    let d = Dir::new();
    let s = d.file("s.json", SKEWED);
    let base: [&dyn AsRef<std::ffi::OsStr>; 10] =
        [&"compare", &s, &"--routes", &"fourier,mellin", &"--x-min", &"0.1", &"--x-max", &"5", &"--points", &"50"];
    let loose = [&base[..], &[&"--first-rel-tol", &"1e-2"]].concat();
    let o = run(&loose);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("within combined error estimates: yes"));

    let strict = [&loose[..], &[&"--max-rel", &"1e-9"]].concat();
    let o = run(&strict);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    assert!(stdout(&o).contains("within --max-rel 1e-9: no"));

    let tight = [&base[..], &[&"--max-rel", &"1e-9"]].concat();
    assert_eq!(code(&run(&tight)), 0);
}

fn value_of(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("{key} missing in {out}"))
        .parse()
        .unwrap()
}

#[test]
fn moments() {
    let d = Dir::new();
    let g = d.file("g.json", GAUSSIAN);
    let o = run(&[&"moments", &g, &"--delta", &"-0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    // Gamma(1/2) / Gamma(3/4)
    let exact = 1.446_409_084_632_077;
    assert!((value_of(&out, "closed") - exact).abs() < 1e-12);
    assert!((value_of(&out, "numeric") - exact).abs() < 1e-8);
    assert!(!out.contains("unverified-asymmetric"));

    let s = d.file("s.json", SKEWED);
    let o = run(&[&"moments", &s, &"--delta", &"-0.3", &"--method", &"both"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("flag: unverified-asymmetric"));
    let two = value_of(&out, "closed_two_sided");
    assert!(((two - value_of(&out, "numeric")) / two).abs() < 1e-8);

    let o = run(&[&"moments", &g, &"--delta", &"-2"]);
    assert_eq!(code(&o), 2);
    let o = run(&[&"moments", &d.file("m.json", TWO_TERMS), &"--delta", &"-0.5"]);
    assert_eq!(code(&o), 2);
}

fn delta_field(d: &Dir) -> PathBuf {
    let mut values = vec![0.0; 512];
    values[256] = 10.0;
    d.file("delta.json", &json!({"x0": -25.6, "dx": 0.1, "values": values}).to_string())
}

/// `(x, value)` rows of a field CSV.
fn field_rows(csv: &str) -> Vec<(f64, f64)> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,value"));
    lines
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

#[test]
fn solve_delta_matches_closed_form() {
    let d = Dir::new();
    let g = d.file("g.json", GAUSSIAN);
    let n0 = delta_field(&d);
    let o = run(&[&"solve", &g, &"--n0", &n0, &"--t", &"1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = field_rows(&stdout(&o));
    assert_eq!(r.len(), 512);
    for &(x, v) in &r[206..307] {
        assert!((v - gaussian(x, 1.0)).abs() < 1e-12, "x = {x}");
    }
    // the output is a valid initial field in turn
    let again = d.file("again.csv", &stdout(&o));
    let o = run(&[&"solve", &g, &"--n0", &again, &"--t", &"0.5", &"--format", &"json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mid = v["values"][256].as_f64().unwrap();
    assert!((mid - gaussian(0.0, 1.5)).abs() < 1e-12, "{mid}");
}

#[test]
fn solve_with_source() {
    let d = Dir::new();
    let g = d.file("g.json", GAUSSIAN);
    let zero = json!({"x0": -20.0, "dx": 0.125, "values": vec![0.0; 320]});
    let f: Vec<f64> = (0..320).map(|i| (-(-20.0 + 0.125 * i as f64).powi(2) / 4.0).exp()).collect();
    let slice = json!({"x0": -20.0, "dx": 0.125, "values": f});
    let n0 = d.file("zero.json", &zero.to_string());
    let phi = d.file("phi.json", &json!({"times": [0.0, 1.0], "slices": [slice.clone(), slice]}).to_string());
    let o = run(&[&"solve", &g, &"--n0", &n0, &"--phi", &phi, &"--t", &"0.001"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for ((_, v), fi) in field_rows(&stdout(&o)).iter().zip(&f) {
        assert!((v - 1e-3 * fi).abs() < 2e-6);
    }
    let o = run(&[&"solve", &g, &"--n0", &n0, &"--phi", &phi, &"--t", &"2"]);
    assert_eq!(code(&o), 2, "source does not cover t");
}

#[test]
fn narrow_grid_leaks() {
    let d = Dir::new();
    let g = d.file("g.json", GAUSSIAN);
    let values: Vec<f64> = (0..64).map(|i| (-(-2.0 + 0.0625 * i as f64).powi(2)).exp()).collect();
    let n0 = d.file("narrow.json", &json!({"x0": -2.0, "dx": 0.0625, "values": values}).to_string());
    let o = run(&[&"solve", &g, &"--n0", &n0, &"--t", &"1"]);
    assert_eq!(code(&o), 5);
    assert!(stderr(&o).contains("leaks"), "{}", stderr(&o));
}

#[test]
fn multi_term_files() {
    let d = Dir::new();
    let n0 = delta_field(&d);
    let single = run(&[&"solve", &d.file("s.json", SKEWED), &"--n0", &n0, &"--t", &"1", &"--abs-tol", &"1e-3"]);
    let multi = run(&[&"solve", &d.file("m1.json", ONE_TERM), &"--n0", &n0, &"--t", &"1", &"--abs-tol", &"1e-3"]);
    assert_eq!(code(&single), 0, "{}", stderr(&single));
    assert_eq!(single.stdout, multi.stdout, "one-term file differs from the single-term file");

    let m2 = d.file("m2.json", TWO_TERMS);
    let o = run(&[&"solve", &m2, &"--n0", &n0, &"--t", &"1", &"--abs-tol", &"1e-3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = field_rows(&stdout(&o));
    let mass: f64 = r.iter().map(|(_, v)| v * 0.1).sum();
    assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    let o = run(&[&"eval", &m2, &"--points", &"11"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(rows(&stdout(&o)).iter().all(|r| r.3 == "fourier"));
}

fn eval_bytes(p: &Path, threads: &str) -> Vec<u8> {
    let o = run_env(&[&"eval", &p, &"--points", &"64", &"--x-min", &"-6", &"--x-max", &"6"], Some(threads));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    o.stdout
}

#[test]
fn output_is_independent_of_thread_count() {
    let d = Dir::new();
    let p = d.file("s.json", SKEWED);
    let one = eval_bytes(&p, "1");
    assert_eq!(one, eval_bytes(&p, "3"));
    assert_eq!(one, eval_bytes(&p, "1"));
    let o = run_env(&[&"eval", &p], Some("zero"));
    assert_eq!(code(&o), 2);
}

#[test]
fn quick_selftest_passes() {
    let o = run(&[&"selftest", &"--level", &"quick"]);
    let out = stdout(&o);
    assert_eq!(code(&o), 0, "{out}");
    assert!(out.starts_with("fracgreen selftest (quick)"));
    assert!(out.contains("8 of 8 checks passed"), "{out}");
}

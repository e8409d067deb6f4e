use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polyreach"));
    c.env_remove("POLYREACH_SEED");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Fixtures with 6 patterns and a model fitted from seed-7 synthetic data.
fn workspace() -> (TempDir, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().to_path_buf();
    ok(&d, &["fixtures", "-o", "fx", "--patterns", "6"]);
    ok(&d, &["--seed", "7", "synth", "-o", "samples.csv", "--per-code", "40"]);
    ok(&d, &["fit", "samples.csv", "-o", "coeffs.json"]);
    (tmp, d)
}

fn aggregate(stdout: &str) -> (f64, f64) {
    let line = stdout.lines().find(|l| l.starts_with("verified accuracy")).unwrap();
    let nums: Vec<f64> = line
        .split(|c: char| !(c.is_ascii_digit() || c == '.'))
        .filter_map(|t| t.parse().ok())
        .collect();
    (nums[0], nums[1])
}

#[test]
fn zero_variation_verifies_nominal_accuracy() {
    let (_t, d) = workspace();
    let out = ok(&d, &["verify", "fx/iris.net.json", "fx/nominal.coeffs.json", "fx/iris.patterns.csv"]);
    let (verified, nominal) = aggregate(&out);
    assert_eq!(verified, nominal);
}

#[test]
fn sigma_sweep_is_monotone_and_report_parses() {
    let (_t, d) = workspace();
    let mut last = f64::INFINITY;
    for k in ["1", "2", "3"] {
        let out = ok(
            &d,
            &[
                "verify",
                "fx/mnist_dense.net.json",
                "coeffs.json",
                "fx/mnist_dense.patterns.csv",
                "--sigma-mult",
                k,
                "--report",
                "r.json",
            ],
        );
        let (v, _) = aggregate(&out);
        assert!(v <= last, "k={k}: {v} > {last}");
        last = v;
        let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
        assert_eq!(report["reports"].as_array().unwrap().len(), 6);
        assert_eq!(report["sigma_mult"].as_f64().unwrap(), k.parse::<f64>().unwrap());
    }
}

#[test]
fn truncated_mc_is_fully_enclosed() {
    let (_t, d) = workspace();
    let out = ok(
        &d,
        &[
            "mc",
            "fx/breast.net.json",
            "coeffs.json",
            "fx/breast.patterns.csv",
            "--samples",
            "200",
            "--truncated",
            "--dump",
            "dump.csv",
        ],
    );
    assert!(out.contains("average enclosure 100.00%"), "{out}");
    let dump = std::fs::read_to_string(d.join("dump.csv")).unwrap();
    assert!(dump.starts_with("pattern,seed,d1,d2,d3,y0\n"));
    assert_eq!(dump.lines().count(), 1 + 6 * 200);
}

#[test]
fn mc_is_deterministic_given_seed() {
    let (_t, d) = workspace();
    let args = ["mc", "fx/iris.net.json", "coeffs.json", "fx/iris.patterns.csv", "--samples", "50", "--dump", "a.csv"];
    ok(&d, &args);
    let first = std::fs::read_to_string(d.join("a.csv")).unwrap();
    let out = bin()
        .current_dir(&d)
        .env("POLYREACH_SEED", "0")
        .args(args)
        .arg("--jobs")
        .arg("1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(d.join("a.csv")).unwrap(), first);
    ok(&d, &["--seed", "5", "mc", "fx/iris.net.json", "coeffs.json", "fx/iris.patterns.csv", "--samples", "50", "--dump", "b.csv"]);
    assert_ne!(std::fs::read_to_string(d.join("b.csv")).unwrap(), first);
}

#[test]
fn compare_rows_are_ordered() {
    let (_t, d) = workspace();
    ok(&d, &["compare", "fx/iris.net.json", "coeffs.json", "fx/iris.patterns.csv", "-o", "cmp.csv"]);
    let text = std::fs::read_to_string(d.join("cmp.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("pattern,output,poly_lower"));
    let mut rows = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let poly: f64 = f[4].parse().unwrap();
        let zono: f64 = f[7].parse().unwrap();
        assert!(zono >= poly - 1e-12, "{l}");
        rows += 1;
    }
    assert_eq!(rows, 6 * 3);
}

#[test]
fn compare_identical_without_variation() {
    let (_t, d) = workspace();
    let out = ok(&d, &["compare", "fx/iris.net.json", "fx/nominal.coeffs.json", "fx/iris.patterns.csv"]);
    for l in out.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[2..5], f[5..8], "{l}");
        assert_eq!(f[8], f[9]);
    }
}

#[test]
fn fit_recovers_generator() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--seed", "7", "synth", "-o", "s.csv", "--noise", "0", "--per-code", "30", "--model-out", "gen.json"]);
    ok(d, &["fit", "s.csv", "-o", "fit.json", "--sigma1", "0.05", "--sigma2", "0.05"]);
    let read = |p: &str| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(d.join(p)).unwrap()).unwrap() };
    let (gen, fit) = (read("gen.json"), read("fit.json"));
    let codes = |v: &serde_json::Value| v["codes"].as_array().unwrap().clone();
    let (g, f) = (codes(&gen), codes(&fit));
    assert_eq!(g.len(), f.len());
    for (a, b) in g.iter().zip(&f) {
        assert_eq!(a["code"], b["code"]);
        assert_eq!(a["variant"], b["variant"]);
        for key in ["coeffs", "leak_coeffs"] {
            for (x, y) in a[key].as_array().unwrap().iter().zip(b[key].as_array().unwrap()) {
                assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn usage_errors_exit_two() {
    let (_t, d) = workspace();
    std::fs::write(d.join("empty.csv"), "").unwrap();
    let out = run(&d, &["fit", "empty.csv", "-o", "x.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no samples"));

    std::fs::write(d.join("novariant.csv"), "phi1,phi2,code,measured_weight\n1,1,3,0.1\n").unwrap();
    let out = run(&d, &["fit", "novariant.csv", "-o", "x.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("variant"));

    std::fs::write(d.join("bad.csv"), "phi1,phi2,code,variant,measured_weight\n1,1,3,hidden,0.1\n1,1,3,hidden,oops\n").unwrap();
    let out = run(&d, &["fit", "bad.csv", "-o", "x.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(&d, &["mc", "fx/iris.net.json", "coeffs.json", "fx/iris.patterns.csv", "--samples", "0"]);
    assert_eq!(code(&out), 2);

    // iris patterns against the breast network
    let out = run(&d, &["verify", "fx/breast.net.json", "coeffs.json", "fx/iris.patterns.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn rank_deficient_fit_lists_codes() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("phi1,phi2,code,variant,measured_weight\n");
    for k in 0..20 {
        csv.push_str(&format!("{},1.0,4,hidden,0.5\n", 1.0 + 0.01 * k as f64));
        csv.push_str(&format!("{},1.0,9,first_pos,0.5\n", 1.0 + 0.01 * k as f64));
    }
    std::fs::write(tmp.path().join("s.csv"), csv).unwrap();
    let out = run(tmp.path(), &["fit", "s.csv", "-o", "x.json"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("code 4") && err.contains("code 9"), "{err}");
}

#[test]
fn generator_cap_exits_three() {
    let (_t, d) = workspace();
    let out = run(
        &d,
        &["verify", "fx/iris.net.json", "coeffs.json", "fx/iris.patterns.csv", "--max-dependent", "5"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn emitted_json_reparses() {
    let (_t, d) = workspace();
    let net = std::fs::read_to_string(d.join("fx/mnist_cnn.net.json")).unwrap();
    let parsed = polyreach::NetworkSpec::from_json(&net).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap().trim(), net.trim());
    let coeffs = std::fs::read_to_string(d.join("coeffs.json")).unwrap();
    let m = polyreach::VariationModel::from_json(&coeffs).unwrap();
    assert_eq!(polyreach::VariationModel::from_json(&m.to_json().unwrap()).unwrap(), m);
}

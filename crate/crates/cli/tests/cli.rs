use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use serde_json::Value;

fn hnlab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hnlab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn show(o: &Output) -> String {
    format!("stdout:\n{}\nstderr:\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"
sizes = [40, 80]
reps = 2

[ensemble]
seed = 11
[ensemble.xi]
kind = "uniform"
a = -0.6
b = 0.0
[ensemble.eta]
kind = "uniform"
a = 0.0
b = 0.6
[ensemble.q]
kind = "uniform"
a = -1.5
b = 1.5

[ids]
n = 4000
reps = 2
grid_points = 512

[curve]
x_points = 120
"#;

#[test]
fn quick_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hnlab(&["verify"], &repo_config("quick.toml"), dir.path());
    assert_eq!(code(&o), 0, "{}", show(&o));
    let report = read_json(&dir.path().join("verify.json"));
    assert_eq!(report["kind"], "verify-report");
    assert_eq!(report["seed"], 7);
    assert!(report["payload"]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config_hash"], report["config_hash"]);
}

#[test]
fn impossible_tolerance_exits_with_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(repo_config("quick.toml")).unwrap();
    let broken = text.replace("thouless_budget = 0.03", "thouless_budget = 1e-12");
    assert_ne!(broken, text);
    let cfg = write_config(dir.path(), "broken.toml", &broken);
    let out = dir.path().join("out");
    let o = hnlab(&["verify"], &cfg, &out);
    assert_eq!(code(&o), 4, "{}", show(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] thouless residual"));
    assert!(out.join("verify.json").exists());
}

#[test]
fn invalid_configs_exit_with_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("descending.toml", SMALL.replace("[40, 80]", "[80, 40]")),
        ("typo.toml", SMALL.replace("x_points", "x_pionts")),
        ("nan.toml", SMALL.replace("b = 1.5", "b = nan")),
        ("no_seed.toml", SMALL.replace("seed = 11", "")),
    ];
    for (name, text) in cases {
        let cfg = write_config(dir.path(), name, &text);
        let o = hnlab(&["spectrum"], &cfg, &dir.path().join("out"));
        assert_eq!(code(&o), 2, "{name}: {}", show(&o));
    }
    let o = hnlab(&["spectrum"], &dir.path().join("missing.toml"), &dir.path().join("out"));
    assert_eq!(code(&o), 2);
}

#[test]
fn curve_rejects_heavy_tails_and_raw_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cauchy = SMALL.replace("kind = \"uniform\"\na = -0.6\nb = 0.0", "kind = \"cauchy\"\nloc = 0.0\nscale = 1.0");
    assert_ne!(cauchy, SMALL);
    let raw = SMALL.replace("seed = 11", "seed = 11\nentries = \"raw\"");
    for (name, text) in [("cauchy.toml", cauchy), ("raw.toml", raw)] {
        let cfg = write_config(dir.path(), name, &text);
        let o = hnlab(&["curve"], &cfg, &dir.path().join(name));
        assert_eq!(code(&o), 2, "{name}: {}", show(&o));
    }
}

#[test]
fn zero_coupling_gives_no_arcs() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("a = -0.6\nb = 0.0", "a = -0.3\nb = 0.3").replace("a = 0.0\nb = 0.6", "a = -0.3\nb = 0.3");
    let cfg = write_config(dir.path(), "g0.toml", &text);
    let o = hnlab(&["curve"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", show(&o));
    let model = &read_json(&dir.path().join("curve.json"))["payload"];
    assert_eq!(model["g"].as_f64().unwrap(), 0.0);
    assert!(model["arcs"].as_array().unwrap().is_empty());
    let sigma: f64 = model["sigma"]
        .as_array()
        .unwrap()
        .iter()
        .map(|iv| iv[1].as_f64().unwrap() - iv[0].as_f64().unwrap())
        .sum();
    assert!(sigma > 0.0);
}

#[test]
fn circulant_spectrum_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = hnlab(&["spectrum"], &repo_config("circulant.toml"), dir.path());
    assert_eq!(code(&o), 0, "{}", show(&o));
    let summary = read_json(&dir.path().join("spectrum_summary.json"));
    let first = &summary["payload"][0];
    assert_eq!(first["n"], 4);
    let mut got: Vec<Complex64> = first["runs"][0]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| Complex64::new(p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
        .collect();
    // q - e^η ω - e^ξ / ω with ξ = -0.5, η = 0.5, q = 0 over the 4th roots of unity
    let (a, b) = (0.5f64.exp(), (-0.5f64).exp());
    let mut want = vec![
        Complex64::new(-(a + b), 0.0),
        Complex64::new(a + b, 0.0),
        Complex64::new(0.0, -(a - b)),
        Complex64::new(0.0, a - b),
    ];
    let key = |z: &Complex64| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e6).round() as i64;
    got.sort_by_key(key);
    want.sort_by_key(key);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).norm() < 1e-12, "{g} vs {w}");
    }
}

fn all_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn pipeline_is_byte_reproducible_and_restartable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for stage in ["sample", "spectrum", "curve", "compare"] {
        let o = hnlab(&[stage], &cfg, &a);
        assert_eq!(code(&o), 0, "{stage}: {}", show(&o));
    }
    // second run from the written config, single-threaded, compare first
    for stage in ["compare", "spectrum", "sample"] {
        let o = hnlab(&[stage, "--jobs", "1"], &a.join("config.toml"), &b);
        assert_eq!(code(&o), 0, "{stage}: {}", show(&o));
    }
    let files = all_files(&a);
    assert_eq!(files, all_files(&b));
    for f in files.iter().filter(|f| !f.ends_with("manifest.json")) {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{}", f.display());
    }
    let hash = read_json(&a.join("manifest.json"))["config_hash"].clone();
    for f in &files {
        let text = std::fs::read_to_string(a.join(f)).unwrap();
        if f.extension().is_some_and(|e| e == "csv" || e == "py") {
            assert!(text.contains(&format!("config_hash={}", hash.as_str().unwrap())), "{}", f.display());
        }
    }

    let o = hnlab(&["curve"], &cfg, &a);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[ids] reusing"), "{}", show(&o));
}

#[test]
fn compare_refuses_artifacts_from_another_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let o = hnlab(&["spectrum", "--seed-override", "12"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", show(&o));
    let o = hnlab(&["compare"], &cfg, dir.path());
    assert_eq!(code(&o), 2, "{}", show(&o));
    assert!(String::from_utf8_lossy(&o.stderr).contains("was written for config"));
}

#[test]
fn matrix_market_export_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mm.toml", &format!("{SMALL}\n[sample]\nmatrix_market = true\n"));
    let o = hnlab(&["sample"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", show(&o));
    let j = std::fs::read_to_string(dir.path().join("samples/n40_r0_j.mtx")).unwrap();
    let mut lines = j.lines().filter(|l| !l.starts_with('%'));
    assert_eq!(lines.next(), Some("40 40"));
    assert_eq!(lines.count(), 1600);
    assert!(j.starts_with("%%MatrixMarket") && j.contains("% config_hash="));
    let h = std::fs::read_to_string(dir.path().join("samples/n40_r0_h.mtx")).unwrap();
    assert!(h.contains("40 40 79"));
}

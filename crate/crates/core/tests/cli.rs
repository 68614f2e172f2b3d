use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "q_c_s = 1e6\nq_c_p = 1e6\nq_c_f = 1e6\nupsilon_mhz = 50\ndt = 2e-11\nbin_s = 2e-10\nbin_p = 2e-10\n";

fn zeno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeno-gate")).args(args).output().expect("spawn zeno-gate")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_small(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.display().to_string()
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn help_and_list_succeed() {
    assert_eq!(code(&zeno(&["--help"])), 0);
    let out = zeno(&["list"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("fig4b") && text.contains("upsilon_mhz"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&zeno(&[])), 1);
    assert_eq!(code(&zeno(&["frobnicate"])), 1);
    assert_eq!(code(&zeno(&["simulate", "--scenario", "fig4b"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let out = zeno(&["simulate", "--scenario", "nope", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_configuration_exits_two_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "upsilon_mhz = 610\nq_c_s = -3\nbogus_key = 1\n").unwrap();
    let out = zeno(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("q_c_s") && err.contains("bogus_key"), "{err}");
}

#[test]
fn validate_reports_substitutions() {
    let dir = tempfile::tempdir().unwrap();
    let out = zeno(&["validate", "--config", &write_small(dir.path())]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("configuration valid: 1846 steps"), "{text}");
    assert!(text.contains("(default)") && text.contains("(derived)"));
}

#[test]
fn simulate_is_deterministic_and_reruns_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small(dir.path());
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let r = zeno(&["simulate", "--scenario", "custom", "--config", &config, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(artifacts(&a), artifacts(&b));

    let manifest = a.join("manifest.toml");
    let r = zeno(&["simulate", "--scenario", "custom", "--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let strip = |files: Vec<(String, Vec<u8>)>| files.into_iter().filter(|(n, _)| n != "manifest.toml").collect::<Vec<_>>();
    assert_eq!(strip(artifacts(&a)), strip(artifacts(&c)));

    let text = fs::read_to_string(&manifest).unwrap();
    let parsed: toml::Table = text.parse().unwrap();
    for entry in parsed["artifacts"].as_array().unwrap() {
        let name = entry["name"].as_str().unwrap();
        let bytes = fs::read(a.join(name)).unwrap();
        assert_eq!(entry["bytes"].as_integer().unwrap() as usize, bytes.len());
        assert_eq!(entry["sha256"].as_str().unwrap(), zeno_gate::scenario::sha256_hex(&bytes));
    }
    assert!(!fs::read_dir(&a).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn metrics_csv_has_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = zeno(&["simulate", "--scenario", "custom", "--config", &write_small(dir.path()), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,value\n"));
    for key in ["fidelity", "first_mode_probability", "signal_energy_loss", "a_1"] {
        assert!(metrics.lines().any(|l| l.starts_with(&format!("{key},"))), "{key}");
    }
    let schmidt = fs::read_to_string(out.join("schmidt_coefficients.csv")).unwrap();
    assert!(schmidt.starts_with("n,a_n,a_n_sq\n"));
    assert!(fs::read_to_string(out.join("signal_input.csv")).unwrap().lines().next().unwrap().starts_with("t_s,"));
}

#[test]
fn sweep_accepts_a_single_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let r = zeno(&[
        "sweep-upsilon",
        "--values",
        "80",
        "--scenario",
        "custom",
        "--config",
        &write_small(dir.path()),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(out.join("sweep_upsilon.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn design_writes_triples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("design");
    let r = zeno(&["design", "--radius", "2e-5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(out.join("triples.csv")).unwrap();
    assert!(csv.starts_with(zeno_gate::qpm::TRIPLE_CSV_HEADER));
    assert!(csv.lines().count() > 1);
}

#[test]
fn design_rejects_a_bad_band() {
    let dir = tempfile::tempdir().unwrap();
    let r = zeno(&["design", "--radius", "2e-5", "--band", "1700,1000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 1);
}

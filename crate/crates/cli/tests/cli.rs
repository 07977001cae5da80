use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

fn corm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corm"))
        .args(args)
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    let out = corm(args);
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(
        code(&[
            "check",
            "--spec",
            path(&spec("gamma_stable.toml")),
            "--out",
            out
        ]),
        1
    );
    assert_eq!(
        code(&[
            "check",
            "--spec",
            path(&spec("beta_stable.toml")),
            "--out",
            out
        ]),
        0
    );
    let csv = std::fs::read_to_string(dir.path().join("conditions.csv")).unwrap();
    assert!(csv.starts_with("j,condition,value,error_estimate,verdict,exponent\n"));
    assert!(dir.path().join("verdict.json").exists());
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "dimension = 1\n[directing]\nfamily = \"sigma_stable\"\nsigma = 2.0\n",
    )
    .unwrap();
    let out = corm(&["check", "--spec", path(&bad), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    assert_eq!(code(&["check", "--spec", "/no/such/file.toml"]), 64);
    assert_eq!(code(&["check"]), 64);
    assert_eq!(code(&["frobnicate"]), 64);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn tails_recovers_stable_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let s = spec("mixed_normalized_stable.toml");
    assert_eq!(code(&["tails", "--spec", path(&s), "--out", out]), 0);
    let csv = std::fs::read_to_string(dir.path().join("tails_2.csv")).unwrap();
    assert!(csv.starts_with("y,U_star,U_j,ratio\n"));
    assert_eq!(csv.lines().count(), 51);
    assert_eq!(
        code(&[
            "tails",
            "--spec",
            path(&s),
            "--grid",
            "1e-3:1e-1:0",
            "--out",
            out
        ]),
        64
    );
    assert_eq!(
        code(&[
            "tails",
            "--spec",
            path(&s),
            "--grid",
            "nonsense",
            "--out",
            out
        ]),
        64
    );
    assert_eq!(
        code(&[
            "tails",
            "--spec",
            path(&spec("gamma_stable.toml")),
            "--out",
            out
        ]),
        1
    );
}

#[test]
fn verify_intensity_pass_rule() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let s = spec("exponential_gamma_process.toml");
    assert_eq!(
        code(&[
            "verify-intensity",
            "--spec",
            path(&s),
            "--d",
            "1,2,3",
            "--out",
            out
        ]),
        0
    );
    let csv = std::fs::read_to_string(dir.path().join("intensity.csv")).unwrap();
    assert!(csv.starts_with("d,s,sum,direct,derivative,method,rel_dev,pass\n"));
    assert_eq!(csv.lines().count(), 61);
    assert_eq!(
        code(&[
            "verify-intensity",
            "--spec",
            path(&s),
            "--d",
            "1",
            "--tol",
            "1e-9",
            "--out",
            out
        ]),
        0
    );
    assert_eq!(
        code(&[
            "verify-intensity",
            "--spec",
            path(&s),
            "--tol",
            "0",
            "--out",
            out
        ]),
        1
    );
    let beta = spec("beta_stable.toml");
    assert_eq!(
        code(&["verify-intensity", "--spec", path(&beta), "--out", out]),
        64
    );
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = spec("mixed_normalized_stable.toml");
    let args = |dir: &Path| {
        vec![
            "simulate".to_owned(),
            "--spec".into(),
            path(&s).into(),
            "--reps".into(),
            "50".into(),
            "--seed".into(),
            "3".into(),
            "--truncation".into(),
            "1e-5".into(),
            "--out".into(),
            path(dir).into(),
        ]
    };
    for dir in [a.path(), b.path()] {
        let argv = args(dir);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert_eq!(code(&argv), 0);
    }
    for file in ["atoms.csv", "sim_report.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    let strip = |dir: &Path| -> serde_json::Value {
        let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let m = v.as_object_mut().unwrap();
        m.remove("timestamp");
        m.remove("command");
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    let m = strip(a.path());
    assert_eq!(m["seed"], 3);
    assert_eq!(m["spec_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_guards() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let ill = spec("gamma_stable.toml");
    assert_eq!(
        code(&[
            "simulate",
            "--spec",
            path(&ill),
            "--reps",
            "10",
            "--out",
            out
        ]),
        1
    );
    assert!(!dir.path().join("atoms.csv").exists());
    let forced = corm(&[
        "simulate",
        "--spec",
        path(&ill),
        "--reps",
        "10",
        "--truncation",
        "1e-4",
        "--force",
        "--out",
        out,
    ]);
    assert!(
        dir.path().join("atoms.csv").exists(),
        "{}",
        String::from_utf8_lossy(&forced.stderr)
    );
    let ok = spec("beta_stable.toml");
    assert_eq!(
        code(&["simulate", "--spec", path(&ok), "--reps", "0", "--out", out]),
        64
    );
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approxc_core::eval::{eval_exact, Env, EvalConfig};
use approxc_core::lang::{infer_type, parse, TyCtx};

fn approxc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_approxc")).args(args).current_dir(dir).output().expect("binary runs")
}

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn setup(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn compile_writes_approximation_and_error() {
    let dir = setup(&[("pi.ax", &fs::read_to_string(corpus("pi.ax")).unwrap())]);
    let o = approxc(&["compile", "pi.ax"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let approx = fs::read_to_string(dir.path().join("pi.approx.ax")).unwrap();
    assert_eq!(approx.trim(), "(float 3.141592653589793)");
    let err = fs::read_to_string(dir.path().join("pi.err.ax")).unwrap();
    let err = parse(err.trim()).unwrap();
    assert_eq!(infer_type(&TyCtx::new(), &err).unwrap().to_string(), "ErrReal");
    let deriv: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("pi.derivation.json")).unwrap()).unwrap();
    assert_eq!(deriv["derivation"]["rule"], "R-Lit");
}

#[test]
fn emitted_error_reparses_at_its_type() {
    let dir = setup(&[("f.ax", "(lam (x Real) (lam (n Nat) (*r (sinr x) (nat2real n))))")]);
    let o = approxc(&["compile", "f.ax", "--emit", "err"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(!dir.path().join("f.approx.ax").exists());
    let err = parse(fs::read_to_string(dir.path().join("f.err.ax")).unwrap().trim()).unwrap();
    let ty = infer_type(&TyCtx::new(), &err).unwrap();
    assert_eq!(ty.to_string(), "(-> Real ErrReal Nat Nat ErrReal)");
}

#[test]
fn perforated_check_by_label_and_offset() {
    let src = fs::read_to_string(corpus("sum8.ax")).unwrap();
    let dir = setup(&[("sum8.ax", &src)]);
    for site in ["L0=2", "0=2"] {
        let o = approxc(&["check", "sum8.ax", "--perforate", site, "--trials", "100", "--json"], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        let report: serde_json::Value = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).next_back().unwrap();
        assert_eq!(report["schema"], "approxc.check-report/v1");
        assert_eq!(report["passes"], 100);
        let err = parse(fs::read_to_string(dir.path().join("sum8.err.ax")).unwrap().trim()).unwrap();
        let bound = eval_exact(&err, &Env::new(), &EvalConfig::default()).unwrap();
        assert_eq!(bound.to_string(), "4");
    }
    let o = approxc(&["compile", "sum8.ax", "--perforate", "L3=2"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn refuted_weakening_is_a_failure() {
    let dir = setup(&[("t.ax", "1/3"), ("t.opts.json", r#"{"weaken": "(err 0)"}"#)]);
    let o = approxc(&["compile", "t.ax"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("side condition failed"));
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = setup(&[("bad.ax", "(+r 1")]);
    assert_eq!(code(&approxc(&["compile", "missing.ax"], dir.path())), 2);
    let o = approxc(&["compile", "bad.ax"], dir.path());
    assert_eq!(code(&o), 2);
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim().lines().count(), 1);
    assert_eq!(code(&approxc(&["check", "bad.ax", "--trials", "abc"], dir.path())), 2);
}

#[test]
fn corpus_directory_reports_per_file() {
    let dir = setup(&[("a.ax", "(+r 1/2 1/3)"), ("b.ax", "(lam"), ("c.ax", "(lam (x Real) (absr x))")]);
    let o = approxc(&["check", ".", "--trials", "20", "--json"], dir.path());
    assert_eq!(code(&o), 2);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["schema"], "approxc.corpus-report/v1");
    assert_eq!(report["errors"], 1);
    assert_eq!(report["failures"], 0);
    assert_eq!(report["programs"][2]["check"]["passes"], 20);
}

#[test]
fn runs_are_byte_identical() {
    let run = || {
        let dir = setup(&[("d.ax", "(lam (x Real) (if (leqr x 1) (*r x x) (sinr x)))")]);
        let o = approxc(&["check", "d.ax", "--trials", "200", "--json"], dir.path());
        assert_eq!(code(&o), 0);
        (o.stdout, fs::read(dir.path().join("d.check.json")).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn axiom_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = approxc(&["axioms", "--trials", "60", "--json", "--out", "reports"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let docs: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(docs.len(), 7);
    assert!(docs.iter().all(|d| d["schema"] == "approxc.axiom-report/v1"));
    assert!(dir.path().join("reports/axioms-0.json").exists());
}

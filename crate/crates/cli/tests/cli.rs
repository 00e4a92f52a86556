use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn ppcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppcf"))
        .args(args)
        .env_remove("PPCF_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn parse_prints_normalized_source() {
    let o = ppcf(&["parse", "let x = sample in x+1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "let x = sample in x + 1");
}

#[test]
fn parse_errors_report_a_position() {
    let o = ppcf(&["parse", "(("]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:3"));
}

#[test]
fn typecheck_prints_types_and_rejects_bad_terms() {
    let o = ppcf(&["typecheck", "fun x : real -> x"]);
    assert_eq!(stdout(&o).trim(), "real -> real");
    assert_eq!(ppcf(&["typecheck", "3 4"]).status.code(), Some(2));
}

#[test]
fn programs_come_from_files_and_stdin() {
    let dir = std::env::temp_dir().join(format!("ppcf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("prog.ppcf");
    std::fs::write(&path, "def two = 2;\ntwo * 3\n").unwrap();
    let o = ppcf(&["denote", path.to_str().unwrap(), "--intervals", "{6}"]);
    assert_eq!(json(&o)["masses"][0]["mass"], 1.0);

    let mut child = Command::new(env!("CARGO_BIN_EXE_ppcf"))
        .args(["typecheck", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"sample + 1").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(stdout(&o).trim(), "real");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn run_reports_estimates() {
    let o = ppcf(&["run", "#bernoulli 0.3", "--runs", "200", "--intervals", "{0};{1}"]);
    let v = json(&o);
    let hits: u64 = v["estimates"].as_array().unwrap().iter().map(|e| e["hits"].as_u64().unwrap()).sum();
    assert_eq!(hits, 200);
    assert_eq!(v["exhausted"], 0);
}

#[test]
fn seed_variable_overrides_the_flag() {
    let run = |env: Option<&str>, seed: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ppcf"));
        cmd.args(["run", "sample", "--runs", "5", "--seed", seed]).env_remove("PPCF_SEED");
        if let Some(s) = env {
            cmd.env("PPCF_SEED", s);
        }
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("3"), "9"), run(None, "3"));
    assert_ne!(run(None, "9"), run(None, "3"));
}

#[test]
fn denote_reports_atoms_and_cdf() {
    let v = json(&ppcf(&["denote", "ifz 0 then 3 + 2 else 1"]));
    assert_eq!(v["total_mass"], 1.0);
    assert_eq!(v["atoms"].as_array().unwrap().len(), 1);
    let v = json(&ppcf(&["denote", "#exponential", "--cdf", "0:2:4"]));
    let masses = v["masses"].as_array().unwrap();
    assert_eq!(masses.len(), 5);
    let last = masses[4]["mass"].as_f64().unwrap();
    assert!((last - (1.0 - (-2f64).exp())).abs() < 1e-9);
}

#[test]
fn check_exit_code_follows_the_verdict() {
    let ok = ppcf(&["check", "#bernoulli 0.3", "--intervals", "{1}", "--runs", "2000"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["pass"], true);
    // With no steps allowed every run exhausts, far below the mass 1 on {5}.
    let bad = ppcf(&["check", "3 + 2", "--intervals", "{5}", "--runs", "1000", "--budget", "0"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn check_writes_csv() {
    let o = ppcf(&["check", "#bernoulli 0.3", "--intervals", "{0};{1}", "--runs", "500", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("U,denotational_mass,empirical_mass,dkw_bound"));
    assert!(lines[1].starts_with("{0},0.7,"));
}

#[test]
fn stability_verdicts() {
    let wpor = ppcf(&["stability", "wpor"]);
    assert_eq!(wpor.status.code(), Some(1));
    assert_eq!(json(&wpor)["verdict"], "fail");
    let poly = ppcf(&["stability", "poly", "--coeffs", "0,1,1", "--n", "2"]);
    assert_eq!(poly.status.code(), Some(0));
    assert_eq!(json(&poly)["function"], "x + x^2");
    let product = ppcf(&["stability", "--fn", "x1 * x2"]);
    assert_eq!(json(&product)["verdict"], "pass");
    let parity = ppcf(&["stability", "--fn", "x1 + x2 - x1 * x2"]);
    assert_eq!(json(&parity)["verdict"], "fail");
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lpconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpconv"))
        .args(args)
        .env("LPCONV_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(dir: &Path, config: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["--out", out];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["run", config.to_str().unwrap()]);
    lpconv(&args)
}

const SMOKE: &str = "[[experiment]]\nname = \"duality\"\ngroup = \"cyclic:12\"\nseed = 12\nparams = { p = \"3\" }\n";

#[test]
fn duality_on_z12_passes_with_fifty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "smoke.toml", SMOKE);
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("duality.report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 50);
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["spec"]["group"], "cyclic:12");
    let csv = std::fs::read_to_string(dir.path().join("duality.rows.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("group,p,q,radius,lower,upper,factor,verdict"));
    assert_eq!(lines.count(), 50);
    assert!(dir.path().join("smoke.summary.json").exists());
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[[experiment]]\nname = \"duality\"\ngruop = \"cyclic:12\"\n");
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gruop"));
}

#[test]
fn bad_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (i, body) in [
        "name = \"duality\"\ngroup = \"cyclic:12\"\nparams = { p = \"3\", smaples = \"2\" }",
        "name = \"duality\"\ngroup = \"cyclic:12\"",
        "name = \"dualty\"\ngroup = \"cyclic:12\"",
        "name = \"duality\"\ngroup = \"cyclic\"\nparams = { p = \"3\" }",
        "name = \"duality\"\ngroup = \"cyclic:12\"\nparams = { p = \"0.5\" }",
        "name = \"duality\"\ngroup = \"cyclic:12\"\nparams = { p = 3 }",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("b{i}.toml"), &format!("[[experiment]]\n{body}\n"));
        let out = run(dir.path(), &cfg, &[]);
        assert_eq!(out.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = lpconv(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_list_exits_0_with_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.toml", "# nothing to run\n");
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("empty.summary.json")).unwrap()).unwrap();
    assert_eq!(s["blocks"].as_array().unwrap().len(), 0);
    assert_eq!(s["verdict"], "pass");
}

#[test]
fn failed_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fail.toml",
        "[[experiment]]\nname = \"idempotent\"\ngroup = \"z\"\nparams = { kernel = \"(0)=1 | (1)=0.1 | (-1)=0.1\", max_iter = \"1\" }\n",
    );
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("idempotent.rows.csv").exists());
}

#[test]
fn radius_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "big.toml",
        "[[experiment]]\nname = \"duality\"\ngroup = \"free:2\"\nparams = { p = \"3\", samples = \"1\" }\nschedule = { radii = [2, 4] }\n",
    );
    let out = run(dir.path(), &cfg, &["--max-radius", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("largest completed radius 3"), "{err}");
}

#[test]
fn same_seed_same_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "smoke.toml", SMOKE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(run(&a, &cfg, &[]).status.code(), Some(0));
    assert_eq!(run(&b, &cfg, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run(&c, &cfg, &["--seed", "13"]).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("duality.rows.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn list_is_sorted_and_stable() {
    let a = lpconv(&["list"]);
    let b = lpconv(&["list"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names.len(), 16);
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(text.lines().all(|l| l.contains("checks:") && l.contains("requires:")));
}

//! End-to-end runs of the `fragcgp` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fragcgp"));
    c.env_remove("FRAGCGP_THREADS").env_remove("RAYON_NUM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn decompose_reports_xxz_count() {
    let o = run(&["decompose", "--model", "xxz", "--L", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("K=5"));
    let rows: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(rows[0], "J,n,d");
    assert_eq!(rows.len(), 6);
}

#[test]
fn decompose_text_report_and_w_export() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let w = dir.path().join("w.coo");
    let o = run(&[
        "decompose", "--model", "tl", "--L", "4", "--format", "structured-text", "--out",
        report.to_str().unwrap(), "--export-w", w.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("decompose model=tl L=4 d=81 K=64"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["decomposition"]["K"], 64);
    assert_eq!(v["analytic_K"], 64);
    assert_eq!(v["sum_rules_hold"], true);
    let lines = std::fs::read_to_string(w).unwrap();
    assert!(lines.lines().all(|l| l.split_whitespace().count() == 4));
}

#[test]
fn evolve_cgp_rows_respect_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&["evolve-cgp", "--model", "tjz", "--L", "3", "--seed", "0", "--n-times", "200", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fragcgp::io::read_time_rows(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.k == 15 && r.f >= 15.0 - 1e-8));
}

#[test]
fn haar_summary_agrees_with_analytic() {
    let o = run(&["haar", "--model", "tl", "--L", "2", "--n-samples", "2000", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 2000);
    assert_eq!(v["within_3_stderr"], true);
    let o = run(&["haar", "--model", "xxz", "--L", "3", "--n-samples", "500", "--format", "text"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (m, a, s) = (v["mean"].as_f64().unwrap(), v["analytic"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
    assert!((m - a).abs() <= 3.0 * s);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["decompose", "--model", "tl", "--L", "3"],
        vec!["decompose", "--model", "heisenberg", "--L", "3"],
        vec!["decompose", "--model", "xxz"],
        vec!["evolve-cgp", "--model", "xxz", "--L", "2", "--n-times", "1"],
        vec!["evolve-cgp", "--model", "xxz", "--L", "2", "--window-min", "5", "--window-max", "5"],
        vec!["sweep", "--model", "xxz", "--L-list", "2,x"],
        vec!["fit", "--input", "/nonexistent/sweep.csv"],
        vec!["nonsense"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = bin().env("FRAGCGP_THREADS", "zero").args(["decompose", "--model", "xxz", "--L", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_data_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "model,L,d,K,seed,n_times,mean_f,stderr_f,mean_cgp\nxxz,2,4,3,0,2,nan-ish,0,0\n").unwrap();
    let o = run(&["fit", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

fn sweep_file(dir: &Path, name: &str, threads: &str) -> Vec<u8> {
    let out = dir.join(name);
    let o = bin()
        .env("FRAGCGP_THREADS", threads)
        .args(["sweep", "--model", "tjz", "--L-list", "2,3,4", "--seed", "0,1", "--n-times", "30", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    std::fs::read(out).unwrap()
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = sweep_file(dir.path(), "a.csv", "1");
    let b = sweep_file(dir.path(), "b.csv", "3");
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("s.csv");
    std::fs::write(
        &cfg,
        format!("# sweep settings\ncommand = sweep\nmodel = xxz\nL-list = 2,3,4\nn-times = 10\nn-samples = 5\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--n-times", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let recs = fragcgp::io::read_sweep(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(recs.iter().map(|r| r.k).collect::<Vec<_>>(), vec![3, 4, 5]);
    assert!(recs.iter().all(|r| r.n_times == 12));
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "decompose", "--model", "xxz", "--L", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_and_plot_export_from_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("s.csv");
    let o = run(&["sweep", "--model", "tjz", "--L-list", "2,3,4", "--n-times", "20", "--out", sweep.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["fit", "--input", sweep.to_str().unwrap(), "--format", "text"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let b = v["fit"]["B"].as_f64().unwrap();
    assert!(b > v["comparison"]["analytic_k_exponent"].as_f64().unwrap());
    let plots = dir.path().join("plots");
    let o = run(&["export-plotdata", "--input", sweep.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = fragcgp::io::read_columns(&std::fs::read_to_string(plots.join("tjz_K.dat")).unwrap()).unwrap();
    assert_eq!(k.len(), 3);
    assert!((k[0].1 - 7f64.ln()).abs() < 1e-10);
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "model,L,d,K,seed,n_times,mean_f,stderr_f,mean_cgp\n").unwrap();
    let o = run(&["export-plotdata", "--input", empty.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn model_export_writes_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["model-export", "--model", "tjz", "--L", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["H.coo", "t_1.coo", "Jz_1.coo", "h_1.coo", "g_2.coo", "couplings.csv", "model.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let spec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(spec["L"], 2);
}

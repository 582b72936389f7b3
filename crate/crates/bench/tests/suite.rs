use std::process::Command;

use dlnn_bench::config::{Experiment, ExperimentSpec, RegKind, RegSpec};
use dlnn_bench::data::Init;
use dlnn_bench::trace_io::{read_summary, read_trace};
use dlnn_bench::{run_suite, BenchError};

fn spec(out: &std::path::Path) -> ExperimentSpec {
    ExperimentSpec { out: out.to_path_buf(), ..Default::default() }
}

#[test]
fn single_run_writes_one_trace() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec { algorithms: vec!["bpg".into()], max_iters: 10, ..spec(dir.path()) };
    let report = run_suite(&s).unwrap();
    assert_eq!(report.trace_files.len(), 1);
    let text = std::fs::read_to_string(&report.trace_files[0]).unwrap();
    assert_eq!(text.lines().count(), 11);
    let rows = read_trace(&report.trace_files[0]).unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(read_summary(&report.summary_file).unwrap(), report.summary);
}

#[test]
fn relative_objective_is_non_negative_and_attains_zero() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec { max_iters: 200, seeds: 2, ..spec(dir.path()) };
    let report = run_suite(&s).unwrap();
    for seed in 0..2u64 {
        let mut best = f64::INFINITY;
        for f in &report.trace_files {
            if !f.to_string_lossy().ends_with(&format!("_seed{seed}.csv")) {
                continue;
            }
            for row in read_trace(f).unwrap() {
                let rel = row.rel_objective.unwrap();
                assert!(rel >= 0.0);
                best = best.min(rel);
            }
        }
        assert_eq!(best, 0.0);
    }
}

#[test]
fn suite_is_deterministic_apart_from_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_suite(&ExperimentSpec { max_iters: 50, seeds: 2, ..spec(a.path()) }).unwrap();
    run_suite(&ExperimentSpec { max_iters: 50, seeds: 2, ..spec(b.path()) }).unwrap();
    for f in &ra.trace_files {
        let name = f.file_name().unwrap();
        let strip = |p: &std::path::Path| -> Vec<String> {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| {
                    let mut cols: Vec<&str> = l.split(',').collect();
                    cols[3] = "";
                    cols.join(",")
                })
                .collect()
        };
        assert_eq!(strip(f), strip(&b.path().join(name)));
    }
}

#[test]
fn unwritable_output_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let s = ExperimentSpec { max_iters: 100_000_000, ..spec(&blocker.join("out")) };
    let t = std::time::Instant::now();
    let e = run_suite(&s).unwrap_err();
    assert!(matches!(e, BenchError::Io { .. }), "{e}");
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn experiment_two_runs_with_rectangular_layers() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec {
        experiment: Experiment::Exp2,
        max_iters: 100,
        init: Init::Uniform { low: 0.0, high: 0.1 },
        reg: RegSpec { kind: RegKind::L1, ..Default::default() },
        ..spec(dir.path())
    };
    let report = run_suite(&s).unwrap();
    assert_eq!(report.summary.len(), 9);
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    for row in &report.summary {
        assert!(row.final_objective.is_finite());
    }
}

#[test]
fn custom_data_import() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    std::fs::write(&x, "1,0,0.5\n0,1,0.5\n").unwrap();
    std::fs::write(&y, "1,2,1.5\n").unwrap();
    let s = ExperimentSpec {
        experiment: Experiment::Custom,
        layers: 2,
        x_csv: Some(x),
        y_csv: Some(y),
        max_iters: 500,
        reg: RegSpec { kind: RegKind::None, ..Default::default() },
        ..spec(&dir.path().join("out"))
    };
    let report = run_suite(&s).unwrap();
    // y = [1, 2]·x is exactly representable, so the loss goes to ~0.
    let best = report.summary.iter().map(|r| r.final_objective).fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6, "{best}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dlnn-bench"))
}

#[test]
fn cli_lists_algorithms() {
    let out = bin().arg("--list-algos").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let tags: Vec<&str> = text.lines().collect();
    assert_eq!(
        tags,
        ["bpg", "bpg-wb", "cocain", "cocain-cfi", "palm", "ipalm-0.2", "ipalm-0.4", "fbs-wb", "ipiano-wb"]
    );
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let status = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();
    let o = out.to_str().unwrap();
    assert_eq!(status(&["run", "--iters", "3", "--algos", "bpg,palm", "--out", o]), 0);
    assert_eq!(status(&["run", "--algos", "adam", "--out", o]), 1);
    assert_eq!(status(&["run", "--reg", "elastic", "--out", o]), 1);
    assert_eq!(status(&["run", "--layers", "4", "--out", o, "--config", "/nonexistent.json"]), 1);

    let cfg = dir.path().join("huge.json");
    std::fs::write(&cfg, r#"{"init": {"kind": "constant", "value": 1e70}, "layers": 5}"#).unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(status(&["run", "--config", c, "--algos", "bpg", "--iters", "5", "--out", o]), 2);
}

#[test]
fn cli_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"layers": 4, "max_iters": 7, "algorithms": ["palm"], "reg": {"kind": "l1", "mu": 0.2}}"#).unwrap();
    let out = dir.path().join("o");
    let st = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--iters", "4", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let resolved: ExperimentSpec =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved.layers, 4);
    assert_eq!(resolved.max_iters, 4);
    assert_eq!(resolved.reg.mu, 0.2);
    assert_eq!(resolved.reg.kind, RegKind::L1);
    let rows = read_trace(&out.join("trace_palm_seed0.csv")).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn config_file_can_switch_init_variant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"init": {"kind": "uniform", "low": 0.0, "high": 0.1}, "algorithms": ["bpg"]}"#).unwrap();
    let out = dir.path().join("o");
    for sub in ["run", "stats"] {
        let st = bin()
            .args([sub, "--config", cfg.to_str().unwrap(), "--iters", "2", "--seeds", "1", "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(st.status.success(), "{sub}: {}", String::from_utf8_lossy(&st.stderr));
        let resolved: ExperimentSpec =
            serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
        assert_eq!(resolved.init, Init::Uniform { low: 0.0, high: 0.1 });
    }
}

#[test]
fn stats_mode_summarizes_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let st = bin()
        .args(["stats", "--iters", "5", "--algos", "bpg,cocain-cfi", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(st.status.success());
    let summary = read_summary(&out.join("summary.csv")).unwrap();
    for alg in ["bpg", "cocain-cfi"] {
        assert_eq!(summary.iter().filter(|r| r.algorithm == alg).count(), 40);
    }
}

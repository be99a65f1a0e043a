use std::path::PathBuf;
use std::process::Command;

use burgers_rb_cli::*;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(configs().join(name)).unwrap()
}

fn small_table1() -> FileConfig {
    let mut cfg = FileConfig::parse(&read("table1.toml")).unwrap();
    cfg.problem.num_intervals = 16;
    cfg.problem.horizon = 0.4;
    cfg.rb.sample_size = 3;
    cfg.scm.sample_size = 4;
    cfg
}

#[test]
fn params_set_1_file_loads() {
    let cfg = FileConfig::load(&configs().join("params_set_1.toml")).unwrap();
    let p = cfg.problem_config();
    assert_eq!((p.num_intervals, p.dt, p.horizon), (40, 0.02, 2.0));
    assert_eq!((p.ranges.nu.min, p.ranges.nu.max), (1.0, 1.0));
    assert_eq!(p.penalty, 1e7);
    assert_eq!(p.num_steps(), 100);
    let mu = cfg.point().unwrap();
    assert!((mu.b1_mean - 1.28224).abs() < 5e-6);
    let again: FileConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn every_shipped_config_parses() {
    for name in ["params_set_1.toml", "params_set_2.toml", "table1.toml", "benchmark1.toml", "benchmark2.toml"] {
        let cfg = FileConfig::load(&configs().join(name)).unwrap();
        cfg.point().unwrap();
    }
}

#[test]
fn missing_key_is_named() {
    let text = read("params_set_1.toml").replace("horizon = 2.0\n", "");
    let err = format!("{:#}", FileConfig::parse(&text).unwrap_err());
    assert!(err.contains("horizon"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let text = read("params_set_1.toml").replace("[problem]\n", "[problem]\nviscosity = 1.0\n");
    let err = format!("{:#}", FileConfig::parse(&text).unwrap_err());
    assert!(err.contains("viscosity"), "{err}");
}

#[test]
fn nonpositive_time_step_is_rejected() {
    let text = read("params_set_1.toml").replace("dt = 0.02", "dt = 0.0");
    assert!(FileConfig::parse(&text).is_err());
    let text = read("params_set_1.toml").replace("dt = 0.02", "dt = -0.02");
    assert!(FileConfig::parse(&text).is_err());
}

#[test]
fn model_round_trips_through_json() {
    let cfg = small_table1();
    let model = offline_build(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, model);
    let mu = cfg.point().unwrap();
    assert_eq!(back.certify(&mu).unwrap().bounds, model.certify(&mu).unwrap().bounds);
}

#[test]
fn model_from_other_frequencies_is_incompatible() {
    let cfg = small_table1();
    let model = offline_build(&cfg).unwrap();
    let mut other = cfg.clone();
    other.frequencies.u0 = vec![2.0];
    let err = online_solve(&other, &model).unwrap_err();
    let core = err.downcast_ref::<burgers_rb::Error>().unwrap();
    assert!(matches!(core, burgers_rb::Error::Incompatible(_)), "{core:?}");
}

#[test]
fn outputs_are_reproducible() {
    let cfg = small_table1();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let model = offline_build(&cfg).unwrap();
        let cert = online_solve(&cfg, &model).unwrap();
        let on = dir.path().join(format!("on{run}.csv"));
        write_online_csv(&on, &cert, cfg.problem.dt).unwrap();
        let scm = dir.path().join(format!("scm{run}.csv"));
        write_scm_csv(&scm, &scm_rows(&model, &cfg.point().unwrap()).unwrap()).unwrap();
        files.push((std::fs::read(on).unwrap(), std::fs::read(scm).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn scm_report_sandwiches_exact_values() {
    let cfg = small_table1();
    let model = offline_build(&cfg).unwrap();
    let rows = scm_rows(&model, &cfg.point().unwrap()).unwrap();
    assert_eq!(rows.len(), 20);
    for r in rows {
        let slack = 1e-9 * (1.0 + r.c_exact.abs());
        assert!(r.c_inf <= r.c_exact + slack && r.c_exact <= r.c_sup + slack, "{r:?}");
    }
}

#[test]
fn benchmark_rows_share_one_sample() {
    let mut cfg = FileConfig::parse(&read("benchmark1.toml")).unwrap();
    cfg.problem.horizon = 0.4;
    cfg.benchmark.eval_samples = 8;
    cfg.benchmark.n_max = 4;
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.iter().map(|r| r.size).collect::<Vec<_>>(), vec![2, 3, 4]);
    for r in &report.rows {
        assert!(r.max_rel_bound >= r.max_rel_error && r.mean_rel_bound >= r.mean_rel_error);
    }
}

#[test]
fn binary_writes_csv_and_fails_cleanly() {
    let exe = env!("CARGO_BIN_EXE_burgers-rb");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("full.csv");
    let run = Command::new(exe).args(["full-solve", "--config"]).arg(configs().join("params_set_1.toml")).arg("--out").arg(&out).output().unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("eps_b"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,x0,x1,"));
    assert_eq!(text.lines().count(), 102);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, read("params_set_1.toml").replace("dt = 0.02", "dt = 0.0")).unwrap();
    let run = Command::new(exe).args(["full-solve", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
}

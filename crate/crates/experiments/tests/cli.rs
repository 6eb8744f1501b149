use std::path::Path;
use std::process::Command;

use htsgd_experiments::config::Overrides;
use htsgd_experiments::{run_experiment, ExperimentConfig, ExperimentKind, Manifest};

fn cfg(kind: ExperimentKind, file: &str, out: &Path) -> ExperimentConfig {
    let ov = Overrides { out_dir: Some(out.to_path_buf()), ..Default::default() };
    ExperimentConfig::resolve(kind, Some(file), None, &ov).unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn htsgd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_htsgd"));
    c.env_remove("HTSGD_SEED");
    c
}

#[test]
fn constant_path_rows_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let file = r#"{"replications": 3, "alpha": 1.5}"#;
    let mut a = cfg(ExperimentKind::ConstantPath, file, &dir.path().join("a"));
    a.threads = Some(1);
    let mut b = cfg(ExperimentKind::ConstantPath, file, &dir.path().join("b"));
    b.threads = Some(3);
    let ma = run_experiment(&a).unwrap();
    let mb = run_experiment(&b).unwrap();
    let path = dir.path().join("a/path.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5002);
    assert_eq!(header(&path), "t,coord1,coord2,scaled_err1,scaled_err2,jump_flag");
    for name in ["path.csv", "jumps.csv", "path.svg"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(name)).unwrap(), std::fs::read(dir.path().join("b").join(name)).unwrap(), "{name}");
    }
    assert_eq!(ma.summary, mb.summary);
    assert_eq!(ma.config_hash, mb.config_hash);
    let svg = std::fs::read_to_string(dir.path().join("a/path.svg")).unwrap();
    assert!(svg.contains("<polyline"));
}

#[test]
fn replication_order_does_not_change_aggregates() {
    use htsgd_core::stats::{ks_distance, EmpiricalSample};
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(ExperimentKind::DecayHist, r#"{"replications": 300, "steps": 200, "plots": false}"#, dir.path());
    let m = run_experiment(&c).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("samples.csv")).unwrap();
    let rows: Vec<(i64, f64)> = r.records().map(|x| x.unwrap()).map(|x| (x[0].parse().unwrap(), x[1].parse().unwrap())).collect();
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    // A single replication depends only on its index.
    let c1 = cfg(ExperimentKind::DecayHist, r#"{"replications": 5, "steps": 200, "plots": false}"#, &dir.path().join("small"));
    run_experiment(&c1).unwrap();
    let mut r1 = csv::Reader::from_path(dir.path().join("small/samples.csv")).unwrap();
    let first: Vec<f64> = r1.records().map(|x| x.unwrap()[1].parse().unwrap()).collect();
    for (k, v) in first.iter().enumerate() {
        assert_eq!(v.to_bits(), rows[k].1.to_bits());
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mut rev = xs.clone();
    rev.reverse();
    let f = |x: f64| 1.0 / (1.0 + (-x).exp());
    let d1 = ks_distance(&EmpiricalSample::from_scalars(&xs).unwrap(), f).unwrap();
    let d2 = ks_distance(&EmpiricalSample::from_scalars(&rev).unwrap(), f).unwrap();
    assert!((d1 - d2).abs() <= 1e-12);
    assert!(m.stat("ks_coord1").is_some());
}

#[test]
fn csv_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let small = |kind, extra: &str, sub: &str| {
        let c = cfg(kind, extra, &dir.path().join(sub));
        run_experiment(&c).unwrap()
    };
    small(ExperimentKind::DecayHist, r#"{"replications": 200, "steps": 100}"#, "dh");
    assert_eq!(header(&dir.path().join("dh/samples.csv")), "rep,scaled_err1,scaled_err2");
    assert_eq!(header(&dir.path().join("dh/density_coord2.csv")), "x,empirical_density,analytic_density");
    let svg = std::fs::read_to_string(dir.path().join("dh/density_coord1.svg")).unwrap();
    assert!(svg.contains("<rect") && svg.contains("<polyline"));

    small(ExperimentKind::Coverage, r#"{"replications": 200, "steps": 20}"#, "cov");
    let p = dir.path().join("cov/coverage.csv");
    assert_eq!(header(&p), "n,coverage_rate,half_width");
    assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 21);

    let m = small(ExperimentKind::LogisticPath, r#"{"replications": 2, "steps": 500}"#, "lp");
    assert_eq!(header(&dir.path().join("lp/path.csv")), "t,theta,flow,scaled_err,exponent_used,jump_flag");
    assert!(m.stat("heavy_jumps_total").is_some());

    small(ExperimentKind::AngularCheck, r#"{"angular": {"draws": 20000}}"#, "ang");
    assert_eq!(header(&dir.path().join("ang/angular.csv")), "atom_x,atom_y,analytic_weight,empirical_weight");
    small(ExperimentKind::AngularCheck, r#"{"angular": {"design": "logistic", "draws": 20000}}"#, "ang1");
    assert_eq!(header(&dir.path().join("ang1/angular.csv")), "atom_x,analytic_weight,empirical_weight");

    let m = small(ExperimentKind::LogisticHist, r#"{"replications": 100, "steps": 100, "variance_draws": 10000}"#, "lh");
    assert_eq!(header(&dir.path().join("lh/density.csv")), "x,empirical_density,analytic_density");
    assert!(m.stat("variance").unwrap() > 0.0);

    let m = small(ExperimentKind::StationaryDensity, r#"{"replications": 200}"#, "sd");
    assert!(m.stat("route_gap").unwrap() < 1e-8);
    let back = Manifest::read(&dir.path().join("sd")).unwrap();
    assert_eq!(back, m);
}

#[test]
fn cli_flags_env_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.json");
    std::fs::write(&conf, r#"{"replications": 2, "steps": 300, "master_seed": 5}"#).unwrap();
    let out = dir.path().join("run");
    let ok = htsgd()
        .args(["constant-path", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-plots", "--threads", "2"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let m = Manifest::read(&out).unwrap();
    assert_eq!(m.master_seed, 5);
    assert!(!out.join("path.svg").exists());
    assert_eq!(std::fs::read_to_string(out.join("path.csv")).unwrap().lines().count(), 302);

    let env = htsgd()
        .env("HTSGD_SEED", "77")
        .args(["constant-path", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-plots"])
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(Manifest::read(&out).unwrap().master_seed, 77);
    let flag = htsgd()
        .env("HTSGD_SEED", "77")
        .args(["constant-path", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-plots", "--seed", "9"])
        .output()
        .unwrap();
    assert!(flag.status.success());
    assert_eq!(Manifest::read(&out).unwrap().master_seed, 9);

    std::fs::write(&conf, r#"{"replications": 0}"#).unwrap();
    let bad = htsgd().args(["decay-hist", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("replications"));

    std::fs::write(&conf, r#"{"model": {"kind": "logistic"}, "replications": 10}"#).unwrap();
    let degenerate = htsgd().args(["stationary-density", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(degenerate.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&degenerate.stderr).contains("oracle unavailable"));

    let unknown = htsgd().args(["nonsense"]).output().unwrap();
    assert!(!unknown.status.success());
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nlwave::cli::{DispersionConfig, SimulateConfig, SolitonConfig};
use nlwave::config::resolve;
use nlwave::harness::ExperimentConfig;
use serde_json::Value;

fn nlwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlwave")).args(args).output().unwrap()
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

const SMALL: &[&str] = &[
    "--set",
    "grid.n_points=1024",
    "--set",
    "sweep={\"kind\":\"points\",\"points\":[{\"epsilon\":0.1,\"delta\":0.3}]}",
    "--set",
    "extra_horizons=[]",
];

#[test]
fn help_and_bad_arguments() {
    assert_eq!(nlwave(&["--help"]).status.code(), Some(0));
    assert_eq!(nlwave(&["--version"]).status.code(), Some(0));
    assert_eq!(nlwave(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nlwave(&["sweep", "--jobs", "many"]).status.code(), Some(1));
}

#[test]
fn config_errors_exit_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    let code = |args: &[&str]| nlwave(args).status.code();
    assert_eq!(code(&["compare", "-o", o, "--set", "nuu=1.5"]), Some(1));
    assert_eq!(code(&["compare", "-o", o, "--set", "nu=0.5"]), Some(1));
    assert_eq!(code(&["compare", "-o", o, "--set", "models=[\"wave\"]"]), Some(1));
    assert_eq!(code(&["compare", "-o", o, "--config", "/nonexistent.json"]), Some(1));
    assert_eq!(code(&["compare", "-o", o, "--epsilon", "0.1"]), Some(1));
    assert_eq!(code(&["simulate", "-o", o, "--profile", "box:1,2"]), Some(1));
    assert_eq!(code(&["simulate", "-o", o, "--model", "ibq", "--set", "n_points=7"]), Some(1));
    let r = nlwave(&["compare", "-o", o, "--set", "nuu=1.5"]);
    assert!(String::from_utf8_lossy(&r.stderr).contains("nuu"));
    assert!(r.stdout.is_empty());
    assert!(!out.exists());
}

#[test]
fn compare_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let mut args = vec!["compare", "-o", o, "--set", "name=run"];
    args.extend_from_slice(SMALL);
    let r = nlwave(&args);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(r.stdout.is_empty());

    let (header, rows) = csv_rows(&dir.path().join("run.csv"));
    assert_eq!(
        header,
        [
            "epsilon",
            "delta",
            "nu",
            "model",
            "norm_L2",
            "norm_Linf",
            "mass_drift",
            "contaminated_flag",
            "t_end",
            "n_points",
            "dt"
        ]
    );
    let models: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    assert_eq!(models, ["kdv", "bbm", "ch"]);
    for row in &rows {
        assert_eq!(row[0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(row[7], "false");
        assert_eq!(row[9], "1024");
        assert!((row[8].parse::<f64>().unwrap() - 1.0 / 0.3).abs() < 1e-12);
        assert!(row[5].parse::<f64>().unwrap() > 0.0);
        assert!(row[6].parse::<f64>().unwrap() < 1e-10);
    }

    let meta = read_json(&dir.path().join("run.json"));
    assert_eq!(meta["command"], "compare");
    assert_eq!(meta["config"]["grid"]["n_points"], 1024);
    assert_eq!(meta["crate_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(meta["extra"]["parents"][0]["model"], "ibq");
}

#[test]
fn overrides_win_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"name": "from_file", "grid": {"n_points": 256}, "models": ["kdv"]}"#).unwrap();
    let o = dir.path().join("out");
    let mut args = vec!["compare", "--config", cfg.to_str().unwrap(), "-o", o.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["--set", "models=[\"ch\"]"]);
    assert_eq!(nlwave(&args).status.code(), Some(0));
    let (_, rows) = csv_rows(&o.join("from_file.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3], "ch");
    assert_eq!(rows[0][9], "1024");
}

#[test]
fn same_config_same_hash_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, jobs: &str| {
        let o = dir.path().join(format!("{sub}{jobs}"));
        let mut args = vec!["sweep", "-o", o.to_str().unwrap(), "--jobs", jobs, "--set", "grid.n_points=1024"];
        args.extend_from_slice(&["--set", "sweep={\"kind\":\"path\",\"epsilon0\":0.1,\"halvings\":2}"]);
        assert_eq!(nlwave(&args).status.code(), Some(0));
        o
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(
        std::fs::read(a.join("experiment.csv")).unwrap(),
        std::fs::read(b.join("experiment.csv")).unwrap()
    );
    assert_eq!(
        read_json(&a.join("experiment.json"))["config_hash"],
        read_json(&b.join("experiment.json"))["config_hash"]
    );
    let (header, rows) = csv_rows(&a.join("experiment_convergence.csv"));
    assert_eq!(header, ["model", "slope_Linf", "slope_L2", "fit_residual", "points"]);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r[4], "3");
        assert!(r[1].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn blow_up_exits_two_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let r = nlwave(&[
        "simulate", "-o", o, "--model", "kdv", "--profile", "gaussian:1,1", "--n-points", "128", "--length", "20",
        "--t-end", "50", "--set", "policy.step={\"fixed\":0.5}", "--set", "snapshots=100",
    ]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "x", "v"]);
    assert!(rows.len() >= 128);
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap().is_finite()));
    let meta = read_json(&dir.path().join("simulate.json"));
    assert!(meta["extra"]["failure"].as_str().unwrap().contains("blow-up"));
    assert!(meta["extra"]["t_reached"].as_f64().unwrap() < 50.0);
}

#[test]
fn simulate_parent_writes_both_components() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let r = nlwave(&["simulate", "-o", o, "--model", "ibq", "--n-points", "64", "--t-end", "1", "--set", "snapshots=1"]);
    assert_eq!(r.status.code(), Some(0));
    let (header, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "x", "u", "u_t"]);
    assert_eq!(rows.len(), 2 * 64);
    assert_eq!(rows.last().unwrap()[0].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn tabulated_kernel_simulation_tracks_ibq() {
    let dir = tempfile::tempdir().unwrap();
    let table = crate_dir().join("data/exponential_kernel.csv");
    let run = |sub: &str, extra: &[&str]| {
        let o = dir.path().join(sub);
        let mut args = vec!["simulate", "-o", o.to_str().unwrap(), "--n-points", "256", "--t-end", "5"];
        args.extend_from_slice(extra);
        assert_eq!(nlwave(&args).status.code(), Some(0));
        csv_rows(&o.join("trajectory.csv")).1
    };
    let a = run("a", &["--model", "ibq"]);
    let b = run("b", &["--model", "nonlocal", "--kernel-table", table.to_str().unwrap()]);
    let diff = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x[2].parse::<f64>().unwrap() - y[2].parse::<f64>().unwrap()).abs())
        .fold(0.0, f64::max);
    // Linear interpolation of the table is the only difference.
    assert!(diff > 0.0 && diff < 1e-5, "{diff}");
}

#[test]
fn classify_kernel_reports_nu() {
    let table = crate_dir().join("data/exponential_kernel.csv");
    let r = nlwave(&["classify-kernel", "--table", table.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let line = String::from_utf8(r.stdout).unwrap();
    let nu: f64 = line.split_whitespace().next().unwrap().trim_start_matches("nu_estimate=").parse().unwrap();
    assert!((nu - 1.0).abs() < 1e-6);

    let r = nlwave(&["classify-kernel", "--kernel", "fractional:1.75"]);
    assert!(String::from_utf8(r.stdout).unwrap().starts_with("nu_estimate=1.75"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    let rows: String = (0..100).map(|i| format!("{},{}\n", i as f64 * 0.02, 1.0 / (1.0 + i as f64 * 0.02))).collect();
    std::fs::write(&bad, rows).unwrap();
    let r = nlwave(&["classify-kernel", "--table", bad.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8(r.stdout).unwrap().starts_with("classification_failed"));
    assert_eq!(read_json(&dir.path().join("classification.json"))["failed"], true);

    assert_eq!(nlwave(&["classify-kernel"]).status.code(), Some(1));
    assert_eq!(nlwave(&["classify-kernel", "--table", "/missing.csv"]).status.code(), Some(1));
}

#[test]
fn dispersion_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let r = nlwave(&["dispersion", "-o", o, "--model", "ibq", "--model", "kdv", "--model", "ch"]);
    assert_eq!(r.status.code(), Some(0));
    let (header, rows) = csv_rows(&dir.path().join("dispersion.csv"));
    assert_eq!(header, ["model", "xi", "omega", "phase_speed", "group_speed"]);
    assert_eq!(rows.len(), 3 * 61);
    let at = |model: &str, xi: f64| {
        rows.iter()
            .find(|r| r[0] == model && (r[1].parse::<f64>().unwrap() - xi).abs() < 1e-12)
            .map(|r| (r[3].parse::<f64>().unwrap(), r[4].parse::<f64>().unwrap()))
            .unwrap()
    };
    // ω = ξ/√(1+ξ²), ξ - ξ³/2, ξ(1 + ¾ξ²)/(1 + 5/4 ξ²)
    assert!((at("ibq", 1.0).0 - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((at("ibq", 1.0).1 - 0.5f64.powf(1.5)).abs() < 1e-8);
    assert!((at("kdv", 1.0).0 - 0.5).abs() < 1e-12);
    assert!((at("kdv", 1.0).1 + 0.5).abs() < 1e-8);
    assert!((at("ch", 2.0).0 - 4.0 / 6.0).abs() < 1e-12);
    assert!((at("ch", 0.0).0 - 1.0).abs() < 1e-8);
}

#[test]
fn soliton_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let r = nlwave(&["soliton", "-o", o, "--amplitude", "1", "--set", "n_points=256"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let meta = read_json(&dir.path().join("soliton.json"));
    assert_eq!(meta["config"]["amplitude"], 1.0);
    assert!(meta["extra"]["shape_error"].as_f64().unwrap() < 1e-6);
    // A soliton too wide for the domain cannot be validated.
    let r = nlwave(&["soliton", "-o", o, "--amplitude", "0.01"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn sample_configs_resolve() {
    for entry in std::fs::read_dir(crate_dir().join("configs")).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_owned();
        if name.starts_with("simulate") {
            let c: SimulateConfig = resolve(Some(&p), &[]).unwrap();
            assert!(c.t_end > 0.0);
        } else {
            let c: ExperimentConfig = resolve(Some(&p), &[]).unwrap();
            c.validate().unwrap();
        }
    }
}

/// Every config field appears in its schema with the same default, and the
/// schema lists nothing the config does not accept.
#[test]
fn schemas_match_config_defaults() {
    fn check(schema: &str, defaults: Value) {
        let schema = read_json(&crate_dir().join("schema").join(schema));
        let props = schema["properties"].as_object().unwrap();
        let defaults = defaults.as_object().unwrap().clone();
        let mut a: Vec<&String> = props.keys().collect();
        let mut b: Vec<&String> = defaults.keys().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        for (k, v) in &defaults {
            let p = &props[k];
            match p.get("default") {
                Some(d) => assert_eq!(d, v, "{k}"),
                None => {
                    // Objects give per-field defaults.
                    for (kk, vv) in v.as_object().unwrap() {
                        assert_eq!(&p["properties"][kk]["default"], vv, "{k}.{kk}");
                    }
                }
            }
        }
    }
    check("experiment_config.schema.json", serde_json::to_value(ExperimentConfig::default()).unwrap());
    check("simulate_config.schema.json", serde_json::to_value(SimulateConfig::default()).unwrap());
    let _ = (DispersionConfig::default(), SolitonConfig::default());
}

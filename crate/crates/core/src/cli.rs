//! The `nlwave` command line. Logs go to stderr; results go to files in the
//! output directory (plus a one-line answer on stdout for `classify-kernel`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::harness::{
    fit_orders, run_comparison, soliton_benchmark, write_convergence_csv, write_metadata, write_records_csv,
    ExperimentConfig, Metadata, Profile, Stopwatch,
};
use crate::kernels::{classify_symbol, load_tabulated_kernel, KernelKind, KernelSpec};
use crate::models::{build, Family, ModelSpec, OperatorOptions, SecondOrderState, State};
use crate::spectral::{derivative, Grid, WaveField};
use crate::timestepping::{integrate_partial, StepPolicy, StepSize, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nlwave", version, about = "Nonlocal elastic waves and their long-wave models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration entry, e.g. `--set grid.n_points=512`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, short, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one model from a given profile.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        /// `gaussian:AMPLITUDE,WIDTH` or `sech2:AMPLITUDE,WIDTH`.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        length: Option<f64>,
        /// Two-column (ξ, β̂) table; selects the nonlocal parent.
        #[arg(long)]
        kernel_table: Option<PathBuf>,
    },
    /// Parent versus reduced models at the configured sweep points.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Full sweep with fitted convergence orders.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Estimate ν from the small-ξ behaviour of a kernel symbol.
    ClassifyKernel {
        #[arg(long, conflicts_with = "kernel")]
        table: Option<PathBuf>,
        /// `exponential` or `fractional:NU`.
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        xi_max: f64,
        #[arg(long, short)]
        output_dir: Option<PathBuf>,
    },
    /// Linear dispersion relations.
    Dispersion {
        #[command(flatten)]
        common: Common,
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// KdV soliton transit benchmark.
    Soliton {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        amplitude: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialVelocity {
    /// `u_t = -u_x`
    #[default]
    RightGoing,
    Rest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: String,
    /// Shape on the simulation grid, centred on the domain.
    pub profile: Profile,
    pub n_points: usize,
    pub length: f64,
    pub t_end: f64,
    /// Number of snapshots written besides the initial state.
    pub snapshots: usize,
    pub policy: StepPolicy,
    pub dealias: bool,
    pub initial_velocity: InitialVelocity,
    /// Kernel of the `nonlocal` parent.
    pub kernel: Option<KernelKind>,
    pub kernel_table: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            model: "ch".into(),
            profile: Profile::Gaussian {
                amplitude: 0.1,
                width: 5.0,
            },
            n_points: 1024,
            length: 200.0,
            t_end: 20.0,
            snapshots: 20,
            policy: StepPolicy::default(),
            dealias: true,
            initial_velocity: InitialVelocity::RightGoing,
            kernel: None,
            kernel_table: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub models: Vec<String>,
    pub xi_max: f64,
    pub samples: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            models: vec!["ibq".into(), "kdv".into(), "bbm".into(), "ch".into()],
            xi_max: 3.0,
            samples: 61,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonConfig {
    pub amplitude: f64,
    pub n_points: usize,
    pub length: f64,
    pub policy: StepPolicy,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.5,
            n_points: 512,
            length: 80.0,
            policy: StepPolicy::default(),
        }
    }
}

/// Maps an error to the documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate {
            common,
            model,
            profile,
            t_end,
            n_points,
            length,
            kernel_table,
        } => {
            let mut sets = Vec::new();
            if let Some(m) = model {
                sets.push(format!("model={}", serde_json::to_string(&m)?));
            }
            if let Some(p) = profile {
                sets.push(format!("profile={}", serde_json::to_string(&parse_profile(&p)?)?));
            }
            push_opt(&mut sets, "t_end", t_end);
            push_opt(&mut sets, "n_points", n_points);
            push_opt(&mut sets, "length", length);
            if let Some(t) = kernel_table {
                sets.push(format!("kernel_table={}", serde_json::to_string(&t)?));
            }
            let cfg: SimulateConfig = resolve(common.config.as_deref(), &with_overrides(sets, &common.overrides))?;
            simulate(&cfg, &common.output_dir)
        }
        Command::Compare { common, epsilon, delta } => {
            let mut sets = Vec::new();
            match (epsilon, delta) {
                (Some(e), Some(d)) => sets.push(format!(
                    "sweep={}",
                    serde_json::json!({"kind": "points", "points": [{"epsilon": e, "delta": d}]})
                )),
                (None, None) => {}
                _ => return Err(Error::Config("--epsilon and --delta go together".into())),
            }
            let cfg: ExperimentConfig = resolve(common.config.as_deref(), &with_overrides(sets, &common.overrides))?;
            compare(&cfg, &common.output_dir, "compare", false)
        }
        Command::Sweep { common, jobs } => {
            let cfg: ExperimentConfig = resolve(common.config.as_deref(), &common.overrides)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| compare(&cfg, &common.output_dir, "sweep", true))
        }
        Command::ClassifyKernel {
            table,
            kernel,
            xi_max,
            output_dir,
        } => classify(table.as_deref(), kernel.as_deref(), xi_max, output_dir.as_deref()),
        Command::Dispersion { common, models } => {
            let mut sets = Vec::new();
            if !models.is_empty() {
                sets.push(format!("models={}", serde_json::to_string(&models)?));
            }
            let cfg: DispersionConfig = resolve(common.config.as_deref(), &with_overrides(sets, &common.overrides))?;
            dispersion(&cfg, &common.output_dir)
        }
        Command::Soliton { common, amplitude } => {
            let mut sets = Vec::new();
            push_opt(&mut sets, "amplitude", amplitude);
            let cfg: SolitonConfig = resolve(common.config.as_deref(), &with_overrides(sets, &common.overrides))?;
            soliton(&cfg, &common.output_dir)
        }
    }
}

fn push_opt<T: ToString>(sets: &mut Vec<String>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        sets.push(format!("{key}={}", v.to_string()));
    }
}

/// Dedicated flags sit between the file and explicit `--set` entries.
fn with_overrides(mut flags: Vec<String>, sets: &[String]) -> Vec<String> {
    flags.extend_from_slice(sets);
    flags
}

/// `gaussian:0.1,5` → Gaussian with amplitude 0.1 and width 5.
pub fn parse_profile(s: &str) -> Result<Profile> {
    let bad = || Error::Config(format!("profile `{s}` is not SHAPE:AMPLITUDE,WIDTH"));
    let (shape, rest) = s.split_once(':').ok_or_else(bad)?;
    let (a, w) = rest.split_once(',').ok_or_else(bad)?;
    let amplitude: f64 = a.trim().parse().map_err(|_| bad())?;
    let width: f64 = w.trim().parse().map_err(|_| bad())?;
    match shape.trim() {
        "gaussian" => Ok(Profile::Gaussian { amplitude, width }),
        "sech2" => Ok(Profile::Sech2 { amplitude, width }),
        other => Err(Error::Config(format!("unknown profile shape `{other}`"))),
    }
}

/// `exponential` or `fractional:NU`.
pub fn parse_kernel(s: &str) -> Result<KernelSpec> {
    let kind = match s.split_once(':') {
        None if s == "exponential" => KernelKind::Exponential,
        Some(("fractional", nu)) => KernelKind::Fractional {
            nu: nu.parse().map_err(|_| Error::Config(format!("bad nu in `{s}`")))?,
        },
        _ => return Err(Error::Config(format!("unknown kernel `{s}`"))),
    };
    KernelSpec::from_kind(kind).map_err(|e| Error::Config(e.to_string()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn metadata<C: Serialize>(
    dir: &Path,
    name: &str,
    command: &str,
    config: &C,
    hash: String,
    clock: &Stopwatch,
    extra: Option<serde_json::Value>,
) -> Result<()> {
    let path = dir.join(format!("{name}.json"));
    write_metadata(
        &path,
        &Metadata {
            name,
            command,
            config,
            config_hash: hash,
            crate_version: env!("CARGO_PKG_VERSION"),
            rustc_target: std::env::consts::ARCH,
            wall_time_seconds: clock.seconds(),
            extra,
        },
    )?;
    info!("wrote {}", path.display());
    Ok(())
}

fn json_hash<C: Serialize>(c: &C) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(c)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn simulate(cfg: &SimulateConfig, out: &Path) -> Result<i32> {
    let clock = Stopwatch::start();
    let cfg_err = |e: Error| Error::Config(e.to_string());
    let grid = Grid::new(cfg.n_points, cfg.length).map_err(cfg_err)?;
    let mut family: Family = cfg.model.parse().map_err(cfg_err)?;
    if let Some(path) = &cfg.kernel_table {
        let k = load_tabulated_kernel(path).map_err(cfg_err)?;
        family = Family::Nonlocal { kernel: k.kind().clone() };
    } else if let (Family::Nonlocal { .. }, Some(k)) = (&family, &cfg.kernel) {
        family = Family::Nonlocal { kernel: k.clone() };
    }
    if cfg.snapshots == 0 {
        return Err(Error::Config("snapshots must be positive".into()));
    }
    let options = OperatorOptions {
        dealias: cfg.dealias,
        ..OperatorOptions::default()
    };
    let op = build(&ModelSpec::original(family.clone()), &grid, options).map_err(cfg_err)?;
    let u0 = cfg.profile.sample(&grid).map_err(cfg_err)?;
    let init = if op.is_parent() {
        let w = match cfg.initial_velocity {
            InitialVelocity::RightGoing => {
                let ux = derivative(&u0, 1)?;
                WaveField::new(&grid, ux.values().iter().map(|v| -v).collect())?
            }
            InitialVelocity::Rest => WaveField::zeros(&grid),
        };
        State::Second(SecondOrderState { u: u0, w, time: 0.0 })
    } else {
        State::first(u0, 0.0)
    };
    let dt = cfg.policy.resolve_dt(&op).map_err(cfg_err)?;
    let steps = (cfg.t_end / dt).ceil().max(1.0) as usize;
    let every = (steps / cfg.snapshots).max(1);
    info!("simulating {family} to t = {} with dt = {dt:.3e} ({steps} steps)", cfg.t_end);
    let outcome = integrate_partial(&op, &init, cfg.t_end, &cfg.policy, every).map_err(cfg_err)?;

    ensure_dir(out)?;
    write_trajectory_csv(&out.join("trajectory.csv"), &outcome.trajectory)?;
    let traj = &outcome.trajectory;
    let summary = serde_json::json!({
        "model": family.to_string(),
        "t_reached": traj.last().time(),
        "steps": traj.steps,
        "dt": traj.dt,
        "mass_drift": traj.mass_drift(),
        "velocity_mass_drift": traj.velocity_mass_drift(),
        "final_max_norm": traj.last().max_norm(),
        "failure": outcome.failure.as_ref().map(|e| e.to_string()),
        "schema_version": SCHEMA_VERSION,
    });
    metadata(out, "simulate", "simulate", cfg, json_hash(cfg)?, &clock, Some(summary))?;
    match outcome.failure {
        Some(e) => {
            error!("{e}; partial trajectory written");
            Ok(EXIT_NUMERICAL)
        }
        None => Ok(EXIT_OK),
    }
}

/// Long format: one row per (sample, node).
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let parent = matches!(traj.initial(), State::Second(_));
    if parent {
        w.write_record(["t", "x", "u", "u_t"])?;
    } else {
        w.write_record(["t", "x", "v"])?;
    }
    for s in &traj.states {
        let t = s.time();
        let nodes = s.grid().nodes();
        match s {
            State::First(f) => {
                for (x, v) in nodes.iter().zip(f.v.values()) {
                    w.serialize((t, x, v))?;
                }
            }
            State::Second(p) => {
                for ((x, u), ut) in nodes.iter().zip(p.u.values()).zip(p.w.values()) {
                    w.serialize((t, x, u, ut))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn compare(cfg: &ExperimentConfig, out: &Path, command: &str, fit: bool) -> Result<i32> {
    let clock = Stopwatch::start();
    cfg.validate()?;
    let result = run_comparison(cfg)?;
    ensure_dir(out)?;
    let csv_path = out.join(format!("{}.csv", cfg.name));
    write_records_csv(&csv_path, &result.records)?;
    info!("wrote {}", csv_path.display());

    let mut extra = serde_json::json!({
        "parents": result.parents,
        "failures": result.failures,
        "schema_version": SCHEMA_VERSION,
    });
    let mut fit_failed = false;
    if fit {
        match fit_orders(&result, &cfg.horizon) {
            Ok(report) => {
                let path = out.join(format!("{}_convergence.csv", cfg.name));
                write_convergence_csv(&path, &report)?;
                info!("wrote {}", path.display());
                for o in &report.orders {
                    info!("{}: slope {:.3} (fit residual {:.2e})", o.model, o.slope_linf, o.fit_residual);
                }
                extra["convergence"] = serde_json::to_value(&report)?;
            }
            Err(e) => {
                warn!("order fit failed: {e}");
                extra["convergence_error"] = serde_json::Value::String(e.to_string());
                fit_failed = true;
            }
        }
    }
    metadata(out, &cfg.name, command, cfg, cfg.hash(), &clock, Some(extra))?;

    for f in &result.failures {
        error!("run failed at eps = {}, delta = {} ({}): {}", f.epsilon, f.delta, f.model, f.message);
    }
    if result.any_contaminated() {
        warn!("some runs touched the domain edge above the contamination threshold");
    }
    if result.has_failures() || result.any_contaminated() || fit_failed {
        Ok(EXIT_NUMERICAL)
    } else {
        Ok(EXIT_OK)
    }
}

fn classify(table: Option<&Path>, kernel: Option<&str>, xi_max: f64, out: Option<&Path>) -> Result<i32> {
    let spec = match (table, kernel) {
        (Some(path), _) => load_tabulated_kernel(path).map_err(|e| Error::Config(e.to_string()))?,
        (None, Some(k)) => parse_kernel(k)?,
        (None, None) => return Err(Error::Config("give --table or --kernel".into())),
    };
    let res = classify_symbol(&spec, xi_max);
    let (code, body) = match &res {
        Ok(r) => {
            println!("nu_estimate={} fit_residual={:e}", r.nu_estimate, r.fit_residual);
            (EXIT_OK, serde_json::to_value(r)?)
        }
        Err(Error::ClassificationFailed { nu_estimate, residual }) => {
            println!("classification_failed nu_estimate={nu_estimate} fit_residual={residual:e}");
            (
                EXIT_NUMERICAL,
                serde_json::json!({"failed": true, "nu_estimate": nu_estimate, "fit_residual": residual}),
            )
        }
        Err(_) => return res.map(|_| EXIT_OK),
    };
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let path = dir.join("classification.json");
        std::fs::write(&path, serde_json::to_string_pretty(&body)? + "\n")?;
        info!("wrote {}", path.display());
    }
    Ok(code)
}

fn dispersion(cfg: &DispersionConfig, out: &Path) -> Result<i32> {
    let clock = Stopwatch::start();
    if cfg.samples < 2 || !(cfg.xi_max > 0.0) {
        return Err(Error::Config("dispersion needs samples >= 2 and xi_max > 0".into()));
    }
    // The grid is only a carrier for the operator; frequencies are evaluated
    // from the symbols at arbitrary ξ.
    let grid = Grid::new(8, 2.0 * std::f64::consts::PI)?;
    let mut ops = Vec::new();
    for m in &cfg.models {
        let family: Family = m.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        let op = build(&ModelSpec::original(family), &grid, OperatorOptions::default())
            .map_err(|e| Error::Config(e.to_string()))?;
        ops.push(op);
    }
    ensure_dir(out)?;
    let path = out.join("dispersion.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["model", "xi", "omega", "phase_speed", "group_speed"])?;
    for op in &ops {
        for i in 0..cfg.samples {
            let xi = cfg.xi_max * i as f64 / (cfg.samples - 1) as f64;
            let omega = op.frequency(xi);
            let h = 1e-6 * xi.max(1.0);
            let group = (op.frequency(xi + h) - op.frequency(xi - h)) / (2.0 * h);
            let phase = if xi == 0.0 { group } else { omega / xi };
            w.serialize((op.spec().family.to_string(), xi, omega, phase, group))?;
        }
    }
    w.flush()?;
    info!("wrote {}", path.display());
    metadata(out, "dispersion", "dispersion", cfg, json_hash(cfg)?, &clock, None)?;
    Ok(EXIT_OK)
}

fn soliton(cfg: &SolitonConfig, out: &Path) -> Result<i32> {
    let clock = Stopwatch::start();
    let grid = Grid::new(cfg.n_points, cfg.length).map_err(|e| Error::Config(e.to_string()))?;
    if matches!(cfg.policy.step, StepSize::Fixed(dt) if dt <= 0.0) {
        return Err(Error::Config("dt must be positive".into()));
    }
    let report = soliton_benchmark(cfg.amplitude, &grid, &cfg.policy)?;
    info!(
        "soliton A = {}: shape error {:.3e}, phase error {:.3e} after t = {:.3}",
        report.amplitude, report.shape_error, report.phase_error, report.t_end
    );
    ensure_dir(out)?;
    metadata(
        out,
        "soliton",
        "soliton",
        cfg,
        json_hash(cfg)?,
        &clock,
        Some(serde_json::to_value(&report)?),
    )?;
    Ok(EXIT_OK)
}

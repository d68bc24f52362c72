//! Parent-versus-model comparison experiments, order fits, the KdV soliton
//! benchmark and conservation checks.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{scaled_grid, unidirectional_initial_data, Closure, SmallParams};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::kernels::KernelKind;
use crate::models::{build, Family, ModelSpec, OperatorOptions, State};
use crate::spectral::{derivative, Grid, WaveField};
use crate::timestepping::{integrate_partial, StepPolicy, Trajectory};

pub const CONTAMINATION_THRESHOLD: f64 = 1e-10;

/// Initial shape `U₀(Y)`, centred on the Y-domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum Profile {
    Gaussian { amplitude: f64, width: f64 },
    Sech2 { amplitude: f64, width: f64 },
    /// One value per Y-grid node.
    Custom { values: Vec<f64> },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Gaussian {
            amplitude: 1.0,
            width: 1.0,
        }
    }
}

impl Profile {
    pub fn sample(&self, grid: &Grid) -> Result<WaveField> {
        let centre = grid.length() / 2.0;
        match self {
            Profile::Gaussian { amplitude, width } => {
                check_shape(*amplitude, *width)?;
                WaveField::from_fn(grid, |y| amplitude * (-((y - centre) / width).powi(2)).exp())
            }
            Profile::Sech2 { amplitude, width } => {
                check_shape(*amplitude, *width)?;
                WaveField::from_fn(grid, |y| amplitude / ((y - centre) / width).cosh().powi(2))
            }
            Profile::Custom { values } => WaveField::new(grid, values.clone()),
        }
    }
}

fn check_shape(amplitude: f64, width: f64) -> Result<()> {
    if !amplitude.is_finite() || !(width > 0.0 && width.is_finite()) {
        return Err(Error::Config(format!(
            "profile needs a finite amplitude and positive width, got ({amplitude}, {width})"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum Sweep {
    Points { points: Vec<SweepPoint> },
    /// `ε = ε₀, ε₀/2, …` (`halvings + 1` points) with `δ^{2ν} = ε`.
    Path { epsilon0: f64, halvings: usize },
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep::Path {
            epsilon0: 0.1,
            halvings: 3,
        }
    }
}

impl Sweep {
    pub fn points(&self, nu: f64) -> Vec<SweepPoint> {
        match self {
            Sweep::Points { points } => points.clone(),
            Sweep::Path { epsilon0, halvings } => (0..=*halvings)
                .map(|k| {
                    let epsilon = epsilon0 / 2f64.powi(k as i32);
                    SweepPoint {
                        epsilon,
                        delta: epsilon.powf(0.5 / nu),
                    }
                })
                .collect(),
        }
    }
}

/// `t_end = t0` or `t0 / δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub t0: f64,
    pub scale_with_delta: bool,
}

impl Default for Horizon {
    fn default() -> Self {
        Self {
            t0: 1.0,
            scale_with_delta: true,
        }
    }
}

impl Horizon {
    pub fn t_end(&self, delta: f64) -> f64 {
        if self.scale_with_delta {
            self.t0 / delta
        } else {
            self.t0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    /// Length of the Y-domain; the x-domain is `length / δ`.
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: 1024,
            length: 80.0,
        }
    }
}

fn default_models() -> Vec<String> {
    vec!["kdv".into(), "bbm".into(), "ch".into()]
}

fn default_extra() -> Vec<f64> {
    vec![5.0]
}

fn default_true() -> bool {
    true
}

fn default_nu() -> f64 {
    1.0
}

fn default_name() -> String {
    "experiment".into()
}

fn default_threshold() -> f64 {
    CONTAMINATION_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default)]
    pub sweep: Sweep,
    /// Base family names (`kdv`, `bbm`, `ch`); mapped to their fractional
    /// forms when `nu != 1`.
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default)]
    pub horizon: Horizon,
    /// Fixed times reported in addition to the main horizon.
    #[serde(default = "default_extra")]
    pub extra_horizons: Vec<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub policy: StepPolicy,
    #[serde(default)]
    pub closure: Closure,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Parent kernel; `None` picks IBq (ν = 1) or fractional IBq.
    #[serde(default)]
    pub kernel: Option<KernelKind>,
    #[serde(default = "default_threshold")]
    pub contamination_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            profile: Profile::default(),
            nu: 1.0,
            sweep: Sweep::default(),
            models: default_models(),
            horizon: Horizon::default(),
            extra_horizons: default_extra(),
            grid: GridConfig::default(),
            policy: StepPolicy::default(),
            closure: Closure::default(),
            dealias: true,
            kernel: None,
            contamination_threshold: CONTAMINATION_THRESHOLD,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.models.is_empty() {
            return cfg("models_under_test is empty".into());
        }
        for m in &self.models {
            let f = self.model_family(m)?;
            if f.is_parent() {
                return cfg(format!("`{m}` is a parent model, not a model under test"));
            }
        }
        let points = self.sweep.points(self.nu);
        if points.is_empty() {
            return cfg("sweep is empty".into());
        }
        for p in &points {
            SmallParams::new(p.epsilon, p.delta, self.nu).map_err(|e| Error::Config(e.to_string()))?;
        }
        if !(self.horizon.t0 > 0.0) || self.extra_horizons.iter().any(|t| !(*t > 0.0)) {
            return cfg("horizons must be positive".into());
        }
        Grid::new(self.grid.n_points, self.grid.length).map_err(|e| Error::Config(e.to_string()))?;
        self.policy.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Profile::Custom { values } = &self.profile {
            if values.len() != self.grid.n_points {
                return cfg(format!(
                    "custom profile has {} samples for {} grid points",
                    values.len(),
                    self.grid.n_points
                ));
            }
        }
        if !(self.contamination_threshold > 0.0) {
            return cfg("contamination threshold must be positive".into());
        }
        self.parent_family()?;
        Ok(())
    }

    pub fn model_family(&self, name: &str) -> Result<Family> {
        let f: Family = name.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        Ok(f.with_nu(self.nu))
    }

    pub fn parent_family(&self) -> Result<Family> {
        match &self.kernel {
            Some(k) => {
                if let KernelKind::Fractional { nu } = k {
                    if *nu != self.nu {
                        return Err(Error::Config(format!("kernel nu {nu} differs from experiment nu {}", self.nu)));
                    }
                }
                Ok(Family::Nonlocal { kernel: k.clone() })
            }
            None => Ok(Family::Ibq.with_nu(self.nu)),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One model at one sweep point and one horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub epsilon: f64,
    pub delta: f64,
    pub nu: f64,
    pub model: String,
    pub norm_l2: f64,
    pub norm_linf: f64,
    pub mass_drift: f64,
    pub contaminated: bool,
    pub t_end: f64,
    pub n_points: usize,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParentRecord {
    pub epsilon: f64,
    pub delta: f64,
    pub model: String,
    pub mass_drift: f64,
    pub velocity_mass_drift: f64,
    pub edge_ratio: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunFailure {
    pub epsilon: f64,
    pub delta: f64,
    pub model: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ComparisonResult {
    pub records: Vec<ComparisonRecord>,
    pub parents: Vec<ParentRecord>,
    pub failures: Vec<RunFailure>,
}

impl ComparisonResult {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn any_contaminated(&self) -> bool {
        self.records.iter().any(|r| r.contaminated)
    }

    /// Records of one model at the main horizon, in sweep order.
    pub fn series(&self, model: &str, horizon: &Horizon) -> Vec<&ComparisonRecord> {
        self.records
            .iter()
            .filter(|r| r.model == model && (r.t_end - horizon.t_end(r.delta)).abs() <= 1e-12 * r.t_end)
            .collect()
    }
}

/// Largest field magnitude in the outer `n/32` nodes at either end, relative
/// to the peak.
pub fn edge_ratio(field: &WaveField) -> f64 {
    let v = field.values();
    let peak = field.max_norm();
    if peak == 0.0 {
        return 0.0;
    }
    let band = (v.len() / 32).max(1);
    let edge = v[..band]
        .iter()
        .chain(&v[v.len() - band..])
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    edge / peak
}

fn diff_norms(a: &WaveField, b: &WaveField) -> (f64, f64) {
    let h = a.grid().spacing();
    let mut l2 = 0.0;
    let mut linf = 0.0_f64;
    for (x, y) in a.values().iter().zip(b.values()) {
        let d = x - y;
        l2 += d * d;
        linf = linf.max(d.abs());
    }
    ((h * l2).sqrt(), linf)
}

/// Integrates through each time in `stops` (increasing) and returns the state
/// reached at each, together with the concatenated trajectory mass history.
fn run_to(
    spec: &ModelSpec,
    grid: &Grid,
    options: OperatorOptions,
    init: State,
    stops: &[f64],
    policy: &StepPolicy,
) -> Result<(Vec<State>, Trajectory)> {
    let op = build(spec, grid, options)?;
    let mut states = Vec::with_capacity(stops.len());
    let mut current = init;
    let mut all: Option<Trajectory> = None;
    for &t in stops {
        let out = integrate_partial(&op, &current, t, policy, usize::MAX)?;
        let traj = out.trajectory;
        if let Some(e) = out.failure {
            return Err(e);
        }
        current = traj.last().clone();
        states.push(current.clone());
        all = Some(match all {
            None => traj,
            Some(mut acc) => {
                acc.times.extend_from_slice(&traj.times[1..]);
                acc.mass.extend_from_slice(&traj.mass[1..]);
                acc.max_norm.extend_from_slice(&traj.max_norm[1..]);
                if let (Some(a), Some(b)) = (acc.velocity_mass.as_mut(), traj.velocity_mass.as_ref()) {
                    a.extend_from_slice(&b[1..]);
                }
                acc.states.extend(traj.states.into_iter().skip(1));
                acc.steps += traj.steps;
                acc
            }
        });
    }
    Ok((states, all.expect("at least one stop")))
}

struct PointOutcome {
    records: Vec<ComparisonRecord>,
    parent: Option<ParentRecord>,
    failures: Vec<RunFailure>,
}

fn run_point(config: &ExperimentConfig, point: SweepPoint) -> PointOutcome {
    let mut out = PointOutcome {
        records: Vec::new(),
        parent: None,
        failures: Vec::new(),
    };
    let fail = |model: &str, e: &Error| RunFailure {
        epsilon: point.epsilon,
        delta: point.delta,
        model: model.to_string(),
        message: e.to_string(),
    };
    let setup = || -> Result<_> {
        let params = SmallParams::new(point.epsilon, point.delta, config.nu)?;
        let y_grid = Grid::new(config.grid.n_points, config.grid.length)?;
        let u0 = config.profile.sample(&y_grid)?;
        let init = unidirectional_initial_data(&u0, &params, config.closure)?;
        let x_grid = scaled_grid(&y_grid, point.delta)?;
        Ok((init, x_grid))
    };
    let parent_family = match config.parent_family() {
        Ok(f) => f,
        Err(e) => {
            out.failures.push(fail("parent", &e));
            return out;
        }
    };
    let (init, x_grid) = match setup() {
        Ok(v) => v,
        Err(e) => {
            out.failures.push(fail(parent_family.name(), &e));
            return out;
        }
    };

    let mut stops: Vec<f64> = std::iter::once(config.horizon.t_end(point.delta))
        .chain(config.extra_horizons.iter().copied())
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let options = OperatorOptions {
        dealias: config.dealias,
        ..OperatorOptions::default()
    };
    let u_init = init.u.clone();
    let parent_spec = ModelSpec::original(parent_family.clone());
    let parent = run_to(
        &parent_spec,
        &x_grid,
        options,
        State::Second(init),
        &stops,
        &config.policy,
    );
    let (parent_states, parent_traj) = match parent {
        Ok(v) => v,
        Err(e) => {
            out.failures.push(fail(parent_family.name(), &e));
            return out;
        }
    };
    let parent_edge = parent_states
        .iter()
        .map(|s| edge_ratio(s.primary()))
        .fold(0.0, f64::max);
    out.parent = Some(ParentRecord {
        epsilon: point.epsilon,
        delta: point.delta,
        model: parent_family.to_string(),
        mass_drift: parent_traj.mass_drift(),
        velocity_mass_drift: parent_traj.velocity_mass_drift().unwrap_or(0.0),
        edge_ratio: parent_edge,
        dt: parent_traj.dt,
    });

    for name in &config.models {
        let family = match config.model_family(name) {
            Ok(f) => f,
            Err(e) => {
                out.failures.push(fail(name, &e));
                continue;
            }
        };
        let spec = ModelSpec::original(family.clone());
        match run_to(&spec, &x_grid, options, State::first(u_init.clone(), 0.0), &stops, &config.policy) {
            Ok((states, traj)) => {
                let drift = traj.mass_drift();
                for ((t, s), p) in stops.iter().zip(&states).zip(&parent_states) {
                    let (l2, linf) = diff_norms(p.primary(), s.primary());
                    let edge = edge_ratio(s.primary()).max(edge_ratio(p.primary()));
                    out.records.push(ComparisonRecord {
                        epsilon: point.epsilon,
                        delta: point.delta,
                        nu: config.nu,
                        model: family.to_string(),
                        norm_l2: l2,
                        norm_linf: linf,
                        mass_drift: drift,
                        contaminated: edge > config.contamination_threshold,
                        t_end: *t,
                        n_points: x_grid.n_points(),
                        dt: traj.dt,
                    });
                }
            }
            Err(e) => out.failures.push(fail(&family.to_string(), &e)),
        }
    }
    out
}

/// Runs every sweep point in parallel on the current rayon pool; results come
/// back in sweep order. Per-run failures are collected, never raised.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ComparisonResult> {
    config.validate()?;
    let points = config.sweep.points(config.nu);
    let outcomes: Vec<PointOutcome> = points.par_iter().map(|p| run_point(config, *p)).collect();
    let mut result = ComparisonResult::default();
    for o in outcomes {
        result.records.extend(o.records);
        result.parents.extend(o.parent);
        result.failures.extend(o.failures);
    }
    Ok(result)
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelOrder {
    pub model: String,
    pub slope_linf: f64,
    pub slope_l2: f64,
    pub fit_residual: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioSeries {
    pub numerator: String,
    pub denominator: String,
    pub epsilon: Vec<f64>,
    pub ratio: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub orders: Vec<ModelOrder>,
    pub ratios: Vec<RatioSeries>,
}

impl ConvergenceReport {
    pub fn order(&self, model: &str) -> Option<&ModelOrder> {
        self.orders.iter().find(|o| o.model == model)
    }

    pub fn ratio(&self, numerator: &str, denominator: &str) -> Option<&RatioSeries> {
        self.ratios
            .iter()
            .find(|r| r.numerator == numerator && r.denominator == denominator)
    }
}

/// Log-log slopes of the error against ε at the main horizon, plus the
/// CH-type/BBM-type and CH-type/KdV-type error ratios along the sweep.
pub fn fit_orders(result: &ComparisonResult, horizon: &Horizon) -> Result<ConvergenceReport> {
    let mut models: Vec<String> = Vec::new();
    for r in &result.records {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    let mut orders = Vec::new();
    for m in &models {
        let series = result.series(m, horizon);
        if series.len() < 3 {
            return Err(Error::DegenerateFit(format!("{m}: {} sweep points, need 3", series.len())));
        }
        let eps: Vec<f64> = series.iter().map(|r| r.epsilon).collect();
        let linf: Vec<f64> = series.iter().map(|r| r.norm_linf).collect();
        let l2: Vec<f64> = series.iter().map(|r| r.norm_l2).collect();
        let fi = loglog_slope(&eps, &linf)?;
        let f2 = loglog_slope(&eps, &l2)?;
        orders.push(ModelOrder {
            model: m.clone(),
            slope_linf: fi.slope,
            slope_l2: f2.slope,
            fit_residual: fi.rms_residual,
            points: series.len(),
        });
    }

    let find = |base: &str| models.iter().find(|m| m.split(':').next().map(|b| b.trim_start_matches('f')) == Some(base));
    let mut ratios = Vec::new();
    if let Some(ch) = find("ch") {
        for other in ["bbm", "kdv"] {
            if let Some(o) = find(other) {
                let a = result.series(ch, horizon);
                let b = result.series(o, horizon);
                let ratio: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.norm_linf / y.norm_linf).collect();
                ratios.push(RatioSeries {
                    numerator: ch.clone(),
                    denominator: o.clone(),
                    epsilon: a.iter().map(|r| r.epsilon).collect(),
                    decreasing: ratio.windows(2).all(|w| w[1] < w[0]),
                    ratio,
                });
            }
        }
    }
    Ok(ConvergenceReport { orders, ratios })
}

#[derive(Clone, Debug, Serialize)]
pub struct SolitonReport {
    pub amplitude: f64,
    pub speed: f64,
    pub t_end: f64,
    /// Max-norm of the KdV residual of the closed form at `t = 0`.
    pub initial_residual: f64,
    pub shape_error: f64,
    /// Position offset of the numerical soliton after one transit.
    pub phase_error: f64,
    pub mass_drift: f64,
    pub dt: f64,
    pub steps: usize,
}

/// `A sech²(√(A/6)(x - x₀ - ct))`, `c = 1 + A/3`, a travelling wave of
/// `v_t + v_x + v v_x + ½ v_xxx = 0`.
pub fn kdv_soliton(grid: &Grid, amplitude: f64, t: f64) -> Result<WaveField> {
    let k = (amplitude / 6.0).sqrt();
    let c = 1.0 + amplitude / 3.0;
    let l = grid.length();
    let x0 = l / 2.0;
    WaveField::from_fn(grid, |x| {
        // Sum of periodic images; interactions between images are O(e^{-2kL}).
        let s = (x - x0 - c * t).rem_euclid(l);
        (-3..=3)
            .map(|m| amplitude / (k * (s + m as f64 * l)).cosh().powi(2))
            .sum()
    })
}

fn soliton_residual(v: &WaveField, amplitude: f64) -> Result<f64> {
    let c = 1.0 + amplitude / 3.0;
    let vx = derivative(v, 1)?;
    let vxxx = derivative(v, 3)?;
    Ok(v.values()
        .iter()
        .zip(vx.values())
        .zip(vxxx.values())
        .map(|((v, vx), vxxx)| ((1.0 - c) * vx + v * vx + 0.5 * vxxx).abs())
        .fold(0.0, f64::max))
}

pub const SOLITON_RESIDUAL_TOL: f64 = 1e-10;

/// Evolves the KdV soliton for one domain transit `t = L/c` and compares
/// with the exact (periodic) profile.
pub fn soliton_benchmark(amplitude: f64, grid: &Grid, policy: &StepPolicy) -> Result<SolitonReport> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("soliton amplitude must be non-negative, got {amplitude}")));
    }
    let c = 1.0 + amplitude / 3.0;
    let t_end = grid.length() / c;
    let v0 = kdv_soliton(grid, amplitude, 0.0)?;
    let initial_residual = soliton_residual(&v0, amplitude)?;
    if initial_residual > SOLITON_RESIDUAL_TOL {
        return Err(Error::UnderResolved(format!(
            "soliton residual {initial_residual:.2e} at t = 0 exceeds {SOLITON_RESIDUAL_TOL:.0e}"
        )));
    }
    crate::asymptotics::check_resolved(&v0, "soliton")?;
    let op = build(&ModelSpec::original(Family::Kdv), grid, OperatorOptions::default())?;
    let traj = crate::timestepping::integrate(&op, &State::first(v0.clone(), 0.0), t_end, policy, usize::MAX)?;
    let exact = kdv_soliton(grid, amplitude, t_end)?;
    let end = traj.last().primary();
    let (_, shape_error) = diff_norms(end, &exact);

    let c1 = |f: &WaveField| grid.fft_forward(f.values())[1];
    let (num, ex) = (c1(end), c1(&exact));
    let phase_error = if ex.norm() > 0.0 {
        (num / ex).arg().abs() * grid.length() / (2.0 * std::f64::consts::PI)
    } else {
        0.0
    };
    Ok(SolitonReport {
        amplitude,
        speed: c,
        t_end,
        initial_residual,
        shape_error,
        phase_error,
        mass_drift: traj.mass_drift(),
        dt: traj.dt,
        steps: traj.steps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConservationReport {
    pub mass_drift: f64,
    pub velocity_mass_drift: Option<f64>,
}

pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    ConservationReport {
        mass_drift: traj.mass_drift(),
        velocity_mass_drift: traj.velocity_mass_drift(),
    }
}

pub const CSV_HEADER: [&str; 11] = [
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
    "dt",
];

pub fn write_records_csv(path: &Path, records: &[ComparisonRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize((
            r.epsilon,
            r.delta,
            r.nu,
            &r.model,
            r.norm_l2,
            r.norm_linf,
            r.mass_drift,
            r.contaminated,
            r.t_end,
            r.n_points,
            r.dt,
        ))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "slope_Linf", "slope_L2", "fit_residual", "points"])?;
    for o in &report.orders {
        w.write_record([
            o.model.clone(),
            o.slope_linf.to_string(),
            o.slope_l2.to_string(),
            o.fit_residual.to_string(),
            o.points.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub name: &'a str,
    pub command: &'a str,
    pub config: &'a C,
    pub config_hash: String,
    pub crate_version: &'static str,
    pub rustc_target: &'static str,
    pub wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

pub fn write_metadata<C: Serialize>(path: &Path, meta: &Metadata<C>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Wall-clock timer for metadata.
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

//! Fixed-step explicit integration of an [`EvolutionOperator`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_slope, LineFit};
use crate::models::{EvolutionOperator, State};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Fixed(f64),
    /// `dt = cfl · Δx / s_max`, with `s_max` the largest linear phase speed
    /// on the grid.
    Cfl(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPolicy {
    pub step: StepSize,
    pub max_steps: usize,
    pub blowup_threshold: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            step: StepSize::Cfl(0.5),
            max_steps: 50_000_000,
            blowup_threshold: 1e6,
        }
    }
}

impl StepPolicy {
    pub fn fixed(dt: f64) -> Self {
        Self {
            step: StepSize::Fixed(dt),
            ..Self::default()
        }
    }

    pub fn cfl(number: f64) -> Self {
        Self {
            step: StepSize::Cfl(number),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.step {
            StepSize::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
            }
            StepSize::Cfl(c) if !(c > 0.0 && c <= 1.0) => {
                return Err(Error::InvalidParameter(format!("cfl number must lie in (0, 1], got {c}")));
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be positive".into()));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::InvalidParameter("blow-up threshold must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve_dt(&self, op: &EvolutionOperator) -> Result<f64> {
        self.validate()?;
        Ok(match self.step {
            StepSize::Fixed(dt) => dt,
            StepSize::Cfl(c) => {
                let s = op.max_phase_speed();
                let h = op.grid().spacing();
                if s > 0.0 {
                    c * h / s
                } else {
                    c * h
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    /// First-order reference scheme, used to check the order probe.
    ForwardEuler,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `∫ v dx` (or `∫ u dx`) per sample.
    pub mass: Vec<f64>,
    pub max_norm: Vec<f64>,
    /// `∫ u_t dx` per sample, parents only.
    pub velocity_mass: Option<Vec<f64>>,
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    fn new(init: &State, dt: f64) -> Self {
        let mut t = Self {
            times: Vec::new(),
            states: Vec::new(),
            mass: Vec::new(),
            max_norm: Vec::new(),
            velocity_mass: matches!(init, State::Second(_)).then(Vec::new),
            dt,
            steps: 0,
        };
        t.push(init.clone());
        t
    }

    fn push(&mut self, state: State) {
        self.times.push(state.time());
        self.mass.push(state.primary().integral());
        self.max_norm.push(state.max_norm());
        if let (Some(vm), State::Second(s)) = (self.velocity_mass.as_mut(), &state) {
            vm.push(s.w.integral());
        }
        self.states.push(state);
    }

    pub fn initial(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Largest `|M(t) - M(0)|`, relative to `max(|M(0)|, ∫|f(0)| dx)`. The L¹
    /// floor keeps the measure meaningful for zero-mean data such as `u_t`.
    pub fn mass_drift(&self) -> f64 {
        let l1 = l1_norm(self.initial().primary().values(), self.initial().grid().spacing());
        relative_drift(&self.mass, l1)
    }

    pub fn velocity_mass_drift(&self) -> Option<f64> {
        let vm = self.velocity_mass.as_ref()?;
        let State::Second(s) = self.initial() else {
            return None;
        };
        Some(relative_drift(vm, l1_norm(s.w.values(), s.w.grid().spacing())))
    }
}

fn l1_norm(values: &[f64], h: f64) -> f64 {
    h * values.iter().map(|v| v.abs()).sum::<f64>()
}

fn relative_drift(series: &[f64], l1: f64) -> f64 {
    let m0 = series[0];
    let scale = m0.abs().max(l1);
    let dev = series.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        dev
    } else {
        dev / scale
    }
}

/// A run that may have stopped early; `trajectory` holds whatever was
/// sampled before the failure.
#[derive(Debug)]
pub struct Outcome {
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
}

pub fn integrate(
    op: &EvolutionOperator,
    init: &State,
    t_end: f64,
    policy: &StepPolicy,
    sample_every: usize,
) -> Result<Trajectory> {
    let out = integrate_with_scheme(op, init, t_end, policy, sample_every, Scheme::Rk4)?;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(out.trajectory),
    }
}

/// Like [`integrate`], but keeps the partial trajectory on numerical failure.
/// Only precondition violations are returned as `Err`.
pub fn integrate_partial(
    op: &EvolutionOperator,
    init: &State,
    t_end: f64,
    policy: &StepPolicy,
    sample_every: usize,
) -> Result<Outcome> {
    integrate_with_scheme(op, init, t_end, policy, sample_every, Scheme::Rk4)
}

pub fn integrate_with_scheme(
    op: &EvolutionOperator,
    init: &State,
    t_end: f64,
    policy: &StepPolicy,
    sample_every: usize,
    scheme: Scheme,
) -> Result<Outcome> {
    if init.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    if init.components() != op.components() {
        return Err(Error::InvalidModel(format!(
            "{} expects a {}-component state",
            op.spec().family,
            op.components()
        )));
    }
    if !(t_end > init.time()) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} must exceed the initial time {}",
            init.time()
        )));
    }
    if sample_every == 0 {
        return Err(Error::InvalidParameter("sample_every must be positive".into()));
    }
    let dt = policy.resolve_dt(op)?;
    let span = t_end - init.time();
    let n_steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    if n_steps > policy.max_steps {
        return Err(Error::MaxStepsExceeded(policy.max_steps));
    }

    let grid = op.grid().clone();
    let comps = op.components();
    let mut traj = Trajectory::new(init, dt);
    let mut y = init.to_flat();
    let mut stepper = Stepper::new(y.len());
    let t0 = init.time();

    for step in 1..=n_steps {
        let t_prev = t0 + (step - 1) as f64 * dt;
        let h = if step == n_steps { t_end - t_prev } else { dt };
        match scheme {
            Scheme::Rk4 => stepper.rk4(op, &mut y, h),
            Scheme::ForwardEuler => stepper.euler(op, &mut y, h),
        }
        traj.steps = step;
        let t = if step == n_steps { t_end } else { t0 + step as f64 * dt };

        if let Some(err) = guard(&y, t, policy.blowup_threshold) {
            return Ok(Outcome {
                trajectory: traj,
                failure: Some(err),
            });
        }
        if step % sample_every == 0 || step == n_steps {
            traj.push(State::from_flat(&grid, comps, y.clone(), t));
        }
    }
    Ok(Outcome {
        trajectory: traj,
        failure: None,
    })
}

fn guard(y: &[f64], t: f64, threshold: f64) -> Option<Error> {
    let mut max = 0.0_f64;
    let mut nan = false;
    for v in y {
        if v.is_nan() {
            nan = true;
        } else {
            max = max.max(v.abs());
        }
    }
    if max > threshold {
        return Some(Error::BlowUp {
            time: t,
            norm: max,
            threshold,
        });
    }
    if nan {
        return Some(Error::NonFinite(format!("NaN in state at t = {t}")));
    }
    None
}

struct Stepper {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stepper {
    fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    fn rk4(&mut self, op: &EvolutionOperator, y: &mut [f64], h: f64) {
        op.rhs_into(y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        op.rhs_into(&self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        op.rhs_into(&self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        op.rhs_into(&self.tmp, &mut self.k4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    fn euler(&mut self, op: &EvolutionOperator, y: &mut [f64], h: f64) {
        op.rhs_into(y, &mut self.k1);
        for (yi, k) in y.iter_mut().zip(&self.k1) {
            *yi += h * k;
        }
    }
}

/// What the terminal states of an order probe are compared against.
#[derive(Clone, Debug)]
pub enum Reference {
    /// A run at `min(dt) / factor`.
    Refined { factor: usize },
    /// A known terminal state.
    Exact(State),
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderProbe {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub fit: LineFit,
}

impl OrderProbe {
    pub fn observed_order(&self) -> f64 {
        self.fit.slope
    }
}

pub fn step_order_probe(
    op: &EvolutionOperator,
    init: &State,
    t_end: f64,
    dt_list: &[f64],
    reference: &Reference,
) -> Result<OrderProbe> {
    step_order_probe_with(op, init, t_end, dt_list, reference, Scheme::Rk4)
}

/// Log-log slope of the terminal max-norm error against `dt`.
pub fn step_order_probe_with(
    op: &EvolutionOperator,
    init: &State,
    t_end: f64,
    dt_list: &[f64],
    reference: &Reference,
    scheme: Scheme,
) -> Result<OrderProbe> {
    if dt_list.len() < 3 {
        return Err(Error::DegenerateFit("need at least three step sizes".into()));
    }
    let ratio = dt_list[1] / dt_list[0];
    if dt_list.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) || (ratio - 1.0).abs() < 1e-9 {
        return Err(Error::DegenerateFit("step sizes must form a geometric progression".into()));
    }
    let run = |dt: f64| -> Result<Vec<f64>> {
        let out = integrate_with_scheme(op, init, t_end, &StepPolicy::fixed(dt), usize::MAX, scheme)?;
        match out.failure {
            Some(e) => Err(e),
            None => Ok(out.trajectory.last().to_flat()),
        }
    };
    let reference = match reference {
        Reference::Exact(s) => s.to_flat(),
        Reference::Refined { factor } => {
            let finest = dt_list.iter().copied().fold(f64::INFINITY, f64::min);
            run(finest / (*factor).max(1) as f64)?
        }
    };
    let mut errors = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let y = run(dt)?;
        errors.push(y.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let fit = loglog_slope(dt_list, &errors)?;
    Ok(OrderProbe {
        dts: dt_list.to_vec(),
        errors,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_unidirectional_with, Family, ModelSpec, OperatorOptions};
    use crate::spectral::{Grid, WaveField};

    fn gaussian(grid: &Grid, a: f64, w: f64) -> WaveField {
        let c = grid.length() / 2.0;
        WaveField::from_fn(grid, |x| a * (-((x - c) / w).powi(2)).exp()).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = Grid::new(64, 40.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Ch), &g, OperatorOptions::default()).unwrap();
        let init = State::first(WaveField::zeros(&g), 0.0);
        let traj = integrate(&op, &init, 2.0, &StepPolicy::fixed(0.1), 5).unwrap();
        assert!(traj.states.iter().all(|s| s.max_norm() == 0.0));
        assert_eq!(*traj.times.last().unwrap(), 2.0);
        assert_eq!(traj.times.len(), 5);
    }

    #[test]
    fn advection_surrogate_translates() {
        let g = Grid::new(128, 40.0).unwrap();
        let opts = OperatorOptions {
            nonlinear: false,
            dispersive: false,
            dealias: true,
        };
        let op = build_unidirectional_with(&ModelSpec::original(Family::Kdv), &g, opts).unwrap();
        let init = State::first(gaussian(&g, 1.0, 2.0), 0.0);
        let t_end = 5.0;
        let traj = integrate(&op, &init, t_end, &StepPolicy::fixed(0.01), 1000).unwrap();
        let c = g.length() / 2.0 + t_end;
        let exact: Vec<f64> = g.nodes().iter().map(|x| (-((x - c) / 2.0_f64).powi(2)).exp()).collect();
        let err = traj
            .last()
            .primary()
            .values()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn last_step_lands_on_t_end() {
        let g = Grid::new(32, 10.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Bbm), &g, OperatorOptions::default()).unwrap();
        let init = State::first(gaussian(&g, 0.1, 1.0), 0.5);
        let traj = integrate(&op, &init, 1.23, &StepPolicy::fixed(0.1), 3).unwrap();
        assert_eq!(traj.steps, 8);
        assert_eq!(*traj.times.last().unwrap(), 1.23);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.times[0], 0.5);
    }

    #[test]
    fn preconditions() {
        let g = Grid::new(32, 10.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Kdv), &g, OperatorOptions::default()).unwrap();
        let init = State::first(gaussian(&g, 0.1, 1.0), 1.0);
        assert!(integrate(&op, &init, 1.0, &StepPolicy::fixed(0.1), 1).is_err());
        assert!(integrate(&op, &init, 2.0, &StepPolicy::fixed(-0.1), 1).is_err());
        assert!(integrate(&op, &init, 2.0, &StepPolicy::cfl(1.5), 1).is_err());
        assert!(integrate(&op, &init, 2.0, &StepPolicy::fixed(0.1), 0).is_err());
        let tight = StepPolicy {
            max_steps: 5,
            ..StepPolicy::fixed(0.1)
        };
        assert!(matches!(integrate(&op, &init, 2.0, &tight, 1), Err(Error::MaxStepsExceeded(5))));
    }

    #[test]
    fn blowup_is_caught_before_nan() {
        let g = Grid::new(128, 20.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Kdv), &g, OperatorOptions::default()).unwrap();
        let init = State::first(gaussian(&g, 0.5, 1.0), 0.0);
        // Far beyond the RK4 stability limit for the stiff ξ³ term.
        let out = integrate_partial(&op, &init, 50.0, &StepPolicy::fixed(0.05), 1).unwrap();
        assert!(matches!(out.failure, Some(Error::BlowUp { .. })), "{:?}", out.failure);
        assert!(out.trajectory.states.iter().all(|s| s.primary().values().iter().all(|v| v.is_finite())));
    }

    #[test]
    fn runs_are_bitwise_deterministic() {
        let g = Grid::new(64, 30.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Ch), &g, OperatorOptions::default()).unwrap();
        let init = State::first(gaussian(&g, 0.3, 2.0), 0.0);
        let a = integrate(&op, &init, 3.0, &StepPolicy::default(), 10).unwrap();
        let b = integrate(&op, &init, 3.0, &StepPolicy::default(), 10).unwrap();
        assert_eq!(a.times, b.times);
        for (x, y) in a.states.iter().zip(&b.states) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn order_probe_degenerate_cases() {
        let g = Grid::new(32, 10.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Ch), &g, OperatorOptions::default()).unwrap();
        let zero = State::first(WaveField::zeros(&g), 0.0);
        let r = step_order_probe(&op, &zero, 1.0, &[0.1, 0.05, 0.025], &Reference::Refined { factor: 8 });
        assert!(matches!(r, Err(Error::DegenerateFit(_))));
        let init = State::first(gaussian(&g, 0.1, 1.0), 0.0);
        assert!(step_order_probe(&op, &init, 1.0, &[0.1, 0.05], &Reference::Refined { factor: 8 }).is_err());
        assert!(step_order_probe(&op, &init, 1.0, &[0.1, 0.05, 0.01], &Reference::Refined { factor: 8 }).is_err());
    }

    #[test]
    fn euler_probe_is_first_order() {
        let g = Grid::new(64, 40.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Ch), &g, OperatorOptions::default()).unwrap();
        let init = State::first(gaussian(&g, 0.2, 3.0), 0.0);
        let dts = [0.02, 0.01, 0.005, 0.0025];
        let p = step_order_probe_with(&op, &init, 2.0, &dts, &Reference::Refined { factor: 8 }, Scheme::ForwardEuler).unwrap();
        assert!((p.observed_order() - 1.0).abs() <= 0.2, "{p:?}");
    }

    #[test]
    fn rk4_probe_on_smooth_ch_data() {
        let g = Grid::new(64, 40.0).unwrap();
        let op = build_unidirectional_with(&ModelSpec::original(Family::Ch), &g, OperatorOptions::default()).unwrap();
        let init = State::first(gaussian(&g, 0.3, 3.0), 0.0);
        let dts = [0.4, 0.2, 0.1, 0.05];
        let p = step_order_probe(&op, &init, 4.0, &dts, &Reference::Refined { factor: 8 }).unwrap();
        assert!((p.observed_order() - 4.0).abs() <= 0.3, "{p:?}");
    }
}

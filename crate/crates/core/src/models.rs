//! Spectral evolution operators for the bidirectional parent equations and
//! the unidirectional models obtained from them.
//!
//! Every unidirectional model is cast as
//!
//! ```text
//! M(ξ) v̂_t = L(ξ) v̂ + F[ q·v v_x + p·v_x v_xx + r·v v_xxx + f₁·Λ(v v_x) + f₂·v Λv_x ]
//! ```
//!
//! with `Λ = (-D²)^ν`, and only the coefficients differ between equations
//! and frames. The mass operator `M ≥ 1` is inverted exactly per mode.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::spectral::{check_nu, FourierSymbol, Grid, WaveField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Nonlocal { kernel: KernelKind },
    Ibq,
    Fibq { nu: f64 },
    Kdv,
    Bbm,
    Ch,
    Fkdv { nu: f64 },
    Fbbm { nu: f64 },
    Fch { nu: f64 },
}

impl Family {
    pub fn is_parent(&self) -> bool {
        matches!(self, Family::Nonlocal { .. } | Family::Ibq | Family::Fibq { .. })
    }

    pub fn nu(&self) -> f64 {
        match self {
            Family::Fibq { nu } | Family::Fkdv { nu } | Family::Fbbm { nu } | Family::Fch { nu } => *nu,
            Family::Nonlocal {
                kernel: KernelKind::Fractional { nu },
            } => *nu,
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Nonlocal { .. } => "nonlocal",
            Family::Ibq => "ibq",
            Family::Fibq { .. } => "fibq",
            Family::Kdv => "kdv",
            Family::Bbm => "bbm",
            Family::Ch => "ch",
            Family::Fkdv { .. } => "fkdv",
            Family::Fbbm { .. } => "fbbm",
            Family::Fch { .. } => "fch",
        }
    }

    /// Family from its short name; fractional families take `nu`.
    pub fn from_name(name: &str, nu: f64) -> Result<Self> {
        Ok(match name {
            "ibq" => Family::Ibq,
            "kdv" => Family::Kdv,
            "bbm" => Family::Bbm,
            "ch" => Family::Ch,
            "fibq" => Family::Fibq { nu },
            "fkdv" => Family::Fkdv { nu },
            "fbbm" => Family::Fbbm { nu },
            "fch" => Family::Fch { nu },
            "nonlocal" => Family::Nonlocal {
                kernel: KernelKind::Exponential,
            },
            other => return Err(Error::InvalidModel(format!("unknown model family `{other}`"))),
        })
    }

    /// The unidirectional family of the same kind at another ν.
    pub fn with_nu(&self, nu: f64) -> Self {
        match self {
            Family::Kdv | Family::Fkdv { .. } if nu == 1.0 => Family::Kdv,
            Family::Bbm | Family::Fbbm { .. } if nu == 1.0 => Family::Bbm,
            Family::Ch | Family::Fch { .. } if nu == 1.0 => Family::Ch,
            Family::Kdv | Family::Fkdv { .. } => Family::Fkdv { nu },
            Family::Bbm | Family::Fbbm { .. } => Family::Fbbm { nu },
            Family::Ch | Family::Fch { .. } => Family::Fch { nu },
            Family::Ibq | Family::Fibq { .. } if nu == 1.0 => Family::Ibq,
            Family::Ibq | Family::Fibq { .. } => Family::Fibq { nu },
            other => other.clone(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Fibq { nu } | Family::Fkdv { nu } | Family::Fbbm { nu } | Family::Fch { nu } => {
                write!(f, "{}:{}", self.name(), nu)
            }
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// `ch`, `fch:1.5`, `fkdv` (ν = 1).
    fn from_str(s: &str) -> Result<Self> {
        let (name, nu) = match s.split_once(':') {
            Some((n, v)) => (
                n,
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidModel(format!("bad nu in `{s}`")))?,
            ),
            None => (s, 1.0),
        };
        Family::from_name(name.trim(), nu)
    }
}

/// Reference frame of a model. Scaled frames carry the small parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case")]
pub enum Frame {
    /// Laboratory coordinates `(x, t)`.
    Original,
    /// Characteristic coordinates `Y = δ(x - t)`, `S = δt`, unknown `U`.
    Characteristic { epsilon: f64, delta: f64 },
    /// Moving coordinates `X = aY + bS`, `T = cS`, unknown `V`. With
    /// `ε = δ = 1` this is the `(ζ, τ)` form of the model.
    Moving { epsilon: f64, delta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(flatten)]
    pub frame: Frame,
}

impl ModelSpec {
    pub fn original(family: Family) -> Self {
        Self {
            family,
            frame: Frame::Original,
        }
    }

    pub fn characteristic(family: Family, epsilon: f64, delta: f64) -> Self {
        Self {
            family,
            frame: Frame::Characteristic { epsilon, delta },
        }
    }

    pub fn moving(family: Family, epsilon: f64, delta: f64) -> Self {
        Self {
            family,
            frame: Frame::Moving { epsilon, delta },
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.family {
            Family::Fibq { nu } | Family::Fkdv { nu } | Family::Fbbm { nu } | Family::Fch { nu } => check_nu(*nu)?,
            _ => {}
        }
        if self.family.is_parent() && self.frame != Frame::Original {
            return Err(Error::InvalidModel(format!(
                "{} is a parent model; scaled frames apply to unidirectional models only",
                self.family
            )));
        }
        if let Frame::Characteristic { epsilon, delta } | Frame::Moving { epsilon, delta } = self.frame {
            for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidParameter(format!("{name} must be finite and non-negative, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// Switches that remove parts of an operator. Only tests and ablations turn
/// them off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorOptions {
    pub nonlinear: bool,
    pub dispersive: bool,
    pub dealias: bool,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            nonlinear: true,
            dispersive: true,
            dealias: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderState {
    pub v: WaveField,
    pub time: f64,
}

/// Strain `u` and its time derivative `w = u_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderState {
    pub u: WaveField,
    pub w: WaveField,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum State {
    First(FirstOrderState),
    Second(SecondOrderState),
}

impl State {
    pub fn first(v: WaveField, time: f64) -> Self {
        State::First(FirstOrderState { v, time })
    }

    pub fn second(u: WaveField, w: WaveField, time: f64) -> Result<Self> {
        if u.grid() != w.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(State::Second(SecondOrderState { u, w, time }))
    }

    pub fn time(&self) -> f64 {
        match self {
            State::First(s) => s.time,
            State::Second(s) => s.time,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.primary().grid()
    }

    /// `v` for first-order states, the strain `u` for parents.
    pub fn primary(&self) -> &WaveField {
        match self {
            State::First(s) => &s.v,
            State::Second(s) => &s.u,
        }
    }

    pub fn max_norm(&self) -> f64 {
        match self {
            State::First(s) => s.v.max_norm(),
            State::Second(s) => s.u.max_norm().max(s.w.max_norm()),
        }
    }

    pub(crate) fn components(&self) -> usize {
        match self {
            State::First(_) => 1,
            State::Second(_) => 2,
        }
    }

    /// Components concatenated: `v`, or `u` followed by `u_t`.
    pub fn to_flat(&self) -> Vec<f64> {
        match self {
            State::First(s) => s.v.values().to_vec(),
            State::Second(s) => {
                let mut out = s.u.values().to_vec();
                out.extend_from_slice(s.w.values());
                out
            }
        }
    }

    pub(crate) fn from_flat(grid: &Grid, components: usize, flat: Vec<f64>, time: f64) -> Self {
        let n = grid.n_points();
        if components == 1 {
            State::first(WaveField::from_raw(grid, flat), time)
        } else {
            let w = flat[n..].to_vec();
            let mut u = flat;
            u.truncate(n);
            State::Second(SecondOrderState {
                u: WaveField::from_raw(grid, u),
                w: WaveField::from_raw(grid, w),
                time,
            })
        }
    }
}

/// `∫ v dx` (trapezoid rule, exact for trigonometric polynomials), or `∫ u dx`
/// for a parent state.
pub fn conserved_mass(state: &State) -> f64 {
    state.primary().integral()
}

/// `∫ u_t dx` of a parent state.
pub fn velocity_mass(state: &SecondOrderState) -> f64 {
    state.w.integral()
}

/// Coefficients of the unidirectional template above.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Coefficients {
    nu: f64,
    /// `L ∋ -c1 · iξ`
    advection: f64,
    /// `L ∋ d3 · (iξ)³`
    third_order: f64,
    /// `L ∋ dλ · |ξ|^{2ν} iξ`
    fractional: f64,
    /// `M = 1 + m2 ξ² + mλ |ξ|^{2ν}`
    mass_second: f64,
    mass_fractional: f64,
    quad: f64,
    ch_p: f64,
    ch_r: f64,
    frac_outer: f64,
    frac_inner: f64,
}

impl Coefficients {
    fn linear(&self, xi: f64) -> Complex64 {
        let lam = xi.abs().powf(2.0 * self.nu);
        Complex64::new(
            0.0,
            -self.advection * xi - self.third_order * xi.powi(3) + self.fractional * lam * xi,
        )
    }

    fn mass(&self, xi: f64) -> f64 {
        1.0 + self.mass_second * xi * xi + self.mass_fractional * xi.abs().powf(2.0 * self.nu)
    }

    fn has_ch_terms(&self) -> bool {
        self.ch_p != 0.0 || self.ch_r != 0.0
    }

    fn has_frac_terms(&self) -> bool {
        self.frac_outer != 0.0 || self.frac_inner != 0.0
    }

    fn strip(&mut self, options: &OperatorOptions) {
        if !options.dispersive {
            self.third_order = 0.0;
            self.fractional = 0.0;
            self.mass_second = 0.0;
            self.mass_fractional = 0.0;
            self.ch_p = 0.0;
            self.ch_r = 0.0;
            self.frac_outer = 0.0;
            self.frac_inner = 0.0;
        }
        if !options.nonlinear {
            self.quad = 0.0;
            self.ch_p = 0.0;
            self.ch_r = 0.0;
            self.frac_outer = 0.0;
            self.frac_inner = 0.0;
        }
    }
}

fn unidirectional_coefficients(spec: &ModelSpec) -> Result<Coefficients> {
    use Family::*;
    let nu = spec.family.nu();
    let c = Coefficients {
        nu,
        ..Coefficients::default()
    };
    let coeffs = match (&spec.family, spec.frame) {
        (Kdv, Frame::Original) => Coefficients {
            advection: 1.0,
            third_order: -0.5,
            quad: -1.0,
            ..c
        },
        (Bbm, Frame::Original) => Coefficients {
            advection: 1.0,
            third_order: 0.75,
            mass_second: 1.25,
            quad: -1.0,
            ..c
        },
        (Ch, Frame::Original) => Coefficients {
            advection: 1.0,
            third_order: 0.75,
            mass_second: 1.25,
            quad: -1.0,
            ch_p: 1.5,
            ch_r: 0.75,
            ..c
        },
        (Fkdv { .. }, Frame::Original) => Coefficients {
            advection: 1.0,
            fractional: 0.5,
            quad: -1.0,
            ..c
        },
        (Fbbm { .. }, Frame::Original) => Coefficients {
            advection: 1.0,
            fractional: -0.75,
            mass_fractional: 1.25,
            quad: -1.0,
            ..c
        },
        (Fch { .. }, Frame::Original) => Coefficients {
            advection: 1.0,
            fractional: -0.75,
            mass_fractional: 1.25,
            quad: -1.0,
            frac_outer: -0.5,
            frac_inner: -0.25,
            ..c
        },
        (Kdv, Frame::Characteristic { epsilon, delta }) => Coefficients {
            third_order: -0.5 * delta * delta,
            quad: -epsilon,
            ..c
        },
        (Ch, Frame::Characteristic { epsilon, delta }) => {
            let d2 = delta * delta;
            Coefficients {
                third_order: -0.5 * d2,
                quad: -epsilon,
                ch_p: -2.25 * epsilon * d2,
                ch_r: -0.5 * epsilon * d2,
                ..c
            }
        }
        (Fkdv { .. }, Frame::Characteristic { epsilon, delta }) => Coefficients {
            fractional: 0.5 * delta.powf(2.0 * nu),
            quad: -epsilon,
            ..c
        },
        (Fch { .. }, Frame::Characteristic { epsilon, delta }) => {
            let d2nu = delta.powf(2.0 * nu);
            Coefficients {
                fractional: 0.5 * d2nu,
                quad: -epsilon,
                frac_outer: 0.75 * epsilon * d2nu,
                frac_inner: -0.25 * epsilon * d2nu,
                ..c
            }
        }
        (Bbm, Frame::Moving { epsilon, delta }) => Coefficients {
            advection: 1.2,
            mass_second: delta * delta,
            quad: -3.0 * epsilon,
            ..c
        },
        (Ch, Frame::Moving { epsilon, delta }) => {
            let d2 = delta * delta;
            Coefficients {
                advection: 1.2,
                mass_second: d2,
                quad: -3.0 * epsilon,
                ch_p: 3.6 * epsilon * d2,
                ch_r: 1.8 * epsilon * d2,
                ..c
            }
        }
        (Fbbm { .. }, Frame::Moving { epsilon, delta }) => Coefficients {
            advection: 1.2,
            mass_fractional: delta.powf(2.0 * nu),
            quad: -3.0 * epsilon,
            ..c
        },
        (Fch { .. }, Frame::Moving { epsilon, delta }) => {
            let d2nu = delta.powf(2.0 * nu);
            Coefficients {
                advection: 1.2,
                mass_fractional: d2nu,
                quad: -3.0 * epsilon,
                frac_outer: -1.2 * epsilon * d2nu,
                frac_inner: -0.6 * epsilon * d2nu,
                ..c
            }
        }
        (family, frame) => {
            return Err(Error::InvalidModel(format!("{family} has no form in frame {frame:?}")));
        }
    };
    Ok(coeffs)
}

#[derive(Clone, Debug)]
enum Body {
    Parent {
        /// `-ξ² β̂(ξ)`
        stiffness: Vec<f64>,
        symbol: FourierSymbol,
    },
    Unidirectional {
        coeffs: Coefficients,
        linear: Vec<Complex64>,
        inv_mass: Vec<f64>,
        d1: Vec<Complex64>,
        d2: Vec<Complex64>,
        d3: Vec<Complex64>,
        lam: Vec<f64>,
    },
}

/// Executable right-hand side of one model on one grid.
#[derive(Clone, Debug)]
pub struct EvolutionOperator {
    spec: ModelSpec,
    grid: Grid,
    options: OperatorOptions,
    mass_symbol: FourierSymbol,
    body: Body,
}

/// `u_tt = (β ∗ (u + u²))_xx` and its IBq / fractional IBq special cases.
pub fn build_parent(spec: &ModelSpec, grid: &Grid) -> Result<EvolutionOperator> {
    build_parent_with(spec, grid, OperatorOptions::default())
}

pub fn build_parent_with(spec: &ModelSpec, grid: &Grid, options: OperatorOptions) -> Result<EvolutionOperator> {
    spec.validate()?;
    let (symbol, mass_symbol) = match &spec.family {
        Family::Ibq => (
            FourierSymbol::new(|xi| 1.0 / (1.0 + xi * xi)),
            FourierSymbol::new(|xi| 1.0 + xi * xi),
        ),
        Family::Fibq { nu } => {
            let nu = *nu;
            (
                FourierSymbol::new(move |xi: f64| 1.0 / (1.0 + xi.abs().powf(2.0 * nu))),
                FourierSymbol::new(move |xi: f64| 1.0 + xi.abs().powf(2.0 * nu)),
            )
        }
        Family::Nonlocal { kernel } => {
            let k = KernelSpec::from_kind(kernel.clone())?;
            let beta = k.symbol().clone();
            let inv = beta.clone();
            (beta, FourierSymbol::new(move |xi| 1.0 / inv.eval(xi)))
        }
        other => {
            return Err(Error::InvalidModel(format!("{other} is not a parent model")));
        }
    };
    let beta = symbol.sample(grid)?;
    if let Some(b) = beta.iter().find(|b| !(**b > 0.0 && **b <= 1.0 + 1e-12)) {
        return Err(Error::InvalidModel(format!(
            "kernel symbol {b} outside (0, 1]; the mass operator 1/β̂ must be at least 1"
        )));
    }
    let stiffness = grid
        .wavenumbers()
        .iter()
        .zip(&beta)
        .map(|(xi, b)| match spec.family {
            Family::Ibq => -xi * xi / (1.0 + xi * xi),
            _ => -xi * xi * b,
        })
        .collect();
    let stiffness = if options.dispersive {
        stiffness
    } else {
        grid.wavenumbers().iter().map(|xi| -xi * xi).collect()
    };
    Ok(EvolutionOperator {
        spec: spec.clone(),
        grid: grid.clone(),
        options,
        mass_symbol,
        body: Body::Parent { stiffness, symbol },
    })
}

pub fn build_unidirectional(spec: &ModelSpec, grid: &Grid) -> Result<EvolutionOperator> {
    build_unidirectional_with(spec, grid, OperatorOptions::default())
}

/// Scaled-frame forms `(Y, S)` and `(X, T)`.
pub fn build_unidirectional_scaled(spec: &ModelSpec, grid: &Grid) -> Result<EvolutionOperator> {
    if spec.frame == Frame::Original {
        return Err(Error::InvalidModel("scaled build needs epsilon and delta".into()));
    }
    build_unidirectional_with(spec, grid, OperatorOptions::default())
}

pub fn build_unidirectional_with(spec: &ModelSpec, grid: &Grid, options: OperatorOptions) -> Result<EvolutionOperator> {
    spec.validate()?;
    if spec.family.is_parent() {
        return Err(Error::InvalidModel(format!("{} is a parent model", spec.family)));
    }
    let mut coeffs = unidirectional_coefficients(spec)?;
    coeffs.strip(&options);
    let xi = grid.wavenumbers();
    let nyq = grid.nyquist_index();
    let linear = xi
        .iter()
        .enumerate()
        .map(|(j, &k)| if j == nyq { Complex64::default() } else { coeffs.linear(k) })
        .collect();
    let inv_mass = xi.iter().map(|&k| 1.0 / coeffs.mass(k)).collect();
    let mass_coeffs = coeffs;
    Ok(EvolutionOperator {
        spec: spec.clone(),
        grid: grid.clone(),
        options,
        mass_symbol: FourierSymbol::new(move |k| mass_coeffs.mass(k)),
        body: Body::Unidirectional {
            coeffs,
            linear,
            inv_mass,
            d1: grid.derivative_multiplier(1),
            d2: grid.derivative_multiplier(2),
            d3: grid.derivative_multiplier(3),
            lam: grid.fractional_multiplier(coeffs.nu),
        },
    })
}

/// Dispatches on the family and frame.
pub fn build(spec: &ModelSpec, grid: &Grid, options: OperatorOptions) -> Result<EvolutionOperator> {
    if spec.family.is_parent() {
        build_parent_with(spec, grid, options)
    } else {
        build_unidirectional_with(spec, grid, options)
    }
}

impl EvolutionOperator {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn options(&self) -> OperatorOptions {
        self.options
    }

    pub fn mass_symbol(&self) -> &FourierSymbol {
        &self.mass_symbol
    }

    pub fn is_parent(&self) -> bool {
        matches!(self.body, Body::Parent { .. })
    }

    pub fn components(&self) -> usize {
        if self.is_parent() {
            2
        } else {
            1
        }
    }

    /// Linear angular frequency `ω(ξ)` of the right-going branch.
    pub fn frequency(&self, xi: f64) -> f64 {
        match &self.body {
            Body::Parent { symbol, .. } => {
                let b = if self.options.dispersive { symbol.eval(xi) } else { 1.0 };
                xi * b.sqrt()
            }
            Body::Unidirectional { coeffs, .. } => -(coeffs.linear(xi) / coeffs.mass(xi)).im,
        }
    }

    /// `max |ω(ξ)/ξ|` over the nonzero grid wavenumbers.
    pub fn max_phase_speed(&self) -> f64 {
        let nyq = self.grid.nyquist_index();
        self.grid
            .wavenumbers()
            .iter()
            .enumerate()
            .filter(|(j, xi)| **xi != 0.0 && (self.is_parent() || *j != nyq))
            .map(|(_, &xi)| (self.frequency(xi) / xi).abs())
            .fold(0.0, f64::max)
    }

    /// Per-mode linear growth factor `λ(ξ)` with `v̂_t = λ v̂`
    /// (unidirectional models only).
    pub fn linear_multiplier(&self) -> Option<Vec<Complex64>> {
        match &self.body {
            Body::Unidirectional { linear, inv_mass, .. } => {
                Some(linear.iter().zip(inv_mass).map(|(l, m)| l * m).collect())
            }
            Body::Parent { .. } => None,
        }
    }

    pub fn derivative(&self, state: &State) -> Result<State> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if state.components() != self.components() {
            return Err(Error::InvalidModel(format!(
                "{} expects a {}-component state",
                self.spec.family,
                self.components()
            )));
        }
        let y = state.to_flat();
        let mut dy = vec![0.0; y.len()];
        self.rhs_into(&y, &mut dy);
        Ok(State::from_flat(&self.grid, self.components(), dy, state.time()))
    }

    /// Spectrum of the time derivative of `v` (or of `w` for parents).
    pub fn derivative_spectrum(&self, primary: &[f64]) -> Vec<Complex64> {
        let vhat = self.grid.fft_forward(primary);
        match &self.body {
            Body::Parent { stiffness, .. } => self.parent_spectrum(&vhat, stiffness),
            Body::Unidirectional { .. } => self.unidirectional_spectrum(&vhat),
        }
    }

    pub(crate) fn rhs_into(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.grid.n_points();
        match &self.body {
            Body::Parent { stiffness, .. } => {
                let (u, w) = y.split_at(n);
                let uhat = self.grid.fft_forward(u);
                let rhat = self.parent_spectrum(&uhat, stiffness);
                dy[..n].copy_from_slice(w);
                dy[n..].copy_from_slice(&self.grid.fft_inverse(&rhat));
            }
            Body::Unidirectional { .. } => {
                let vhat = self.grid.fft_forward(y);
                let out = self.unidirectional_spectrum(&vhat);
                dy.copy_from_slice(&self.grid.fft_inverse(&out));
            }
        }
    }

    fn parent_spectrum(&self, uhat: &[Complex64], stiffness: &[f64]) -> Vec<Complex64> {
        let mut total = uhat.to_vec();
        if self.options.nonlinear {
            let sq = self.grid.product(uhat, uhat, self.options.dealias);
            for (t, s) in total.iter_mut().zip(&sq) {
                *t += s;
            }
        }
        total.iter().zip(stiffness).map(|(t, k)| t * k).collect()
    }

    fn unidirectional_spectrum(&self, vhat: &[Complex64]) -> Vec<Complex64> {
        let Body::Unidirectional {
            coeffs,
            linear,
            inv_mass,
            d1,
            d2,
            d3,
            lam,
        } = &self.body
        else {
            unreachable!("unidirectional body")
        };
        let g = &self.grid;
        let dealias = self.options.dealias;
        let mut acc: Vec<Complex64> = linear.iter().zip(vhat).map(|(l, v)| l * v).collect();

        if coeffs.quad != 0.0 || coeffs.frac_outer != 0.0 {
            // v v_x in flux form: ½ (v²)_x
            let sq = g.product(vhat, vhat, dealias);
            let vvx: Vec<Complex64> = sq.iter().zip(d1).map(|(s, d)| 0.5 * s * d).collect();
            if coeffs.quad != 0.0 {
                axpy(&mut acc, coeffs.quad, &vvx);
            }
            if coeffs.frac_outer != 0.0 {
                let lvvx: Vec<Complex64> = vvx.iter().zip(lam).map(|(a, l)| a * l).collect();
                axpy(&mut acc, coeffs.frac_outer, &lvvx);
            }
        }
        if coeffs.has_ch_terms() {
            let vx = mul(vhat, d1);
            let vxx = mul(vhat, d2);
            let vxxx = mul(vhat, d3);
            if coeffs.ch_p != 0.0 {
                axpy(&mut acc, coeffs.ch_p, &g.product(&vx, &vxx, dealias));
            }
            if coeffs.ch_r != 0.0 {
                axpy(&mut acc, coeffs.ch_r, &g.product(vhat, &vxxx, dealias));
            }
        }
        if coeffs.has_frac_terms() && coeffs.frac_inner != 0.0 {
            let lvx: Vec<Complex64> = vhat.iter().zip(d1).zip(lam).map(|((v, d), l)| v * d * l).collect();
            axpy(&mut acc, coeffs.frac_inner, &g.product(vhat, &lvx, dealias));
        }
        for (a, m) in acc.iter_mut().zip(inv_mass) {
            *a *= m;
        }
        acc
    }
}

fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn axpy(acc: &mut [Complex64], alpha: f64, x: &[Complex64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += alpha * b;
    }
}

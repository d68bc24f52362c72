//! Numerical side of the two-parameter long-wave expansion.
//!
//! The parent strain is written `u(x, t) = ε U(Y, S)` with `Y = δ(x - t)` and
//! `S = δt`, and `U = U₀ + εU₁ + δ^{2ν}U₂ + εδ^{2ν}U₃ + …`. Only the
//! S-derivatives of the correctors are determined by the hierarchy; their
//! values at `S = 0` are fixed to zero, which makes every corrector a
//! polynomial in `S`:
//!
//! ```text
//! U₁ = S U₁S(Y)    U₂ = S U₂S(Y)    U₃ = S U₃S(Y, 0) + S²/2 U₃SS(Y)
//! ```
//!
//! All Y-derivatives are spectral; S-derivatives are taken analytically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{build_unidirectional_scaled, Family, ModelSpec, SecondOrderState, State};
use crate::spectral::{check_nu, interpolate_coefficients, Grid, WaveField};

pub const MAX_SMALL_PARAM: f64 = 0.5;

/// Spectral tail (relative to the peak coefficient) above which a field
/// counts as under-resolved.
pub const RESOLUTION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallParams {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "one")]
    pub nu: f64,
}

fn one() -> f64 {
    1.0
}

impl SmallParams {
    pub fn new(epsilon: f64, delta: f64, nu: f64) -> Result<Self> {
        let p = Self { epsilon, delta, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v <= MAX_SMALL_PARAM) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, {MAX_SMALL_PARAM}], got {v}"
                )));
            }
        }
        check_nu(self.nu)
    }

    /// `δ^{2ν}`
    pub fn dispersion(&self) -> f64 {
        if self.nu == 1.0 {
            self.delta * self.delta
        } else {
            self.delta.powf(2.0 * self.nu)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `a = (4/5)^{1/(2ν)}`, `b = 2a/5`, `c = a/3`.
pub fn frame_params(nu: f64) -> Result<FrameParams> {
    check_nu(nu)?;
    let a = if nu == 1.0 { 2.0 / 5.0_f64.sqrt() } else { 0.8_f64.powf(0.5 / nu) };
    Ok(FrameParams {
        a,
        b: 0.4 * a,
        c: a / 3.0,
    })
}

/// `(x, t) ↦ (ζ, τ) = (a(x - 3t/5), a t / 3)`.
pub fn original_frame_map(nu: f64, t: f64, x: f64) -> Result<(f64, f64)> {
    let FrameParams { a, c, .. } = frame_params(nu)?;
    Ok((a * (x - 0.6 * t), c * t))
}

/// Inverse of [`original_frame_map`], returning `(t, x)`.
pub fn original_frame_inverse(nu: f64, zeta: f64, tau: f64) -> Result<(f64, f64)> {
    let FrameParams { a, c, .. } = frame_params(nu)?;
    let t = tau / c;
    Ok((t, zeta / a + 0.6 * t))
}

/// Fails when the spectrum of `coeffs` above `|k| >= cutoff` exceeds
/// [`RESOLUTION_TOL`] of its peak.
pub(crate) fn check_tail(grid: &Grid, coeffs: &[Complex64], cutoff: usize, what: &str) -> Result<()> {
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(());
    }
    let tail = coeffs
        .iter()
        .enumerate()
        .filter(|(j, _)| grid.mode(*j).unsigned_abs() as usize >= cutoff)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    if tail > RESOLUTION_TOL * peak {
        return Err(Error::UnderResolved(format!(
            "{what}: spectral tail {:.2e} of peak beyond |k| = {cutoff}",
            tail / peak
        )));
    }
    Ok(())
}

pub(crate) fn check_resolved(field: &WaveField, what: &str) -> Result<()> {
    let g = field.grid();
    check_tail(g, &g.fft_forward(field.values()), g.dealias_cutoff() + 1, what)
}

/// Grid on which `ε U₀(δx)` lives: same node count, length `L_Y / δ`.
pub fn scaled_grid(y_grid: &Grid, delta: f64) -> Result<Grid> {
    Grid::new(y_grid.n_points(), y_grid.length() / delta)
}

/// `u(x) = ε U₀(δx)` on the x-grid that matches `U₀`'s grid node for node.
pub fn scale_down(u0: &WaveField, params: &SmallParams) -> Result<WaveField> {
    let target = scaled_grid(u0.grid(), params.delta)?;
    scale_down_onto(u0, params.epsilon, params.delta, &target)
}

/// `amplitude · U₀(δx)` on an arbitrary x-grid of length `L_Y / δ`, by
/// evaluating the trigonometric interpolant of `U₀`.
pub fn scale_down_onto(u0: &WaveField, amplitude: f64, delta: f64, target: &Grid) -> Result<WaveField> {
    let src = u0.grid();
    let expected = src.length() / delta;
    if ((target.length() - expected) / expected).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "target length {} does not equal L_Y/delta = {expected}",
            target.length()
        )));
    }
    let coeffs = src.fft_forward(u0.values());
    check_tail(src, &coeffs, src.dealias_cutoff() + 1, "U0 on its own grid")?;
    // Mode k of U₀ lands on mode k of the target grid.
    check_tail(src, &coeffs, (target.n_points() - 1) / 3 + 1, "U0 on the target grid")?;
    if target.n_points() == src.n_points() {
        let values = u0.values().iter().map(|v| amplitude * v).collect();
        return WaveField::new(target, values);
    }
    let points: Vec<f64> = target.nodes().iter().map(|x| delta * x).collect();
    let values = interpolate_coefficients(src, &coeffs, &points)
        .into_iter()
        .map(|v| amplitude * v)
        .collect();
    WaveField::new(target, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HierarchyPath {
    /// Closed forms with integer derivatives; only valid for ν = 1.
    Integer,
    /// Closed forms written with `(-D²)^ν`.
    Fractional,
}

impl HierarchyPath {
    pub fn for_nu(nu: f64) -> Self {
        if nu == 1.0 {
            HierarchyPath::Integer
        } else {
            HierarchyPath::Fractional
        }
    }
}

/// The correctors, their S-derivatives and the assembled `U_S`, at one `S`.
#[derive(Clone, Debug)]
pub struct HierarchyTerms {
    pub s: f64,
    pub u0: WaveField,
    pub u1s: WaveField,
    pub u2s: WaveField,
    /// `U₃S(Y, S)`.
    pub u3s: WaveField,
    pub u3ss: WaveField,
    pub u1: WaveField,
    pub u2: WaveField,
    pub u3: WaveField,
    /// `εU₁S + δ^{2ν}U₂S + εδ^{2ν}U₃S` at `S`.
    pub u_s: WaveField,
}

/// Spectral calculus on one grid; all products are dealiased.
struct Calc<'a> {
    grid: &'a Grid,
    d: [Vec<Complex64>; 5],
    lam: Vec<f64>,
}

type Spec = Vec<Complex64>;

impl<'a> Calc<'a> {
    fn new(grid: &'a Grid, nu: f64) -> Self {
        Self {
            grid,
            d: [
                vec![Complex64::new(1.0, 0.0); grid.n_points()],
                grid.derivative_multiplier(1),
                grid.derivative_multiplier(2),
                grid.derivative_multiplier(3),
                grid.derivative_multiplier(4),
            ],
            lam: grid.fractional_multiplier(nu),
        }
    }

    fn dy(&self, a: &[Complex64], order: usize) -> Spec {
        a.iter().zip(&self.d[order]).map(|(x, m)| x * m).collect()
    }

    fn lam(&self, a: &[Complex64]) -> Spec {
        a.iter().zip(&self.lam).map(|(x, m)| x * m).collect()
    }

    fn prod(&self, a: &[Complex64], b: &[Complex64]) -> Spec {
        self.grid.product(a, b, true)
    }

    fn field(&self, a: &[Complex64]) -> WaveField {
        WaveField::from_raw(self.grid, self.grid.fft_inverse(a))
    }
}

fn lin(terms: &[(f64, &[Complex64])]) -> Spec {
    let n = terms[0].1.len();
    let mut out = vec![Complex64::default(); n];
    for (alpha, x) in terms {
        for (o, v) in out.iter_mut().zip(x.iter()) {
            *o += *alpha * v;
        }
    }
    out
}

struct Spectra {
    u1s: Spec,
    u2s: Spec,
    u3s0: Spec,
    u3ss: Spec,
}

fn hierarchy_spectra(calc: &Calc, u0: &[Complex64], path: HierarchyPath) -> Spectra {
    let sq = calc.prod(u0, u0);
    let u0y = calc.dy(u0, 1);
    let u1s = lin(&[(-0.5, &calc.dy(&sq, 1))]);
    match path {
        HierarchyPath::Integer => {
            let u0yyy = calc.dy(u0, 3);
            let u2s = lin(&[(-0.5, &u0yyy)]);
            let u0u0y = calc.prod(u0, &u0y);
            let u0u0yyy = calc.prod(u0, &u0yyy);
            // U₁ = U₂ = 0 at S = 0.
            let u3s0 = lin(&[(-0.75, &calc.dy(&u0u0y, 2)), (0.25, &u0u0yyy)]);
            let u3ss = lin(&[(0.25, &calc.dy(&sq, 4)), (0.5, &calc.dy(&u0u0yyy, 1))]);
            Spectra { u1s, u2s, u3s0, u3ss }
        }
        HierarchyPath::Fractional => {
            let lam_u0y = calc.lam(&u0y);
            let u2s = lin(&[(0.5, &lam_u0y)]);
            let u0u0y = calc.prod(u0, &u0y);
            let u0_lam_u0y = calc.prod(u0, &lam_u0y);
            let u3s0 = lin(&[(0.75, &calc.lam(&u0u0y)), (-0.25, &u0_lam_u0y)]);
            let u3ss = lin(&[(-0.25, &calc.lam(&calc.dy(&sq, 2))), (-0.5, &calc.dy(&u0_lam_u0y, 1))]);
            Spectra { u1s, u2s, u3s0, u3ss }
        }
    }
}

pub fn hierarchy_terms(u0: &WaveField, params: &SmallParams, s: f64) -> Result<HierarchyTerms> {
    hierarchy_terms_with(u0, params, s, HierarchyPath::for_nu(params.nu))
}

pub fn hierarchy_terms_with(u0: &WaveField, params: &SmallParams, s: f64, path: HierarchyPath) -> Result<HierarchyTerms> {
    params.validate()?;
    if path == HierarchyPath::Integer && params.nu != 1.0 {
        return Err(Error::InvalidParameter("the integer hierarchy needs nu = 1".into()));
    }
    check_resolved(u0, "U0")?;
    let grid = u0.grid();
    let calc = Calc::new(grid, params.nu);
    let u0h = grid.fft_forward(u0.values());
    let sp = hierarchy_spectra(&calc, &u0h, path);

    let u1 = lin(&[(s, &sp.u1s)]);
    let u2 = lin(&[(s, &sp.u2s)]);
    // U₃S at S from its closed form with U₁(S), U₂(S) in place.
    let u0u2 = calc.prod(&u0h, &u2);
    let u3s_extra = match path {
        HierarchyPath::Integer => lin(&[(-1.0, &calc.dy(&u0u2, 1)), (-0.5, &calc.dy(&u1, 3))]),
        HierarchyPath::Fractional => lin(&[(-1.0, &calc.dy(&u0u2, 1)), (0.5, &calc.lam(&calc.dy(&u1, 1)))]),
    };
    let u3s = lin(&[(1.0, &sp.u3s0), (1.0, &u3s_extra)]);
    let u3 = lin(&[(s, &sp.u3s0), (0.5 * s * s, &sp.u3ss)]);
    let (eps, disp) = (params.epsilon, params.dispersion());
    let u_s = lin(&[(eps, &sp.u1s), (disp, &sp.u2s), (eps * disp, &u3s)]);
    Ok(HierarchyTerms {
        s,
        u0: u0.clone(),
        u1s: calc.field(&sp.u1s),
        u2s: calc.field(&sp.u2s),
        u3s: calc.field(&u3s),
        u3ss: calc.field(&sp.u3ss),
        u1: calc.field(&u1),
        u2: calc.field(&u2),
        u3: calc.field(&u3),
        u_s: calc.field(&u_s),
    })
}

/// Max-norm of the parent equation (in `U(Y, S)` form) evaluated at `S = 0`
/// on the expansion truncated after `order` terms:
/// 0 → `U₀`, 1 → `+εU₁`, 2 → `+δ^{2ν}U₂`, 3 → `+εδ^{2ν}U₃`.
pub fn expansion_residual(u0: &WaveField, params: &SmallParams, order: u8) -> Result<f64> {
    expansion_residual_with(u0, params, order, HierarchyPath::for_nu(params.nu))
}

pub fn expansion_residual_with(u0: &WaveField, params: &SmallParams, order: u8, path: HierarchyPath) -> Result<f64> {
    if order > 3 {
        return Err(Error::InvalidParameter(format!("expansion order must be 0..=3, got {order}")));
    }
    params.validate()?;
    if path == HierarchyPath::Integer && params.nu != 1.0 {
        return Err(Error::InvalidParameter("the integer hierarchy needs nu = 1".into()));
    }
    check_resolved(u0, "U0")?;
    let grid = u0.grid();
    let calc = Calc::new(grid, params.nu);
    let u0h = grid.fft_forward(u0.values());
    let sp = hierarchy_spectra(&calc, &u0h, path);
    let (eps, disp) = (params.epsilon, params.dispersion());
    let on = |k: u8| if order >= k { 1.0 } else { 0.0 };

    let u_s = lin(&[
        (eps * on(1), &sp.u1s),
        (disp * on(2), &sp.u2s),
        (eps * disp * on(3), &sp.u3s0),
    ]);
    let u_ss = lin(&[(eps * disp * on(3), &sp.u3ss)]);
    let sq = calc.prod(&u0h, &u0h);
    let residual = match path {
        // U_SS - 2U_YS - δ²(U_YYYY + U_YYSS - 2U_YYYS) - ε(U²)_YY
        HierarchyPath::Integer => lin(&[
            (1.0, &u_ss),
            (-2.0, &calc.dy(&u_s, 1)),
            (-disp, &calc.dy(&u0h, 4)),
            (-disp, &calc.dy(&u_ss, 2)),
            (2.0 * disp, &calc.dy(&u_s, 3)),
            (-eps, &calc.dy(&sq, 2)),
        ]),
        // U_SS - 2U_YS + δ^{2ν}Λ(U_SS + U_YY - 2U_SY) - ε(U²)_YY
        HierarchyPath::Fractional => {
            let inner = lin(&[(1.0, &u_ss), (1.0, &calc.dy(&u0h, 2)), (-2.0, &calc.dy(&u_s, 1))]);
            lin(&[
                (1.0, &u_ss),
                (-2.0, &calc.dy(&u_s, 1)),
                (disp, &calc.lam(&inner)),
                (-eps, &calc.dy(&sq, 2)),
            ])
        }
    };
    Ok(calc.field(&residual).max_norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// `u_t = -u_x + εδ U_S(δx)` with `U_S` from the CH-order evolution
    /// equation in characteristic variables.
    #[default]
    RightGoing,
    /// `u_t = -u_x`.
    Leading,
}

/// Right-going parent initial data `(u, u_t)` on the scaled x-grid.
pub fn unidirectional_initial_data(u0: &WaveField, params: &SmallParams, closure: Closure) -> Result<SecondOrderState> {
    let target = scaled_grid(u0.grid(), params.delta)?;
    unidirectional_initial_data_onto(u0, params, closure, &target)
}

pub fn unidirectional_initial_data_onto(
    u0: &WaveField,
    params: &SmallParams,
    closure: Closure,
    target: &Grid,
) -> Result<SecondOrderState> {
    params.validate()?;
    let y_grid = u0.grid();
    let u = scale_down_onto(u0, params.epsilon, params.delta, target)?;
    let u0y = crate::spectral::derivative(u0, 1)?;
    let z = match closure {
        Closure::Leading => u0y.values().iter().map(|v| -v).collect(),
        Closure::RightGoing => {
            let family = if params.nu == 1.0 { Family::Ch } else { Family::Fch { nu: params.nu } };
            let op = build_unidirectional_scaled(
                &ModelSpec::characteristic(family, params.epsilon, params.delta),
                y_grid,
            )?;
            let State::First(d) = op.derivative(&State::first(u0.clone(), 0.0))? else {
                unreachable!("unidirectional operator returns a first-order state")
            };
            d.v.values().iter().zip(u0y.values()).map(|(us, uy)| us - uy).collect()
        }
    };
    let z = WaveField::new(y_grid, z)?;
    let w = scale_down_onto(&z, params.epsilon * params.delta, params.delta, target)?;
    Ok(SecondOrderState { u, w, time: 0.0 })
}

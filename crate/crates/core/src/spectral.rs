//! Periodic pseudospectral primitives on a uniform 1-D grid.
//!
//! Transform convention, used by every module in the crate:
//!
//! ```text
//! c_k = (L/n) Σ_j f_j exp(-i ξ_k x_j)        f_j = (1/L) Σ_k c_k exp(i ξ_k x_j)
//! ```
//!
//! with `x_j = jL/n` and `ξ_k = 2πk/L`. The zero coefficient is `L · mean(f)`,
//! so `c_k` approximates the continuous transform `∫ f(x) e^{-iξx} dx` of a
//! decaying profile, and Parseval reads `(L/n) Σ |f_j|² = (1/L) Σ |c_k|²`.
//!
//! Coefficients are stored in FFT order: index `j` holds mode `j` for
//! `j <= n/2` and mode `j - n` above. The Nyquist mode `n/2` is carried with
//! positive wavenumber.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;

struct GridInner {
    n: usize,
    length: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[0, L)` together with its FFT plans.
///
/// Cloning is cheap; clones share nodes, wavenumbers and plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }
}

impl Grid {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < MIN_POINTS || n_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and at least {MIN_POINTS}, got {n_points}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        let h = length / n_points as f64;
        let nodes = (0..n_points).map(|j| j as f64 * h).collect();
        let wavenumbers = (0..n_points)
            .map(|j| 2.0 * PI * mode_of(j, n_points) as f64 / length)
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_points);
        let ifft = planner.plan_fft_inverse(n_points);
        Ok(Self {
            inner: Arc::new(GridInner {
                n: n_points,
                length,
                nodes,
                wavenumbers,
                fft,
                ifft,
            }),
        })
    }

    pub fn n_points(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Signed integer mode carried at storage index `j`.
    pub fn mode(&self, j: usize) -> i64 {
        mode_of(j, self.inner.n)
    }

    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Largest retained |k| under the two-thirds rule (strictly `3|k| < n`).
    pub fn dealias_cutoff(&self) -> usize {
        (self.inner.n - 1) / 3
    }

    pub(crate) fn is_retained(&self, j: usize) -> bool {
        3 * (self.mode(j).unsigned_abs() as usize) < self.inner.n
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.inner.n {
            return Err(Error::LengthMismatch {
                expected: self.inner.n,
                found: len,
            });
        }
        Ok(())
    }

    pub(crate) fn fft_forward(&self, values: &[f64]) -> Vec<Complex64> {
        let scale = self.spacing();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.fft.process(&mut buf);
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    pub(crate) fn fft_inverse(&self, coefficients: &[Complex64]) -> Vec<f64> {
        let scale = 1.0 / self.inner.length;
        let mut buf = coefficients.to_vec();
        self.inner.ifft.process(&mut buf);
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Multiplier `(iξ)^order` on every grid wavenumber. Odd orders zero the
    /// Nyquist mode so that real data stays real.
    pub(crate) fn derivative_multiplier(&self, order: u32) -> Vec<Complex64> {
        let nyq = self.nyquist_index();
        self.wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &xi)| {
                if order % 2 == 1 && j == nyq {
                    return Complex64::new(0.0, 0.0);
                }
                let mag = xi.powi(order as i32);
                match order % 4 {
                    0 => Complex64::new(mag, 0.0),
                    1 => Complex64::new(0.0, mag),
                    2 => Complex64::new(-mag, 0.0),
                    _ => Complex64::new(0.0, -mag),
                }
            })
            .collect()
    }

    /// `|ξ|^{2ν}` on every grid wavenumber.
    pub(crate) fn fractional_multiplier(&self, nu: f64) -> Vec<f64> {
        self.wavenumbers()
            .iter()
            .map(|xi| xi.abs().powf(2.0 * nu))
            .collect()
    }

    pub(crate) fn truncate(&self, coefficients: &mut [Complex64]) {
        for (j, c) in coefficients.iter_mut().enumerate() {
            if !self.is_retained(j) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Pseudospectral product of two real fields given by their spectra.
    ///
    /// With `dealias` both factors and the result are projected onto the
    /// two-thirds band, which makes the retained coefficients of the product
    /// exact. Without it this is the plain (aliased) collocation product.
    pub(crate) fn product(&self, a: &[Complex64], b: &[Complex64], dealias: bool) -> Vec<Complex64> {
        let (a_real, b_real) = if dealias {
            let mut a = a.to_vec();
            let mut b = b.to_vec();
            self.truncate(&mut a);
            self.truncate(&mut b);
            (self.fft_inverse(&a), self.fft_inverse(&b))
        } else {
            (self.fft_inverse(a), self.fft_inverse(b))
        };
        let prod: Vec<f64> = a_real.iter().zip(&b_real).map(|(x, y)| x * y).collect();
        let mut out = self.fft_forward(&prod);
        if dealias {
            self.truncate(&mut out);
        }
        out
    }
}

fn mode_of(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub fn make_grid(n_points: usize, length: f64) -> Result<Grid> {
    Grid::new(n_points, length)
}

/// Real samples of one scalar field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    grid: Grid,
    values: Vec<f64>,
}

impl WaveField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {j}")));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.n_points()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm `sqrt(h Σ f_j²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `h Σ f_j`, the trapezoid rule, which is spectrally exact on the torus.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// Circular shift by `m` nodes: `out[j] = in[j - m]`.
    pub fn shifted(&self, m: isize) -> Self {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|j| self.values[(j - m).rem_euclid(n) as usize])
            .collect();
        Self::from_raw(&self.grid, values)
    }
}

/// Fourier coefficients of one field in the crate-wide convention.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectrumField {
    pub fn new(grid: &Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coefficients.len())?;
        Ok(Self {
            grid: grid.clone(),
            coefficients,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Largest deviation from `c(-ξ) = conj(c(ξ))`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.coefficients.len();
        (1..n)
            .map(|j| (self.coefficients[j] - self.coefficients[n - j].conj()).norm())
            .fold(self.coefficients[0].im.abs(), f64::max)
    }
}

/// Even real multiplier `ξ ↦ m(ξ)` defining a translation-invariant operator.
#[derive(Clone)]
pub struct FourierSymbol {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for FourierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FourierSymbol")
    }
}

impl FourierSymbol {
    pub fn new(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
        }
    }

    pub fn identity() -> Self {
        Self::new(|_| 1.0)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        (self.eval)(xi)
    }

    /// Values on every grid wavenumber; fails on the first non-finite one.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        grid.wavenumbers()
            .iter()
            .map(|&xi| {
                let m = self.eval(xi);
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(Error::NonFinite(format!("symbol value {m} at wavenumber {xi}")))
                }
            })
            .collect()
    }
}

pub fn forward(field: &WaveField) -> SpectrumField {
    SpectrumField {
        grid: field.grid.clone(),
        coefficients: field.grid.fft_forward(&field.values),
    }
}

/// Inverse transform; the imaginary residue of a real field is discarded.
pub fn inverse(spec: &SpectrumField) -> WaveField {
    WaveField::from_raw(&spec.grid, spec.grid.fft_inverse(&spec.coefficients))
}

pub fn apply_symbol(spec: &SpectrumField, sym: &FourierSymbol) -> Result<SpectrumField> {
    let m = sym.sample(&spec.grid)?;
    Ok(SpectrumField {
        grid: spec.grid.clone(),
        coefficients: spec.coefficients.iter().zip(&m).map(|(c, m)| c * m).collect(),
    })
}

pub fn derivative(field: &WaveField, order: u32) -> Result<WaveField> {
    if order == 0 {
        return Err(Error::InvalidParameter("derivative order must be at least 1".into()));
    }
    let grid = &field.grid;
    let mult = grid.derivative_multiplier(order);
    let coeffs: Vec<Complex64> = grid
        .fft_forward(&field.values)
        .iter()
        .zip(&mult)
        .map(|(c, m)| c * m)
        .collect();
    Ok(WaveField::from_raw(grid, grid.fft_inverse(&coeffs)))
}

pub(crate) fn check_nu(nu: f64) -> Result<()> {
    if nu.is_finite() && nu >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("nu must satisfy nu >= 1, got {nu}")))
    }
}

/// `(-D²)^ν`, the Fourier multiplier `|ξ|^{2ν}`.
pub fn fractional_laplacian(field: &WaveField, nu: f64) -> Result<WaveField> {
    check_nu(nu)?;
    let grid = &field.grid;
    let mult = grid.fractional_multiplier(nu);
    let coeffs: Vec<Complex64> = grid
        .fft_forward(&field.values)
        .iter()
        .zip(&mult)
        .map(|(c, m)| c * m)
        .collect();
    Ok(WaveField::from_raw(grid, grid.fft_inverse(&coeffs)))
}

/// `β ∗ v` realized through the kernel symbol `β̂`.
pub fn convolve(field: &WaveField, kernel_symbol: &FourierSymbol) -> Result<WaveField> {
    let spec = apply_symbol(&forward(field), kernel_symbol)?;
    Ok(inverse(&spec))
}

/// Two-thirds rule: keeps only modes with `3|k| < n`.
pub fn dealias(spec: &SpectrumField) -> SpectrumField {
    let mut coefficients = spec.coefficients.clone();
    spec.grid.truncate(&mut coefficients);
    SpectrumField {
        grid: spec.grid.clone(),
        coefficients,
    }
}

/// Dealiased product of two real fields given in spectral form.
pub fn dealiased_product(a: &SpectrumField, b: &SpectrumField) -> Result<SpectrumField> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(SpectrumField {
        grid: a.grid.clone(),
        coefficients: a.grid.product(&a.coefficients, &b.coefficients, true),
    })
}

/// Evaluates the trigonometric interpolant of `field` at arbitrary points.
pub fn interpolate(field: &WaveField, points: &[f64]) -> Vec<f64> {
    let grid = &field.grid;
    let coeffs = grid.fft_forward(&field.values);
    interpolate_coefficients(grid, &coeffs, points)
}

pub(crate) fn interpolate_coefficients(grid: &Grid, coeffs: &[Complex64], points: &[f64]) -> Vec<f64> {
    let n = grid.n_points();
    let nyq = grid.nyquist_index();
    let inv_len = 1.0 / grid.length();
    let xi = grid.wavenumbers();
    points
        .iter()
        .map(|&y| {
            let mut acc = coeffs[0].re;
            for j in 1..nyq {
                let (s, c) = (xi[j] * y).sin_cos();
                acc += 2.0 * (coeffs[j].re * c - coeffs[j].im * s);
            }
            acc += coeffs[nyq].re * (xi[nyq] * y).cos();
            debug_assert!(n >= 2);
            acc * inv_len
        })
        .collect()
}

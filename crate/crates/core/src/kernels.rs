//! Constitutive kernels, represented by their Fourier symbols `β̂(ξ)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{check_nu, FourierSymbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum KernelKind {
    Exponential,
    Fractional { nu: f64 },
    Tabulated { xi: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct KernelSpec {
    kind: KernelKind,
    symbol: FourierSymbol,
}

impl KernelSpec {
    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn symbol(&self) -> &FourierSymbol {
        &self.symbol
    }

    /// β(x) in real space, when a closed form is known.
    pub fn real_space(&self, x: f64) -> Option<f64> {
        match self.kind {
            KernelKind::Exponential => Some(0.5 * (-x.abs()).exp()),
            _ => None,
        }
    }

    pub fn from_kind(kind: KernelKind) -> Result<Self> {
        match kind {
            KernelKind::Exponential => Ok(exponential_kernel()),
            KernelKind::Fractional { nu } => fractional_kernel(nu),
            KernelKind::Tabulated { xi, values } => tabulated_kernel(xi, values),
        }
    }
}

/// `β(x) = ½e^{-|x|}`, symbol `(1+ξ²)⁻¹`.
pub fn exponential_kernel() -> KernelSpec {
    KernelSpec {
        kind: KernelKind::Exponential,
        symbol: FourierSymbol::new(|xi| 1.0 / (1.0 + xi * xi)),
    }
}

/// Symbol `(1+|ξ|^{2ν})⁻¹`; `ν = 1` is the exponential kernel.
pub fn fractional_kernel(nu: f64) -> Result<KernelSpec> {
    check_nu(nu)?;
    let symbol = if nu == 1.0 {
        FourierSymbol::new(|xi| 1.0 / (1.0 + xi * xi))
    } else {
        FourierSymbol::new(move |xi: f64| 1.0 / (1.0 + xi.abs().powf(2.0 * nu)))
    };
    Ok(KernelSpec {
        kind: KernelKind::Fractional { nu },
        symbol,
    })
}

/// Piecewise-linear symbol through `(ξ_i, β̂_i)`, mirrored to negative ξ.
/// Wavenumbers beyond the last sample evaluate to NaN, so sampling the
/// symbol on a grid that outruns the table fails instead of extrapolating.
pub fn tabulated_kernel(xi: Vec<f64>, values: Vec<f64>) -> Result<KernelSpec> {
    if xi.len() != values.len() {
        return Err(Error::KernelTable(format!(
            "{} wavenumbers but {} symbol values",
            xi.len(),
            values.len()
        )));
    }
    if xi.len() < 2 {
        return Err(Error::KernelTable("need at least two rows".into()));
    }
    if xi[0] != 0.0 {
        return Err(Error::KernelTable(format!("first wavenumber must be 0, got {}", xi[0])));
    }
    if xi.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::KernelTable("wavenumbers must be strictly increasing".into()));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::KernelTable("symbol values must be positive and finite".into()));
    }
    if (values[0] - 1.0).abs() > 1e-9 {
        return Err(Error::KernelTable(format!("symbol at 0 must be 1, got {}", values[0])));
    }
    let (tx, tv) = (xi.clone(), values.clone());
    let symbol = FourierSymbol::new(move |xi: f64| interp_linear(&tx, &tv, xi.abs()));
    Ok(KernelSpec {
        kind: KernelKind::Tabulated { xi, values },
        symbol,
    })
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x > xs[last] || x.is_nan() {
        return f64::NAN;
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, last);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Reads a two-column `ξ, β̂(ξ)` CSV. A non-numeric first row is treated as
/// a header.
pub fn load_tabulated_kernel(path: impl AsRef<Path>) -> Result<KernelSpec> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut xi = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::KernelTable(format!("row {row} has fewer than two columns")));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(v)) => {
                xi.push(x);
                values.push(v);
            }
            _ if row == 0 => continue,
            _ => return Err(Error::KernelTable(format!("row {row} is not numeric"))),
        }
    }
    tabulated_kernel(xi, values)
}

/// How `classify_symbol` samples the small-wavenumber range.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub xi_max: f64,
    pub samples: usize,
    /// The fit covers `[xi_max · 10^-decades, xi_max]`.
    pub decades: f64,
    pub max_residual: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            xi_max: 0.5,
            samples: 32,
            decades: 2.0,
            max_residual: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub nu_estimate: f64,
    /// Root-mean-square deviation of the log-log fit.
    pub fit_residual: f64,
    pub fit_range: (f64, f64),
    pub samples: usize,
}

pub fn classify_symbol(spec: &KernelSpec, xi_max: f64) -> Result<ClassificationResult> {
    classify_symbol_with(
        spec,
        &ClassifyOptions {
            xi_max,
            ..ClassifyOptions::default()
        },
    )
}

/// Fits `log(1/β̂(ξ) - 1) = log C + 2ν log ξ` near the origin.
///
/// Tabulated kernels are fitted on their own nodes inside `(0, xi_max]`:
/// linear interpolation between nodes is not a power law and would bias the
/// slope.
pub fn classify_symbol_with(spec: &KernelSpec, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    if !(opts.xi_max > 0.0 && opts.xi_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("xi_max must be positive, got {}", opts.xi_max)));
    }
    let xis: Vec<f64> = match &spec.kind {
        KernelKind::Tabulated { xi, .. } => xi.iter().copied().filter(|&x| x > 0.0 && x <= opts.xi_max).collect(),
        _ => {
            if opts.samples < 3 || !(opts.decades > 0.0) {
                return Err(Error::InvalidParameter("need at least 3 samples over a positive range".into()));
            }
            let lo = opts.xi_max.ln() - opts.decades * std::f64::consts::LN_10;
            let step = (opts.xi_max.ln() - lo) / (opts.samples - 1) as f64;
            (0..opts.samples).map(|i| (lo + step * i as f64).exp()).collect()
        }
    };
    if xis.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "only {} symbol samples inside (0, {}]",
            xis.len(),
            opts.xi_max
        )));
    }
    let mut xs = Vec::with_capacity(xis.len());
    let mut ys = Vec::with_capacity(xis.len());
    for &xi in &xis {
        let b = spec.symbol.eval(xi);
        let excess = 1.0 / b - 1.0;
        if !(b > 0.0 && excess > 0.0 && excess.is_finite()) {
            return Err(Error::ClassificationFailed {
                nu_estimate: f64::NAN,
                residual: f64::INFINITY,
            });
        }
        xs.push(xi.ln());
        ys.push(excess.ln());
    }
    let fit = crate::fit::least_squares_line(&xs, &ys)?;
    let result = ClassificationResult {
        nu_estimate: fit.slope / 2.0,
        fit_residual: fit.rms_residual,
        fit_range: (xis[0], xis[xis.len() - 1]),
        samples: xis.len(),
    };
    if result.fit_residual >= opts.max_residual || result.nu_estimate < 1.0 - 1e-6 {
        return Err(Error::ClassificationFailed {
            nu_estimate: result.nu_estimate,
            residual: result.fit_residual,
        });
    }
    Ok(result)
}

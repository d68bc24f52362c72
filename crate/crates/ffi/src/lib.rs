//! C interface to `nlwave`.
//!
//! Objects are opaque handles created by `nlw_*_new` and released by the
//! matching `nlw_*_free`. Every function returns an [`NlwStatus`]; on failure
//! a message is available from [`nlw_last_error`] on the same thread. Arrays
//! are caller-owned and must hold `n_points` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nlwave::asymptotics::frame_params;
use nlwave::harness::soliton_benchmark;
use nlwave::kernels::{classify_symbol, exponential_kernel, fractional_kernel, tabulated_kernel};
use nlwave::models::{build, Family, ModelSpec, OperatorOptions, State};
use nlwave::spectral::{fractional_laplacian, Grid, WaveField};
use nlwave::timestepping::{integrate_partial, StepPolicy};
use nlwave::{Error, EvolutionOperator, KernelSpec};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    /// Blow-up, non-finite values, step limit or under-resolution. Outputs
    /// hold the last good state where the function documents it.
    Numerical = 4,
    ClassificationFailed = 5,
    Panic = 6,
}

pub struct NlwGrid {
    grid: Grid,
}

pub struct NlwModel {
    op: EvolutionOperator,
}

pub struct NlwKernel {
    spec: KernelSpec,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NlwFrameParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NlwClassification {
    pub nu_estimate: f64,
    pub fit_residual: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NlwRunReport {
    pub t_reached: f64,
    pub dt: f64,
    pub steps: u64,
    pub mass_drift: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NlwSolitonReport {
    pub speed: f64,
    pub t_end: f64,
    pub initial_residual: f64,
    pub shape_error: f64,
    pub phase_error: f64,
    pub mass_drift: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NlwStatus {
    match e {
        Error::InvalidModel(_) => NlwStatus::InvalidModel,
        Error::ClassificationFailed { .. } => NlwStatus::ClassificationFailed,
        e if e.is_numerical() => NlwStatus::Numerical,
        _ => NlwStatus::InvalidArgument,
    }
}

struct Fail(NlwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NlwStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NlwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            NlwStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copies the last error message of this thread into `buf` (nul-terminated,
/// truncated to `len`). Returns the full message length, 0 if none.
#[no_mangle]
pub unsafe extern "C" fn nlw_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let k = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, k);
                *buf.add(k) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn nlw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[no_mangle]
pub unsafe extern "C" fn nlw_grid_new(n_points: usize, length: f64, grid_out: *mut *mut NlwGrid) -> NlwStatus {
    guard(|| {
        let slot = out(grid_out, "grid_out")?;
        let grid = Grid::new(n_points, length)?;
        *slot = Box::into_raw(Box::new(NlwGrid { grid }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nlw_grid_free(grid: *mut NlwGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Returns 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nlw_grid_n_points(grid: *const NlwGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.grid.n_points())
}

/// Writes the `n_points` node positions.
#[no_mangle]
pub unsafe extern "C" fn nlw_grid_nodes(grid: *const NlwGrid, nodes_out: *mut f64) -> NlwStatus {
    guard(|| {
        let g = &handle(grid, "grid")?.grid;
        slice_mut(nodes_out, g.n_points(), "nodes_out")?.copy_from_slice(g.nodes());
        Ok(())
    })
}

/// `name` is a family such as `ch`, `bbm`, `kdv`, `ibq`, `nonlocal` or a
/// fractional family with its order, e.g. `fch:1.5`. Models are in the
/// original frame with dealiasing on.
#[no_mangle]
pub unsafe extern "C" fn nlw_model_new(grid: *const NlwGrid, name: *const c_char, model_out: *mut *mut NlwModel) -> NlwStatus {
    guard(|| {
        let g = &handle(grid, "grid")?.grid;
        let slot = out(model_out, "model_out")?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Fail(NlwStatus::InvalidArgument, "name is not UTF-8".into()))?;
        let family: Family = name.parse()?;
        let op = build(&ModelSpec::original(family), g, OperatorOptions::default())?;
        *slot = Box::into_raw(Box::new(NlwModel { op }));
        Ok(())
    })
}

/// The nonlocal parent with the given kernel.
#[no_mangle]
pub unsafe extern "C" fn nlw_model_new_nonlocal(
    grid: *const NlwGrid,
    kernel: *const NlwKernel,
    model_out: *mut *mut NlwModel,
) -> NlwStatus {
    guard(|| {
        let g = &handle(grid, "grid")?.grid;
        let k = &handle(kernel, "kernel")?.spec;
        let slot = out(model_out, "model_out")?;
        let family = Family::Nonlocal { kernel: k.kind().clone() };
        let op = build(&ModelSpec::original(family), g, OperatorOptions::default())?;
        *slot = Box::into_raw(Box::new(NlwModel { op }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nlw_model_free(model: *mut NlwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// 2 for second-order parents (`u`, `u_t`), 1 otherwise; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn nlw_model_components(model: *const NlwModel) -> usize {
    model.as_ref().map_or(0, |m| m.op.components())
}

/// Linear frequency ω(ξ).
#[no_mangle]
pub unsafe extern "C" fn nlw_model_frequency(model: *const NlwModel, xi: f64, omega_out: *mut f64) -> NlwStatus {
    guard(|| {
        let m = handle(model, "model")?;
        *out(omega_out, "omega_out")? = m.op.frequency(xi);
        Ok(())
    })
}

fn state_from(op: &EvolutionOperator, u: &[f64], w: Option<&[f64]>, time: f64) -> Result<State, Fail> {
    let g = op.grid();
    let u = WaveField::new(g, u.to_vec())?;
    if op.is_parent() {
        let w = w.ok_or_else(|| null("second component"))?;
        Ok(State::second(u, WaveField::new(g, w.to_vec())?, time)?)
    } else {
        Ok(State::first(u, time))
    }
}

fn write_state(s: &State, u_out: &mut [f64], w_out: Option<&mut [f64]>) {
    match s {
        State::First(f) => u_out.copy_from_slice(f.v.values()),
        State::Second(p) => {
            u_out.copy_from_slice(p.u.values());
            if let Some(w) = w_out {
                w.copy_from_slice(p.w.values());
            }
        }
    }
}

/// Time derivative of the state. `w`/`dw_out` are the `u_t` component and are
/// only read/written for two-component models (pass null otherwise).
#[no_mangle]
pub unsafe extern "C" fn nlw_model_rhs(
    model: *const NlwModel,
    u: *const f64,
    w: *const f64,
    du_out: *mut f64,
    dw_out: *mut f64,
) -> NlwStatus {
    guard(|| {
        let op = &handle(model, "model")?.op;
        let n = op.grid().n_points();
        let two = op.is_parent();
        let w = if two { Some(slice(w, n, "w")?) } else { None };
        let state = state_from(op, slice(u, n, "u")?, w, 0.0)?;
        let d = op.derivative(&state)?;
        let dw = if two { Some(slice_mut(dw_out, n, "dw_out")?) } else { None };
        write_state(&d, slice_mut(du_out, n, "du_out")?, dw);
        Ok(())
    })
}

/// Integrates in place from `t = 0` to `t_end` with RK4. `step > 0` is a
/// fixed step, `step < 0` a CFL number `-step`. On `Numerical` failure the
/// arrays hold the last good state and `report` says how far it got.
#[no_mangle]
pub unsafe extern "C" fn nlw_integrate(
    model: *const NlwModel,
    u: *mut f64,
    w: *mut f64,
    t_end: f64,
    step: f64,
    report: *mut NlwRunReport,
) -> NlwStatus {
    guard(|| {
        let op = &handle(model, "model")?.op;
        let n = op.grid().n_points();
        let two = op.is_parent();
        let u = slice_mut(u, n, "u")?;
        let mut w = if two { Some(slice_mut(w, n, "w")?) } else { None };
        let init = state_from(op, u, w.as_deref(), 0.0)?;
        let policy = if step > 0.0 {
            StepPolicy::fixed(step)
        } else if step < 0.0 {
            StepPolicy::cfl(-step)
        } else {
            return Err(Fail(NlwStatus::InvalidArgument, "step must be non-zero".into()));
        };
        let outcome = integrate_partial(op, &init, t_end, &policy, usize::MAX)?;
        let traj = &outcome.trajectory;
        write_state(traj.last(), u, w.as_deref_mut());
        if let Some(r) = report.as_mut() {
            *r = NlwRunReport {
                t_reached: traj.last().time(),
                dt: traj.dt,
                steps: traj.steps as u64,
                mass_drift: traj.mass_drift(),
            };
        }
        match outcome.failure {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    })
}

/// `(-d²/dx²)^ν` applied to `n_points` samples.
#[no_mangle]
pub unsafe extern "C" fn nlw_fractional_laplacian(
    grid: *const NlwGrid,
    nu: f64,
    input: *const f64,
    output: *mut f64,
) -> NlwStatus {
    guard(|| {
        let g = &handle(grid, "grid")?.grid;
        let n = g.n_points();
        let f = WaveField::new(g, slice(input, n, "input")?.to_vec())?;
        let r = fractional_laplacian(&f, nu)?;
        slice_mut(output, n, "output")?.copy_from_slice(r.values());
        Ok(())
    })
}

fn new_kernel(slot: *mut *mut NlwKernel, spec: nlwave::Result<KernelSpec>) -> Result<(), Fail> {
    let slot = unsafe { out(slot, "kernel_out")? };
    *slot = Box::into_raw(Box::new(NlwKernel { spec: spec? }));
    Ok(())
}

/// β̂(ξ) = 1/(1 + ξ²).
#[no_mangle]
pub unsafe extern "C" fn nlw_kernel_exponential(kernel_out: *mut *mut NlwKernel) -> NlwStatus {
    guard(|| new_kernel(kernel_out, Ok(exponential_kernel())))
}

/// β̂(ξ) = 1/(1 + |ξ|^{2ν}), ν ≥ 1.
#[no_mangle]
pub unsafe extern "C" fn nlw_kernel_fractional(nu: f64, kernel_out: *mut *mut NlwKernel) -> NlwStatus {
    guard(|| new_kernel(kernel_out, fractional_kernel(nu)))
}

/// Kernel from `len` samples (ξ_i, β̂_i), ξ ascending from 0.
#[no_mangle]
pub unsafe extern "C" fn nlw_kernel_tabulated(
    xi: *const f64,
    values: *const f64,
    len: usize,
    kernel_out: *mut *mut NlwKernel,
) -> NlwStatus {
    guard(|| {
        let xi = slice(xi, len, "xi")?.to_vec();
        let values = slice(values, len, "values")?.to_vec();
        new_kernel(kernel_out, tabulated_kernel(xi, values))
    })
}

#[no_mangle]
pub unsafe extern "C" fn nlw_kernel_free(kernel: *mut NlwKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

#[no_mangle]
pub unsafe extern "C" fn nlw_kernel_symbol(kernel: *const NlwKernel, xi: f64, value_out: *mut f64) -> NlwStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        *out(value_out, "value_out")? = k.spec.symbol().eval(xi);
        Ok(())
    })
}

/// Estimates ν from the small-ξ behaviour. On `ClassificationFailed` the
/// result still carries the estimate and fit residual.
#[no_mangle]
pub unsafe extern "C" fn nlw_kernel_classify(
    kernel: *const NlwKernel,
    xi_max: f64,
    result_out: *mut NlwClassification,
) -> NlwStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let slot = out(result_out, "result_out")?;
        match classify_symbol(&k.spec, xi_max) {
            Ok(r) => {
                *slot = NlwClassification {
                    nu_estimate: r.nu_estimate,
                    fit_residual: r.fit_residual,
                };
                Ok(())
            }
            Err(e) => {
                if let Error::ClassificationFailed { nu_estimate, residual } = e {
                    *slot = NlwClassification {
                        nu_estimate,
                        fit_residual: residual,
                    };
                }
                Err(e.into())
            }
        }
    })
}

/// Coefficients of the moving frame `X = aY + bS`, `T = cS`.
#[no_mangle]
pub unsafe extern "C" fn nlw_frame_params(nu: f64, params_out: *mut NlwFrameParams) -> NlwStatus {
    guard(|| {
        let slot = out(params_out, "params_out")?;
        let p = frame_params(nu)?;
        *slot = NlwFrameParams { a: p.a, b: p.b, c: p.c };
        Ok(())
    })
}

/// KdV soliton of the given amplitude carried once around a periodic domain
/// with RK4 at CFL number `cfl`.
#[no_mangle]
pub unsafe extern "C" fn nlw_soliton_benchmark(
    amplitude: f64,
    n_points: usize,
    length: f64,
    cfl: f64,
    report_out: *mut NlwSolitonReport,
) -> NlwStatus {
    guard(|| {
        let slot = out(report_out, "report_out")?;
        let grid = Grid::new(n_points, length)?;
        let r = soliton_benchmark(amplitude, &grid, &StepPolicy::cfl(cfl))?;
        *slot = NlwSolitonReport {
            speed: r.speed,
            t_end: r.t_end,
            initial_residual: r.initial_residual,
            shape_error: r.shape_error,
            phase_error: r.phase_error,
            mass_drift: r.mass_drift,
        };
        Ok(())
    })
}


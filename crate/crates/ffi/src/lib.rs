//! C ABI over the `derham` library.
//!
//! Every function returns a [`DerhamStatus`]; results go through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. The message of the most recent failure on the calling thread
//! is available from [`derham_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use derham::app::{RunConfig, Simulation};
use derham::assembly::DeRhamComplex;
use derham::swe_linear::{dispersion, DispersionParams};
use derham::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerhamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Solver = 4,
    Invariant = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Function space family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerhamFamily {
    V0 = 0,
    V1 = 1,
    V2 = 2,
}

/// One row of run diagnostics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DerhamDiagnostics {
    pub step: u64,
    pub time: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub mass: f64,
    pub total_vorticity: f64,
    pub div_l2: f64,
    pub newton_iters: u64,
    pub residual_norm: f64,
}

/// Opaque handle to an assembled de Rham complex.
pub struct DerhamComplex(Arc<DeRhamComplex>);

/// Opaque handle to a running simulation.
pub struct DerhamSimulation {
    sim: Simulation,
    last_iters: usize,
    last_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DerhamStatus {
    match e {
        Error::Config(_) | Error::Expression { .. } => DerhamStatus::Config,
        Error::Io { .. } | Error::Format(_) => DerhamStatus::Io,
        Error::NonPositiveDepth { .. } | Error::Invariant(_) | Error::NonRealFrequency { .. } => {
            DerhamStatus::Invariant
        }
        Error::NotConverged { .. } | Error::Stagnation { .. } | Error::Diverged { .. } | Error::Breakdown(_) => {
            DerhamStatus::Solver
        }
        Error::InvalidMesh(_)
        | Error::InvalidArgument(_)
        | Error::OutOfRange { .. }
        | Error::DimensionMismatch { .. } => DerhamStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), DerhamStatus>) -> DerhamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DerhamStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            DerhamStatus::Panic
        }
    }
}

fn check<T>(r: derham::Result<T>) -> Result<T, DerhamStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), DerhamStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(DerhamStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// NUL-terminated library version. Owned by the library.
#[no_mangle]
pub extern "C" fn derham_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn derham_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                // SAFETY: caller guarantees `len` writable bytes at `buf`
                unsafe {
                    ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                    *buf.add(n) = 0;
                }
            }
            bytes.len()
        }
    })
}

/// Builds the complex on an `nx` by `ny` periodic mesh of size `lx` by `ly`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to be
/// released with [`derham_complex_free`].
#[no_mangle]
pub unsafe extern "C" fn derham_complex_new(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    out: *mut *mut DerhamComplex,
) -> DerhamStatus {
    guard(|| {
        non_null(out, "out")?;
        let dc = check(DeRhamComplex::build(nx, ny, lx, ly))?;
        // SAFETY: checked non-null above
        unsafe { *out = Box::into_raw(Box::new(DerhamComplex(dc))) };
        Ok(())
    })
}

/// # Safety
/// `complex` must be null or a handle from [`derham_complex_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn derham_complex_free(complex: *mut DerhamComplex) {
    if !complex.is_null() {
        // SAFETY: handle came from Box::into_raw
        drop(unsafe { Box::from_raw(complex) });
    }
}

/// Number of global degrees of freedom of a space.
///
/// # Safety
/// `complex` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn derham_complex_ndofs(
    complex: *const DerhamComplex,
    family: DerhamFamily,
    out: *mut usize,
) -> DerhamStatus {
    guard(|| {
        non_null(complex, "complex")?;
        non_null(out, "out")?;
        // SAFETY: checked non-null; caller guarantees liveness
        let dc = unsafe { &(*complex).0 };
        let n = match family {
            DerhamFamily::V0 => dc.n0(),
            DerhamFamily::V1 => dc.n1(),
            DerhamFamily::V2 => dc.n2(),
        };
        unsafe { *out = n };
        Ok(())
    })
}

/// Applies `div ∘ grad_perp` to `psi` (length V0) and writes the V2 result
/// to `out` (length `out_len`).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn derham_complex_div_grad_perp(
    complex: *const DerhamComplex,
    psi: *const f64,
    psi_len: usize,
    out: *mut f64,
    out_len: usize,
) -> DerhamStatus {
    guard(|| {
        non_null(complex, "complex")?;
        non_null(psi, "psi")?;
        non_null(out, "out")?;
        // SAFETY: checked non-null; caller guarantees lengths
        let dc = unsafe { &(*complex).0 };
        if psi_len != dc.n0() {
            set_error(format!("psi has length {psi_len}, expected {}", dc.n0()));
            return Err(DerhamStatus::InvalidArgument);
        }
        if out_len < dc.n2() {
            set_error(format!("out has length {out_len}, need {}", dc.n2()));
            return Err(DerhamStatus::BufferTooSmall);
        }
        let psi = unsafe { std::slice::from_raw_parts(psi, psi_len) };
        let r = dc.div.matvec(&dc.grad_perp.matvec(psi));
        unsafe { ptr::copy_nonoverlapping(r.as_ptr(), out, r.len()) };
        Ok(())
    })
}

/// Creates a simulation from INI config text.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn derham_simulation_new(
    config: *const c_char,
    out: *mut *mut DerhamSimulation,
) -> DerhamStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        // SAFETY: caller guarantees a NUL-terminated string
        let text = unsafe { CStr::from_ptr(config) }.to_str().map_err(|_| {
            set_error("config is not valid UTF-8".into());
            DerhamStatus::InvalidArgument
        })?;
        let cfg = check(RunConfig::parse(text))?;
        let sim = check(Simulation::new(&cfg))?;
        let handle = DerhamSimulation {
            sim,
            last_iters: 0,
            last_residual: 0.0,
        };
        unsafe { *out = Box::into_raw(Box::new(handle)) };
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from [`derham_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn derham_simulation_free(sim: *mut DerhamSimulation) {
    if !sim.is_null() {
        // SAFETY: handle came from Box::into_raw
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Advances the simulation by `steps` time steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn derham_simulation_step(sim: *mut DerhamSimulation, steps: usize) -> DerhamStatus {
    guard(|| {
        non_null(sim, "sim")?;
        // SAFETY: checked non-null; caller guarantees exclusive access
        let h = unsafe { &mut *sim };
        for _ in 0..steps {
            let (it, res) = check(h.sim.advance())?;
            h.last_iters = it;
            h.last_residual = res;
        }
        Ok(())
    })
}

/// Diagnostics of the current state.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn derham_simulation_diagnostics(
    sim: *const DerhamSimulation,
    out: *mut DerhamDiagnostics,
) -> DerhamStatus {
    guard(|| {
        non_null(sim, "sim")?;
        non_null(out, "out")?;
        // SAFETY: checked non-null
        let h = unsafe { &*sim };
        let r = check(h.sim.record(h.last_iters, h.last_residual))?;
        unsafe {
            *out = DerhamDiagnostics {
                step: r.step as u64,
                time: r.time,
                energy: r.energy,
                enstrophy: r.enstrophy,
                mass: r.mass,
                total_vorticity: r.total_vorticity,
                div_l2: r.div_l2,
                newton_iters: r.newton_iters as u64,
                residual_norm: r.residual_norm,
            }
        };
        Ok(())
    })
}

/// Copies the coefficients of the named prognostic field into `buf`.
/// `written` receives the field length; if `buf_len` is too small nothing
/// is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `sim` must be a live handle, `name` NUL-terminated, `buf` valid for
/// `buf_len` values (or null when `buf_len` is 0) and `written` valid.
#[no_mangle]
pub unsafe extern "C" fn derham_simulation_field(
    sim: *const DerhamSimulation,
    name: *const c_char,
    buf: *mut f64,
    buf_len: usize,
    written: *mut usize,
) -> DerhamStatus {
    guard(|| {
        non_null(sim, "sim")?;
        non_null(name, "name")?;
        non_null(written, "written")?;
        // SAFETY: checked non-null
        let h = unsafe { &*sim };
        let name = unsafe { CStr::from_ptr(name) }.to_string_lossy();
        let fields = check(h.sim.fields())?;
        let Some((_, f)) = fields.iter().find(|(n, _)| *n == name) else {
            let known: Vec<&str> = fields.iter().map(|(n, _)| *n).collect();
            set_error(format!("unknown field '{name}', expected one of {known:?}"));
            return Err(DerhamStatus::InvalidArgument);
        };
        unsafe { *written = f.len() };
        if buf_len < f.len() {
            set_error(format!("buffer holds {buf_len} values, field has {}", f.len()));
            return Err(DerhamStatus::BufferTooSmall);
        }
        non_null(buf, "buf")?;
        unsafe { ptr::copy_nonoverlapping(f.coeffs().as_ptr(), buf, f.len()) };
        Ok(())
    })
}

/// Discrete linear shallow water frequencies at wavenumber `(kx, ky)` on a
/// uniform mesh with spacing `(dx, dy)`, sorted ascending into `out[0..3]`.
///
/// # Safety
/// `out` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn derham_dispersion(
    kx: f64,
    ky: f64,
    f: f64,
    g: f64,
    h: f64,
    dx: f64,
    dy: f64,
    out: *mut f64,
) -> DerhamStatus {
    guard(|| {
        non_null(out, "out")?;
        let w = check(dispersion(kx, ky, &DispersionParams { f, g, h }, dx, dy))?;
        // SAFETY: caller guarantees three doubles
        unsafe { ptr::copy_nonoverlapping(w.as_ptr(), out, 3) };
        Ok(())
    })
}

//! C ABI over `cusp_lab`.
//!
//! Grid functions cross the boundary as opaque `CuspGrid` handles owned by
//! the caller and released with `cusp_grid_free`. Every fallible call
//! returns a `CuspStatus`; the message of the last failure on the calling
//! thread is available from `cusp_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use cusp_lab::config::Config;
use cusp_lab::harness::{self, CorpusCache, Status};
use cusp_lab::lattice::{gfn, Mat};
use cusp_lab::{pucci, regularize, EllipticityParams, Error, GridFunction, Lattice, OperatorValue, Region};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CuspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Numeric = 5,
    Uncertified = 6,
    Panic = 7,
}

/// Opaque grid function.
pub struct CuspGrid {
    inner: GridFunction,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspParams {
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CuspValueKind {
    Finite = 0,
    PlusInfinity = 1,
    MinusInfinity = 2,
}

/// `value` is meaningful only for `CUSP_VALUE_KIND_FINITE`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspOperatorValue {
    pub kind: CuspValueKind,
    pub value: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CuspHypothesisReport {
    pub checked_nodes: usize,
    pub active_nodes: usize,
    pub band_nodes: usize,
    pub max_super_residual: f64,
    pub max_sub_residual: f64,
    pub level: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CuspExperimentStatus {
    Pass = 0,
    Fail = 1,
    Vacuous = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CuspStatus {
    match e {
        Error::Io(_) => CuspStatus::Io,
        Error::Format { .. } => CuspStatus::Format,
        Error::NonFinite { .. }
        | Error::NonConvergence { .. }
        | Error::SingularSeparation { .. }
        | Error::BarrierCondition(_)
        | Error::GridTooCoarse(_) => CuspStatus::Numeric,
        Error::Uncertified(_) | Error::StaleCertification(_) | Error::InvalidCorpus(_) => CuspStatus::Uncertified,
        _ => CuspStatus::InvalidArgument,
    }
}

struct Fail(CuspStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CuspStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(CuspStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording failures and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CuspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CuspStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CuspStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn string(ptr: *const c_char, what: &str) -> Result<String, Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map(str::to_owned).map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn grid<'a>(g: *const CuspGrid) -> Result<&'a GridFunction, Fail> {
    g.as_ref().map(|g| &g.inner).ok_or_else(|| null("grid"))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn params(p: &CuspParams) -> Result<EllipticityParams, Fail> {
    Ok(EllipticityParams::new(p.lambda, p.big_lambda, p.gamma)?)
}

fn boxed(f: GridFunction) -> *mut CuspGrid {
    Box::into_raw(Box::new(CuspGrid { inner: f }))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one, so a
/// caller can size the buffer with a first call passing `len = 0`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len = 0`.
#[no_mangle]
pub unsafe extern "C" fn cusp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Grid function on the lattice `origin + spacing * index` with `shape[i]`
/// nodes along axis `i`; `values` holds `prod(shape)` entries, last axis
/// fastest.
///
/// # Safety
/// `shape` and `origin` must point to `dim` entries, `values` to the node
/// count, `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_new(
    dim: usize,
    shape: *const usize,
    origin: *const f64,
    spacing: f64,
    values: *const f64,
    out: *mut *mut CuspGrid,
) -> CuspStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let shape = slice(shape, dim, "shape")?.to_vec();
        let origin = slice(origin, dim, "origin")?.to_vec();
        let lat = Lattice::new(shape, origin, spacing)?;
        let vals = slice(values, lat.len(), "values")?.to_vec();
        let f = GridFunction::new(lat, vals)?;
        put(out, boxed(f), "out")
    })
}

/// Constant grid function on the `n`-per-side lattice covering the centred
/// ball of `radius`.
///
/// # Safety
/// `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_covering_ball(dim: usize, n: usize, radius: f64, value: f64, out: *mut *mut CuspGrid) -> CuspStatus {
    guard(|| {
        let lat = Lattice::covering_ball(dim, n, radius)?;
        let f = GridFunction::constant(&lat, value)?;
        put(out, boxed(f), "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_load(path: *const c_char, out: *mut *mut CuspGrid) -> CuspStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        let f = gfn::load_gfn(&path).map_err(|e| {
            let Fail(s, m) = Fail::from(e);
            Fail(s, format!("{}: {m}", path.display()))
        })?;
        put(out, boxed(f), "out")
    })
}

/// # Safety
/// `g` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_save(g: *const CuspGrid, path: *const c_char) -> CuspStatus {
    guard(|| {
        let f = grid(g)?;
        Ok(gfn::save_gfn(f, string(path, "path")?)?)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `g` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_free(g: *mut CuspGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node count; 0 for null.
///
/// # Safety
/// `g` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_len(g: *const CuspGrid) -> usize {
    g.as_ref().map_or(0, |g| g.inner.lattice().len())
}

/// Lattice spacing; NaN for null.
///
/// # Safety
/// `g` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_spacing(g: *const CuspGrid) -> f64 {
    g.as_ref().map_or(f64::NAN, |g| g.inner.lattice().spacing())
}

/// Copies the node values into `buf`, which must hold the node count.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cusp_grid_copy_values(g: *const CuspGrid, buf: *mut f64, len: usize) -> CuspStatus {
    guard(|| {
        let f = grid(g)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < f.values().len() {
            return Err(invalid(format!("buffer holds {len} values, grid has {}", f.values().len())));
        }
        std::ptr::copy_nonoverlapping(f.values().as_ptr(), buf, f.values().len());
        Ok(())
    })
}

fn operator_value(v: OperatorValue) -> CuspOperatorValue {
    match v {
        OperatorValue::Finite(value) => CuspOperatorValue { kind: CuspValueKind::Finite, value },
        OperatorValue::PlusInfinity => CuspOperatorValue { kind: CuspValueKind::PlusInfinity, value: f64::INFINITY },
        OperatorValue::MinusInfinity => CuspOperatorValue { kind: CuspValueKind::MinusInfinity, value: f64::NEG_INFINITY },
    }
}

type Operator = fn(&Mat, &[f64], &EllipticityParams) -> cusp_lab::Result<OperatorValue>;

unsafe fn operator(
    op: Operator,
    hessian: *const f64,
    gradient: *const f64,
    dim: usize,
    p: *const CuspParams,
    out: *mut CuspOperatorValue,
) -> CuspStatus {
    guard(|| {
        let h = Mat::from_row_slice(dim, dim, slice(hessian, dim * dim, "hessian")?);
        let g = slice(gradient, dim, "gradient")?;
        let p = params(p.as_ref().ok_or_else(|| null("params"))?)?;
        put(out, operator_value(op(&h, g, &p)?), "out")
    })
}

/// Cutoff maximal operator on a symmetric `dim x dim` row-major Hessian.
///
/// # Safety
/// `hessian` must hold `dim * dim` doubles, `gradient` `dim`.
#[no_mangle]
pub unsafe extern "C" fn cusp_m_plus(
    hessian: *const f64,
    gradient: *const f64,
    dim: usize,
    params: *const CuspParams,
    out: *mut CuspOperatorValue,
) -> CuspStatus {
    operator(pucci::m_plus, hessian, gradient, dim, params, out)
}

/// Cutoff minimal operator; see `cusp_m_plus`.
///
/// # Safety
/// As for `cusp_m_plus`.
#[no_mangle]
pub unsafe extern "C" fn cusp_m_minus(
    hessian: *const f64,
    gradient: *const f64,
    dim: usize,
    params: *const CuspParams,
    out: *mut CuspOperatorValue,
) -> CuspStatus {
    operator(pucci::m_minus, hessian, gradient, dim, params, out)
}

/// Certifies `M^- u <= level` on the centred ball of `radius`, and
/// `M^+ u >= -level` as well when `two_sided` is set. A failed
/// certification is still `CUSP_STATUS_OK`; read `out->pass`.
///
/// # Safety
/// Pointers must be valid; `g` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cusp_check_hypothesis(
    g: *const CuspGrid,
    level: f64,
    params: *const CuspParams,
    radius: f64,
    tolerance: f64,
    two_sided: bool,
    out: *mut CuspHypothesisReport,
) -> CuspStatus {
    guard(|| {
        let f = grid(g)?;
        let p = self::params(params.as_ref().ok_or_else(|| null("params"))?)?;
        let region = Region::centered_ball(f.lattice().dim(), radius);
        let r = if two_sided {
            pucci::check_two_sided(f, level, &p, &region, tolerance)?
        } else {
            pucci::check_supersolution(f, level, &p, &region, tolerance)?
        };
        let rep = CuspHypothesisReport {
            checked_nodes: r.checked_nodes,
            active_nodes: r.active_nodes,
            band_nodes: r.band_nodes,
            max_super_residual: r.max_super_residual,
            max_sub_residual: r.max_sub_residual,
            level: r.level,
            tolerance: r.tolerance,
            pass: r.pass,
        };
        put(out, rep, "out")
    })
}

/// Exact discrete inf-convolution; the result is a new handle.
///
/// # Safety
/// `g` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cusp_inf_convolve(g: *const CuspGrid, epsilon: f64, out: *mut *mut CuspGrid) -> CuspStatus {
    guard(|| {
        let f = grid(g)?;
        let res = regularize::inf_convolve(f, epsilon)?;
        put(out, boxed(res.smoothed), "out")
    })
}

/// Runs one experiment. `config` is `"default"`, a TOML path, or null for
/// the default; `seed` and `grid` override it when non-zero. Reports are
/// written to `out_dir` unless it is null.
///
/// # Safety
/// String arguments must be NUL-terminated or null where allowed; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cusp_run_experiment(
    name: *const c_char,
    config: *const c_char,
    seed: u64,
    grid: usize,
    out_dir: *const c_char,
    out: *mut CuspExperimentStatus,
) -> CuspStatus {
    guard(|| {
        let name = string(name, "name")?;
        if !harness::EXPERIMENTS.contains(&name.as_str()) {
            return Err(invalid(format!("unknown experiment {name:?}")));
        }
        let mut cfg = if config.is_null() { Config::default() } else { Config::load(&string(config, "config")?)? };
        if seed != 0 {
            cfg.seed = seed;
        }
        if grid != 0 {
            cfg.grid = grid;
        }
        cfg.validate()?;
        let report = harness::run(&name, &cfg, &mut CorpusCache::default())?;
        if !out_dir.is_null() {
            report.write(&PathBuf::from(string(out_dir, "out_dir")?), false)?;
        }
        let s = match report.status {
            Status::Pass => CuspExperimentStatus::Pass,
            Status::Fail => CuspExperimentStatus::Fail,
            Status::Vacuous => CuspExperimentStatus::Vacuous,
        };
        put(out, s, "out")
    })
}

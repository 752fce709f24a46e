//! C ABI over the `affine-strand` library.
//!
//! Every function returns an [`AsStatus`]. On failure a message is stored in
//! a thread-local slot readable through [`as_last_error_message`]. Handles are
//! opaque; each `*_new`/`*_from_*`/`*_run` result must be released with the
//! matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use affine_strand::config::{Scenario, ScenarioConfig};
use affine_strand::hamiltonian::{density, energy, gradient, PhasePoint};
use affine_strand::state::SolutionSeries;
use affine_strand::verify::identity_suite;
use affine_strand::Error;

/// Status code returned by every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    BlowUp = 5,
    Io = 6,
    OutOfRange = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Evolved field selector for [`as_series_copy_field`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsField {
    Rho = 0,
    PiT = 1,
    MuT = 2,
    OmegaS = 3,
}

/// Summary of an identity-suite run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AsIdentitySummary {
    pub checks: usize,
    pub failed: usize,
    /// Largest `max_error / tolerance` over all checks.
    pub worst_ratio: f64,
    pub all_passed: bool,
}

/// Opaque validated scenario.
pub struct AsScenario(Scenario);

/// Opaque sequence of snapshots.
pub struct AsSeries(SolutionSeries);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> AsStatus {
    match err {
        Error::BlowUp { .. } => AsStatus::BlowUp,
        Error::Io { .. } | Error::Malformed { .. } => AsStatus::Io,
        Error::Config(_) => AsStatus::Config,
        _ => AsStatus::InvalidArgument,
    }
}

fn fail(status: AsStatus, message: impl Into<String>) -> AsStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> AsStatus) -> AsStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(AsStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, AsStatus> {
    if p.is_null() {
        return Err(fail(AsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(AsStatus::InvalidUtf8, e.to_string()))
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(AsStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failing call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn as_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a TOML scenario.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn as_scenario_from_toml(toml: *const c_char, out: *mut *mut AsScenario) -> AsStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = try_status!(str_arg(toml));
        match ScenarioConfig::from_toml_str(text).and_then(|c| c.build()) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(AsScenario(s)));
                AsStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `scenario` must come from [`as_scenario_from_toml`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn as_scenario_free(scenario: *mut AsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of grid points.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn as_scenario_grid_size(scenario: *const AsScenario, out: *mut usize) -> AsStatus {
    guard(|| {
        non_null!(scenario, out);
        *out = (*scenario).0.grid.n();
        AsStatus::Ok
    })
}

/// Runs the scenario. On [`AsStatus::BlowUp`] `out` still receives the
/// snapshots recorded before the failure.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn as_scenario_run(scenario: *const AsScenario, out: *mut *mut AsSeries) -> AsStatus {
    guard(|| {
        non_null!(scenario, out);
        *out = ptr::null_mut();
        match (*scenario).0.run() {
            Ok(series) => {
                *out = Box::into_raw(Box::new(AsSeries(series)));
                AsStatus::Ok
            }
            Err(Error::BlowUp { t, partial }) => {
                *out = Box::into_raw(Box::new(AsSeries(*partial)));
                fail(AsStatus::BlowUp, format!("solution blew up at t = {t}"))
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Hamiltonian density at a point laid out as `(μ^s, μ^t, ρ, π^s, π^t)`.
///
/// # Safety
/// `point` must hold 15 doubles; `scenario` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn as_density(scenario: *const AsScenario, point: *const f64, out: *mut f64) -> AsStatus {
    guard(|| {
        non_null!(scenario, point, out);
        let p = PhasePoint::from_array(&*(point as *const [f64; 15]));
        *out = density(&p, &(*scenario).0.params);
        AsStatus::Ok
    })
}

/// All 15 partial derivatives of the density, in the same layout as `point`.
///
/// # Safety
/// `point` and `out` must each hold 15 doubles; `scenario` must be live.
#[no_mangle]
pub unsafe extern "C" fn as_gradient(scenario: *const AsScenario, point: *const f64, out: *mut f64) -> AsStatus {
    guard(|| {
        non_null!(scenario, point, out);
        let p = PhasePoint::from_array(&*(point as *const [f64; 15]));
        let g = gradient(&p, &(*scenario).0.params).to_array();
        ptr::copy_nonoverlapping(g.as_ptr(), out, 15);
        AsStatus::Ok
    })
}

/// # Safety
/// `series` must come from [`as_scenario_run`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn as_series_free(series: *mut AsSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn as_series_snapshot_count(series: *const AsSeries, out: *mut usize) -> AsStatus {
    guard(|| {
        non_null!(series, out);
        *out = (*series).0.snapshots.len();
        AsStatus::Ok
    })
}

/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn as_series_grid_size(series: *const AsSeries, out: *mut usize) -> AsStatus {
    guard(|| {
        non_null!(series, out);
        *out = (*series).0.grid.n();
        AsStatus::Ok
    })
}

unsafe fn snapshot(series: &AsSeries, index: usize) -> Result<&affine_strand::state::StrandState, AsStatus> {
    series.0.snapshots.get(index).ok_or_else(|| {
        fail(
            AsStatus::OutOfRange,
            format!("snapshot {index} of {}", series.0.snapshots.len()),
        )
    })
}

/// Time stamp of snapshot `index`.
///
/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn as_series_time(series: *const AsSeries, index: usize, out: *mut f64) -> AsStatus {
    guard(|| {
        non_null!(series, out);
        *out = try_status!(snapshot(&*series, index)).t;
        AsStatus::Ok
    })
}

/// Total energy of snapshot `index`.
///
/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn as_series_energy(series: *const AsSeries, index: usize, out: *mut f64) -> AsStatus {
    guard(|| {
        non_null!(series, out);
        let s = &(*series).0;
        let state = try_status!(snapshot(&*series, index));
        match energy(state, &s.grid, &s.params) {
            Ok(e) => {
                *out = e;
                AsStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Copies one field of snapshot `index` into `buf` as `n` row-major triples.
/// `len` is the capacity of `buf` in doubles and must be at least `3n`.
///
/// # Safety
/// `series` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn as_series_copy_field(
    series: *const AsSeries,
    index: usize,
    field: AsField,
    buf: *mut f64,
    len: usize,
) -> AsStatus {
    guard(|| {
        non_null!(series, buf);
        let state = try_status!(snapshot(&*series, index));
        let values = match field {
            AsField::Rho => &state.rho,
            AsField::PiT => &state.pi_t,
            AsField::MuT => &state.mu_t,
            AsField::OmegaS => &state.omega_s,
        };
        if len < 3 * values.len() {
            return fail(
                AsStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", 3 * values.len()),
            );
        }
        for (j, v) in values.iter().enumerate() {
            ptr::copy_nonoverlapping(v.as_ptr(), buf.add(3 * j), 3);
        }
        AsStatus::Ok
    })
}

/// Writes snapshots, diagnostics and a manifest into `dir`.
///
/// # Safety
/// `series` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn as_series_save(series: *const AsSeries, dir: *const c_char) -> AsStatus {
    guard(|| {
        non_null!(series);
        let dir = try_status!(str_arg(dir));
        match (*series).0.save(Path::new(dir), None, &[]) {
            Ok(_) => AsStatus::Ok,
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Runs the seeded identity suite. `report_json`, when non-null, receives the
/// full report; release it with [`as_string_free`].
///
/// # Safety
/// `summary` must be writable; `report_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn as_identity_suite(
    seed: u64,
    trials: usize,
    summary: *mut AsIdentitySummary,
    report_json: *mut *mut c_char,
) -> AsStatus {
    guard(|| {
        non_null!(summary);
        if !report_json.is_null() {
            *report_json = ptr::null_mut();
        }
        let report = match identity_suite(seed, trials) {
            Ok(r) => r,
            Err(e) => return fail(status_of(&e), e.to_string()),
        };
        *summary = AsIdentitySummary {
            checks: report.checks.len(),
            failed: report.checks.iter().filter(|c| !c.passed).count(),
            worst_ratio: report
                .checks
                .iter()
                .map(|c| c.max_error / c.tolerance)
                .fold(0.0, f64::max),
            all_passed: report.all_passed,
        };
        if !report_json.is_null() {
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            *report_json = CString::new(text).expect("no interior NUL").into_raw();
        }
        AsStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn as_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

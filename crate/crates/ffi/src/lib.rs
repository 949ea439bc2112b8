//! C ABI for `sdwave`.
//!
//! Every fallible function returns an [`SdwStatus`]; on failure the message
//! is available from [`sdw_last_error_message`] on the same thread. Handles
//! are opaque and owned by the caller, who releases them with the matching
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use sdwave::blowup::{detect, VerdictTag};
use sdwave::cli_io::config::{parse_toml, RunConfig};
use sdwave::diagnostics::EnergyRecord;
use sdwave::domain_grid::{build_grid, DomainSpec, RadialGrid};
use sdwave::evolver::{evolve, NonlinearForcing};
use sdwave::theory;
use sdwave::SdwError;

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdwStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Usage = 3,
    Numeric = 4,
    Domain = 5,
    Io = 6,
    Panic = 7,
    BufferTooSmall = 8,
}

/// Number of columns in one energy record.
pub const SDW_ENERGY_FIELDS: usize = 13;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &SdwError) -> SdwStatus {
    match e {
        SdwError::Config(_) => SdwStatus::Config,
        SdwError::Usage(_) => SdwStatus::Usage,
        SdwError::Numeric(_) | SdwError::Singular { .. } => SdwStatus::Numeric,
        SdwError::Domain(_) => SdwStatus::Domain,
        SdwError::Io { .. } => SdwStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SdwStatus, String)>) -> SdwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SdwStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside sdwave");
            SdwStatus::Panic
        }
    }
}

fn lift<T>(r: sdwave::Result<T>) -> Result<T, (SdwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SdwStatus, String) {
    (SdwStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sdw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sdw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque radial grid.
pub struct SdwGrid {
    grid: Arc<RadialGrid>,
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sdw_grid_new(
    n: usize,
    r_obs: f64,
    r_out: f64,
    j_max: usize,
    out: *mut *mut SdwGrid,
) -> SdwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lift(DomainSpec::new(n, r_obs, r_out))?;
        let grid = lift(build_grid(spec, j_max))?;
        *out = Box::into_raw(Box::new(SdwGrid { grid }));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from `sdw_grid_new` and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sdw_grid_free(grid: *mut SdwGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Node count `j_max + 1`, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sdw_grid_len(grid: *const SdwGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.grid.len())
}

/// Copies the node radii into `buf`, which must hold `sdw_grid_len` values.
///
/// # Safety
/// `grid` must be a live handle and `buf` valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn sdw_grid_nodes(grid: *const SdwGrid, buf: *mut f64, cap: usize) -> SdwStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let nodes = &g.grid.nodes;
        if cap < nodes.len() {
            return Err((
                SdwStatus::BufferTooSmall,
                format!("need {} values, got {cap}", nodes.len()),
            ));
        }
        ptr::copy_nonoverlapping(nodes.as_ptr(), buf, nodes.len());
        Ok(())
    })
}

/// Blow-up verdict. `tag` is 0 for no escape up to `t_end`, 1 for escape.
/// Unavailable values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdwVerdict {
    pub tag: u32,
    pub t_end: f64,
    pub t_est: f64,
    pub t_last_stable: f64,
    pub kappa: f64,
    pub peak_norm: f64,
    pub refinement_confirmed: bool,
    pub sign_functional: f64,
}

/// Opaque result of one configured run: energy series and verdict.
pub struct SdwRun {
    records: Vec<EnergyRecord>,
    verdict: SdwVerdict,
}

/// Runs the evolution and blow-up detection described by a TOML run configuration.
///
/// # Safety
/// `config_toml` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdw_run_from_toml(config_toml: *const c_char, out: *mut *mut SdwRun) -> SdwStatus {
    guard(|| {
        if config_toml.is_null() {
            return Err(null("config_toml"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|_| (SdwStatus::Config, "configuration is not UTF-8".to_string()))?;
        let cfg: RunConfig = lift(parse_toml(text, "configuration"))?;
        lift(cfg.validate())?;
        let grid = lift(build_grid(cfg.domain, cfg.j_max))?;
        let (u0, u1) = cfg.data.sample(&grid);
        let run = lift(evolve(
            &u0,
            &u1,
            &mut NonlinearForcing(cfg.nonlinearity),
            &cfg.solver,
            false,
        ))?;
        let v = lift(detect(&u0, &u1, &cfg.nonlinearity, &cfg.solver, &cfg.thresholds))?;
        let verdict = match v.tag {
            VerdictTag::GlobalUpTo { t_end } => SdwVerdict {
                tag: 0,
                t_end,
                t_est: f64::NAN,
                t_last_stable: f64::NAN,
                kappa: f64::NAN,
                peak_norm: v.peak_norm,
                refinement_confirmed: v.refinement_confirmed,
                sign_functional: v.sign_functional,
            },
            VerdictTag::BlowupAt {
                t_est,
                t_last_stable,
                kappa,
            } => SdwVerdict {
                tag: 1,
                t_end: cfg.solver.t_end,
                t_est,
                t_last_stable,
                kappa,
                peak_norm: v.peak_norm,
                refinement_confirmed: v.refinement_confirmed,
                sign_functional: v.sign_functional,
            },
        };
        *out = Box::into_raw(Box::new(SdwRun {
            records: run.series.records,
            verdict,
        }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from `sdw_run_from_toml` and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sdw_run_free(run: *mut SdwRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of stored energy records, or 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sdw_run_record_count(run: *const SdwRun) -> usize {
    run.as_ref().map_or(0, |r| r.records.len())
}

/// Copies the energy records row-major, `SDW_ENERGY_FIELDS` values per row,
/// in the column order of the energy CSV.
///
/// # Safety
/// `run` must be a live handle and `buf` valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn sdw_run_records(run: *const SdwRun, buf: *mut f64, cap: usize) -> SdwStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let need = r.records.len() * SDW_ENERGY_FIELDS;
        if cap < need {
            return Err((SdwStatus::BufferTooSmall, format!("need {need} values, got {cap}")));
        }
        for (i, rec) in r.records.iter().enumerate() {
            let row = rec.values();
            ptr::copy_nonoverlapping(row.as_ptr(), buf.add(i * SDW_ENERGY_FIELDS), SDW_ENERGY_FIELDS);
        }
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdw_run_verdict(run: *const SdwRun, out: *mut SdwVerdict) -> SdwStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = r.verdict;
        Ok(())
    })
}

/// Region membership of one exponent point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SdwMembership {
    pub member: bool,
    pub boundary: bool,
    pub open_boundary: bool,
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdw_theory_derivative(n: usize, q: f64, out: *mut SdwMembership) -> SdwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = lift(theory::in_blowup_region_derivative(n, q))?;
        *out = SdwMembership {
            member: m.member,
            boundary: m.boundary,
            open_boundary: m.open_boundary,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdw_theory_mixed(n: usize, p: f64, q: f64, out: *mut SdwMembership) -> SdwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = lift(theory::in_blowup_region_mixed(n, p, q))?;
        *out = SdwMembership {
            member: m.member,
            boundary: m.boundary,
            open_boundary: m.open_boundary,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdwConstants {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha1_residual: f64,
    pub alpha2_residual: f64,
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdw_theory_constants(out: *mut SdwConstants) -> SdwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = theory::constants();
        *out = SdwConstants {
            alpha1: c.alpha1,
            alpha2: c.alpha2,
            alpha1_residual: c.alpha1_residual,
            alpha2_residual: c.alpha2_residual,
        };
        Ok(())
    })
}

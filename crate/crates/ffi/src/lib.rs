//! C ABI for `khintchine-core`.
//!
//! Systems cross the boundary as opaque [`KhMdSystem`] handles. Every fallible
//! function returns a [`KhStatus`]; on failure [`kh_last_error`] describes the
//! problem. Strings handed out by the library are freed with
//! [`kh_string_free`], systems with [`kh_md_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use khintchine::norms::{khintchine_constant, pnorm_sum, rademacher_pnorm, sup_cww, u_ratio};
use khintchine::special::log_gamma;
use khintchine::transforms::{
    dyadize, procedure1, procedure2, r1_transform, r2_transform, rademacherize, TransformReport,
};
use khintchine::{Error, MdSystem};

/// Opaque handle to a martingale-difference system.
pub struct KhMdSystem(MdSystem);

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidSystem = 4,
    Domain = 5,
    Precondition = 6,
    CertificateFailed = 7,
    Panic = 8,
}

/// Values of the `kind` argument of [`kh_transform`].
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KhTransformKind {
    R1 = 0,
    R2 = 1,
    Procedure1 = 2,
    Procedure2 = 3,
    Dyadize = 4,
    Rademacherize = 5,
}

impl KhTransformKind {
    fn from_raw(kind: i32) -> Option<Self> {
        use KhTransformKind::*;
        [R1, R2, Procedure1, Procedure2, Dyadize, Rademacherize].into_iter().find(|k| *k as i32 == kind)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("no interior nul")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> KhStatus {
    match e {
        Error::Parse(_)
        | Error::Shape(_)
        | Error::NonMonotoneBreakpoints(_)
        | Error::BadEndpoints
        | Error::AtomIndexOutOfRange { .. } => KhStatus::Parse,
        Error::Invalid(_) => KhStatus::InvalidSystem,
        Error::Domain(_) | Error::TrivialSystem | Error::SizeLimit(_) | Error::LevelOutOfRange { .. } => {
            KhStatus::Domain
        }
        _ => KhStatus::Precondition,
    }
}

struct Fail(KhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording the error message and containing panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KhStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KhStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KhStatus::Panic
        }
    }
}

unsafe fn system<'a>(d: *const KhMdSystem) -> Result<&'a MdSystem, Fail> {
    d.as_ref().map(|h| &h.0).ok_or_else(|| Fail(KhStatus::NullPointer, "null system handle".into()))
}

unsafe fn out_ref<'a, T>(out: *mut T) -> Result<&'a mut T, Fail> {
    out.as_mut().ok_or_else(|| Fail(KhStatus::NullPointer, "null output pointer".into()))
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s).map(CString::into_raw).map_err(|_| Fail(KhStatus::Parse, "string contains nul".into()))
}

fn check_p(p: f64) -> Result<(), Fail> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Fail(KhStatus::Domain, format!("p must be positive and finite, got {p}")))
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn kh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a system from JSON. The system is not validated; see
/// [`kh_md_validate`].
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn kh_md_from_json(json: *const c_char, out: *mut *mut KhMdSystem) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(Fail(KhStatus::NullPointer, "null json".into()));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(KhStatus::InvalidUtf8, e.to_string()))?;
        let d = MdSystem::from_json(text)?;
        *out = Box::into_raw(Box::new(KhMdSystem(d)));
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kh_md_free(d: *mut KhMdSystem) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle and `out` writable. Free the result with
/// [`kh_string_free`].
#[no_mangle]
pub unsafe extern "C" fn kh_md_to_json(d: *const KhMdSystem, out: *mut *mut c_char) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        *out = into_c_string(system(d)?.to_json())?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of levels of `d`.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_md_levels(d: *const KhMdSystem, out: *mut usize) -> KhStatus {
    guard(|| {
        *out_ref(out)? = system(d)?.n();
        Ok(())
    })
}

/// Writes whether `d` satisfies the martingale-difference invariants and, if
/// `report_json` is not null, the full validation report.
///
/// # Safety
/// `d` must be a live handle, `valid` writable, `report_json` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn kh_md_validate(
    d: *const KhMdSystem,
    valid: *mut bool,
    report_json: *mut *mut c_char,
) -> KhStatus {
    guard(|| {
        let valid = out_ref(valid)?;
        let report = system(d)?.validate();
        *valid = report.valid;
        if let Some(slot) = report_json.as_mut() {
            *slot = into_c_string(serde_json::to_string(&report).expect("serializable"))?;
        }
        Ok(())
    })
}

/// `||sum d_k||_p`.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_md_pnorm(d: *const KhMdSystem, p: f64, out: *mut f64) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        check_p(p)?;
        *out = pnorm_sum(system(d)?, p);
        Ok(())
    })
}

/// `||S(d)||_inf` with the CWW square function.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_md_sup_cww(d: *const KhMdSystem, out: *mut f64) -> KhStatus {
    guard(|| {
        *out_ref(out)? = sup_cww(system(d)?);
        Ok(())
    })
}

/// `U(d) = ||sum d_k||_p / ||S(d)||_inf`.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kh_md_u_ratio(d: *const KhMdSystem, p: f64, out: *mut f64) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = u_ratio(system(d)?, p)?.ratio;
        Ok(())
    })
}

/// `||(r_1 + ... + r_n) / sqrt n||_p`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kh_rademacher_pnorm(n: usize, p: f64, out: *mut f64) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        check_p(p)?;
        if n == 0 {
            return Err(Fail(KhStatus::Domain, "n must be positive".into()));
        }
        *out = rademacher_pnorm(n, p);
        Ok(())
    })
}

/// The Gaussian limit `sqrt 2 (Gamma((p+1)/2) / sqrt pi)^(1/p)`, `p > 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kh_khintchine_constant(p: f64, out: *mut f64) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = khintchine_constant(p)?;
        Ok(())
    })
}

/// `ln Gamma(x)` for `x > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kh_log_gamma(x: f64, out: *mut f64) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = log_gamma(x)?;
        Ok(())
    })
}

/// Applies a transform. `level` is `k` for R1 and R2, `m` for the procedures
/// and ignored by the pipelines. On success `*out` receives a new handle,
/// also when certificates fail (status `CertificateFailed`). If `report_json`
/// is not null it receives the transform report.
///
/// # Safety
/// `d` must be a live handle, `out` writable, `report_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kh_transform(
    d: *const KhMdSystem,
    kind: i32,
    level: usize,
    p: f64,
    out: *mut *mut KhMdSystem,
    report_json: *mut *mut c_char,
) -> KhStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        if let Some(slot) = report_json.as_mut() {
            *slot = ptr::null_mut();
        }
        let d = system(d)?;
        let kind = KhTransformKind::from_raw(kind)
            .ok_or_else(|| Fail(KhStatus::Domain, format!("unknown transform kind {kind}")))?;
        let (after, report): (MdSystem, TransformReport) = match kind {
            KhTransformKind::R1 => r1_transform(d, level, p)?,
            KhTransformKind::R2 => r2_transform(d, level, p)?,
            KhTransformKind::Procedure1 => procedure1(d, level, p)?,
            KhTransformKind::Procedure2 => procedure2(d, level, p)?,
            KhTransformKind::Dyadize => dyadize(d, p)?,
            KhTransformKind::Rademacherize => rademacherize(d, p)?,
        };
        if let Some(slot) = report_json.as_mut() {
            *slot = into_c_string(serde_json::to_string(&report).expect("serializable"))?;
        }
        *out = Box::into_raw(Box::new(KhMdSystem(after)));
        if !report.passed() {
            return Err(Fail(
                KhStatus::CertificateFailed,
                format!("certificates failed: {}", report.failures().join(", ")),
            ));
        }
        Ok(())
    })
}

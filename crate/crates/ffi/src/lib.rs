//! C ABI over qortho. Objects are opaque handles created by `*_new` and
//! released by `*_free`; every call returns a [`QorthoStatus`] and writes
//! results through out-pointers. The message of the last failure on the
//! calling thread is available from [`qortho_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qortho::connect::Pair;
use qortho::densities::DensityId;
use qortho::expand::{Expansion, ExpansionId, ExpansionSpec, DEFAULT_SERIES_TOL};
use qortho::sampler::{sample_run, SamplerConfig};
use qortho::{Error, Family, FamilyId};

/// Status codes; 3 to 5 match the CLI exit codes for the same failures.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QorthoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Nonconvergence = 4,
    EnvelopeViolation = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QorthoFamilyKind {
    QHermite = 0,
    Rogers = 1,
    AlSalamChihara = 2,
    BigB = 3,
    ChebT = 4,
    ChebU = 5,
    ChebTHat = 6,
    ChebUHat = 7,
    ClassicalHermite = 8,
    Kesten = 9,
    KestenHat = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QorthoDensityKind {
    N = 0,
    CN = 1,
    R = 2,
    U = 3,
    T = 4,
    K = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QorthoExpansionKind {
    NOverU = 0,
    UOverN = 1,
    CnOverN = 2,
    NOverCn = 3,
    ROverN = 4,
    NOverR = 5,
    CnOverK = 6,
    CnOverU = 7,
    Mehler = 8,
    PmQ0 = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QorthoPairKind {
    AscToHermite = 0,
    HermiteToAsc = 1,
    ChebUHatToHermite = 2,
    HermiteToChebUHat = 3,
    RogersToRogers = 4,
    RogersToHermite = 5,
    HermiteToRogers = 6,
    ChebUHatToAsc = 7,
    KestenHatToAsc = 8,
    ChebTFromU = 9,
    ChebUFromT = 10,
    HermiteToClassicalAsc = 11,
}

/// Parameters; fields a kind does not use are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QorthoParams {
    pub q: f64,
    pub rho: f64,
    pub beta: f64,
    pub gamma: f64,
    pub y: f64,
}

pub struct QorthoFamily(FamilyId);
pub struct QorthoDensity(DensityId);
pub struct QorthoExpansion(Expansion);
pub struct QorthoSampler {
    cfg: SamplerConfig,
    last_rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> QorthoStatus {
    let status = match e.code() {
        4 => QorthoStatus::Nonconvergence,
        5 => QorthoStatus::EnvelopeViolation,
        _ => QorthoStatus::OutOfRange,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> Result<(), QorthoStatus>) -> QorthoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QorthoStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            QorthoStatus::Panic
        }
    }
}

fn null() -> QorthoStatus {
    set_error("null pointer argument".into());
    QorthoStatus::NullPointer
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, QorthoStatus> {
    p.as_mut().ok_or_else(null)
}

unsafe fn in_ref<'a, T>(p: *const T) -> Result<&'a T, QorthoStatus> {
    p.as_ref().ok_or_else(null)
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qortho_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a family handle.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn qortho_family_new(
    kind: QorthoFamilyKind,
    p: QorthoParams,
    out: *mut *mut QorthoFamily,
) -> QorthoStatus {
    guard(|| {
        let out = out_ref(out)?;
        let f = match kind {
            QorthoFamilyKind::QHermite => Family::QHermite { q: p.q },
            QorthoFamilyKind::Rogers => Family::Rogers { beta: p.beta, q: p.q },
            QorthoFamilyKind::AlSalamChihara => Family::Asc { y: p.y, rho: p.rho, q: p.q },
            QorthoFamilyKind::BigB => Family::BigB { q: p.q },
            QorthoFamilyKind::ChebT => Family::ChebT,
            QorthoFamilyKind::ChebU => Family::ChebU,
            QorthoFamilyKind::ChebTHat => Family::ChebTHat { q: p.q },
            QorthoFamilyKind::ChebUHat => Family::ChebUHat { q: p.q },
            QorthoFamilyKind::ClassicalHermite => Family::ClassicalHermite,
            QorthoFamilyKind::Kesten => Family::Kesten { y: p.y, rho: p.rho },
            QorthoFamilyKind::KestenHat => Family::KestenHat { y: p.y, rho: p.rho, q: p.q },
        };
        f.validate().map_err(fail)?;
        *out = boxed(QorthoFamily(f));
        Ok(())
    })
}

/// F_n(x).
///
/// # Safety
/// `h` must come from `qortho_family_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qortho_family_eval(
    h: *const QorthoFamily,
    n: usize,
    x: f64,
    out: *mut f64,
) -> QorthoStatus {
    guard(|| {
        let (h, out) = (in_ref(h)?, out_ref(out)?);
        *out = h.0.eval(n, &x).map_err(fail)?;
        Ok(())
    })
}

/// F_0(x), ..., F_{n_max}(x) into `buf`, which holds `len >= n_max + 1` values.
///
/// # Safety
/// `h` must come from `qortho_family_new`; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qortho_family_eval_all(
    h: *const QorthoFamily,
    n_max: usize,
    x: f64,
    buf: *mut f64,
    len: usize,
) -> QorthoStatus {
    guard(|| {
        let h = in_ref(h)?;
        if buf.is_null() {
            return Err(null());
        }
        if len < n_max + 1 {
            set_error(format!("buffer of {len} values cannot hold {} values", n_max + 1));
            return Err(QorthoStatus::InvalidArgument);
        }
        let v = h.0.eval_all(n_max, &x).map_err(fail)?;
        std::slice::from_raw_parts_mut(buf, n_max + 1).copy_from_slice(&v);
        Ok(())
    })
}

/// # Safety
/// `h` must come from `qortho_family_new` or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qortho_family_free(h: *mut QorthoFamily) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Creates a density handle.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qortho_density_new(
    kind: QorthoDensityKind,
    p: QorthoParams,
    out: *mut *mut QorthoDensity,
) -> QorthoStatus {
    guard(|| {
        let out = out_ref(out)?;
        let d = match kind {
            QorthoDensityKind::N => DensityId::n(p.q),
            QorthoDensityKind::CN => DensityId::cn(p.y, p.rho, p.q),
            QorthoDensityKind::R => DensityId::r(p.beta, p.q),
            QorthoDensityKind::U => DensityId::u(p.q),
            QorthoDensityKind::T => DensityId::t(p.q),
            QorthoDensityKind::K => DensityId::k(p.y, p.rho, p.q),
        };
        d.validate().map_err(fail)?;
        *out = boxed(QorthoDensity(d));
        Ok(())
    })
}

/// Density value at x (0 outside the support).
///
/// # Safety
/// `h` must come from `qortho_density_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qortho_density_eval(h: *const QorthoDensity, x: f64, out: *mut f64) -> QorthoStatus {
    guard(|| {
        let (h, out) = (in_ref(h)?, out_ref(out)?);
        *out = h.0.eval(x).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `h` must come from `qortho_density_new` or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qortho_density_free(h: *mut QorthoDensity) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Prepares an expansion; `tol <= 0` selects the default series tolerance and
/// `k_fixed = 0` the adaptive order.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qortho_expansion_new(
    kind: QorthoExpansionKind,
    p: QorthoParams,
    tol: f64,
    k_fixed: usize,
    out: *mut *mut QorthoExpansion,
) -> QorthoStatus {
    guard(|| {
        let out = out_ref(out)?;
        let id = match kind {
            QorthoExpansionKind::NOverU => ExpansionId::NOverU { q: p.q },
            QorthoExpansionKind::UOverN => ExpansionId::UOverN { q: p.q },
            QorthoExpansionKind::CnOverN => ExpansionId::CnOverN { y: p.y, rho: p.rho, q: p.q },
            QorthoExpansionKind::NOverCn => ExpansionId::NOverCn { y: p.y, rho: p.rho, q: p.q },
            QorthoExpansionKind::ROverN => ExpansionId::ROverN { beta: p.beta, q: p.q },
            QorthoExpansionKind::NOverR => ExpansionId::NOverR { gamma: p.gamma, q: p.q },
            QorthoExpansionKind::CnOverK => ExpansionId::CnOverK { y: p.y, rho: p.rho, q: p.q },
            QorthoExpansionKind::CnOverU => ExpansionId::CnOverU { y: p.y, rho: p.rho, q: p.q },
            QorthoExpansionKind::Mehler => ExpansionId::MehlerClassical { y: p.y, rho: p.rho },
            QorthoExpansionKind::PmQ0 => ExpansionId::PmQ0 { y: p.y, rho: p.rho },
        };
        let mut spec = ExpansionSpec::new(id).with_tol(if tol > 0.0 { tol } else { DEFAULT_SERIES_TOL });
        if k_fixed > 0 {
            spec = spec.with_k(k_fixed);
        }
        *out = boxed(QorthoExpansion(Expansion::new(spec).map_err(fail)?));
        Ok(())
    })
}

/// base(x) times the truncated sum; `k_used` (may be NULL) receives the order.
///
/// # Safety
/// `h` must come from `qortho_expansion_new`; `out` must be writable and
/// `k_used` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn qortho_expansion_eval(
    h: *const QorthoExpansion,
    x: f64,
    out: *mut f64,
    k_used: *mut usize,
) -> QorthoStatus {
    guard(|| {
        let (h, out) = (in_ref(h)?, out_ref(out)?);
        let v = h.0.eval(x).map_err(fail)?;
        *out = v.value;
        if let Some(k) = k_used.as_mut() {
            *k = v.k;
        }
        Ok(())
    })
}

/// # Safety
/// `h` must come from `qortho_expansion_new` or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qortho_expansion_free(h: *mut QorthoExpansion) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Row gamma_{0,n}, ..., gamma_{n,n} of a closed-form connection, in doubles.
///
/// # Safety
/// `buf` must hold `len >= n + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn qortho_connection_row(
    kind: QorthoPairKind,
    p: QorthoParams,
    n: usize,
    buf: *mut f64,
    len: usize,
) -> QorthoStatus {
    guard(|| {
        if buf.is_null() {
            return Err(null());
        }
        if len < n + 1 {
            set_error(format!("buffer of {len} values cannot hold {} values", n + 1));
            return Err(QorthoStatus::InvalidArgument);
        }
        let pair = match kind {
            QorthoPairKind::AscToHermite => Pair::AscToHermite { y: p.y, rho: p.rho, q: p.q },
            QorthoPairKind::HermiteToAsc => Pair::HermiteToAsc { y: p.y, rho: p.rho, q: p.q },
            QorthoPairKind::ChebUHatToHermite => Pair::ChebUHatToHermite { q: p.q },
            QorthoPairKind::HermiteToChebUHat => Pair::HermiteToChebUHat { q: p.q },
            QorthoPairKind::RogersToRogers => Pair::RogersToRogers { gamma: p.gamma, beta: p.beta, q: p.q },
            QorthoPairKind::RogersToHermite => Pair::RogersToHermite { gamma: p.gamma, q: p.q },
            QorthoPairKind::HermiteToRogers => Pair::HermiteToRogers { beta: p.beta, q: p.q },
            QorthoPairKind::ChebUHatToAsc => Pair::ChebUHatToAsc { y: p.y, rho: p.rho, q: p.q },
            QorthoPairKind::KestenHatToAsc => Pair::KestenHatToAsc { y: p.y, rho: p.rho, q: p.q },
            QorthoPairKind::ChebTFromU => Pair::ChebTFromU,
            QorthoPairKind::ChebUFromT => Pair::ChebUFromT,
            QorthoPairKind::HermiteToClassicalAsc => Pair::HermiteToClassicalAsc { y: p.y, rho: p.rho },
        };
        let row = pair.row(n).map_err(fail)?;
        std::slice::from_raw_parts_mut(buf, n + 1).copy_from_slice(&row);
        Ok(())
    })
}

/// Sampler for f_N or f_CN with the default envelope constant.
///
/// # Safety
/// `density` must come from `qortho_density_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qortho_sampler_new(
    density: *const QorthoDensity,
    seed: u64,
    out: *mut *mut QorthoSampler,
) -> QorthoStatus {
    guard(|| {
        let (d, out) = (in_ref(density)?, out_ref(out)?);
        let cfg = SamplerConfig::new(d.0, seed).map_err(fail)?;
        *out = boxed(QorthoSampler { cfg, last_rate: f64::NAN });
        Ok(())
    })
}

/// Envelope constant M of the sampler.
///
/// # Safety
/// `h` must come from `qortho_sampler_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qortho_sampler_envelope(h: *const QorthoSampler, out: *mut f64) -> QorthoStatus {
    guard(|| {
        let (h, out) = (in_ref(h)?, out_ref(out)?);
        *out = h.cfg.m;
        Ok(())
    })
}

/// Writes `n` draws into `buf`; deterministic for a given handle.
///
/// # Safety
/// `h` must come from `qortho_sampler_new`; `buf` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn qortho_sampler_draw(h: *mut QorthoSampler, n: usize, buf: *mut f64) -> QorthoStatus {
    guard(|| {
        let h = out_ref(h)?;
        if buf.is_null() {
            return Err(null());
        }
        let run = sample_run(&h.cfg, n).map_err(fail)?;
        h.last_rate = run.acceptance_rate();
        std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&run.samples);
        Ok(())
    })
}

/// Acceptance rate of the last draw (NaN before the first).
///
/// # Safety
/// `h` must come from `qortho_sampler_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qortho_sampler_acceptance_rate(h: *const QorthoSampler, out: *mut f64) -> QorthoStatus {
    guard(|| {
        let (h, out) = (in_ref(h)?, out_ref(out)?);
        *out = h.last_rate;
        Ok(())
    })
}

/// # Safety
/// `h` must come from `qortho_sampler_new` or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn qortho_sampler_free(h: *mut QorthoSampler) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

//! C ABI over the `ehmmse` library.
//!
//! Conventions:
//!
//! * every fallible call returns an [`EhStatus`] and writes results through
//!   out-pointers; on failure [`eh_last_error_message`] describes the problem;
//! * models are opaque handles created by `*_new` and released by `*_free`;
//! * panics never cross the boundary; they surface as `EH_STATUS_PANIC`;
//! * handles are immutable and may be shared between threads.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ehmmse::bounds::{self, BoundPoint, Family, Tail};
use ehmmse::estimation::{gains_block, mmse_closed_form, run_campaign, TransmissionConfig};
use ehmmse::{ArrivalModel, Error, SignalModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    NotStationary = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhFamily {
    I = 0,
    II = 1,
    IEquidistant = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhTail {
    Bt = 0,
    Bn = 1,
}

/// Mirror of a bound point; `gamma` and `p_bar` are NaN outside Bound II.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhBoundPoint {
    pub family: EhFamily,
    pub tail: EhTail,
    pub err_bound: f64,
    pub prob_lower: f64,
    pub raw_prob: f64,
    pub r: f64,
    pub gamma: f64,
    pub mu: f64,
    pub rho: f64,
    pub p_bar: f64,
    pub degenerate: bool,
}

/// Opaque signal model.
pub struct EhSignalModel(SignalModel);

/// Opaque arrival model.
pub struct EhArrivalModel(ArrivalModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EhStatus {
    match err {
        Error::InvalidParameter { .. }
        | Error::NotOrthonormal { .. }
        | Error::DegenerateRow { .. }
        | Error::ZeroSlotVariance { .. } => EhStatus::InvalidArgument,
        Error::NotStationary(_) => EhStatus::NotStationary,
        Error::Numerical(_) => EhStatus::Numerical,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EhStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            EhStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            EhStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: caller passes a handle from the matching constructor or null.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: caller passes a writable pointer or null.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: caller guarantees `len` writable doubles at `p`.
    Ok(unsafe { slice::from_raw_parts_mut(p, len) })
}

fn boxed<T>(value: T, dst: &mut *mut T) {
    *dst = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Low-pass c.w.s.s. model (first `s` DFT columns).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn eh_signal_lowpass_new(
    n: usize,
    s: usize,
    power: f64,
    noise_var: f64,
    out_model: *mut *mut EhSignalModel,
) -> EhStatus {
    guard(|| {
        let dst = unsafe { out(out_model, "out_model") }?;
        boxed(EhSignalModel(SignalModel::build_lowpass_cwss(n, s, power, noise_var)?), dst);
        Ok(())
    })
}

/// Model from explicit orthonormal columns, `n x s`, column-major real and
/// imaginary parts.
///
/// # Safety
/// `re` and `im` must each hold `n * s` doubles; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_signal_columns_new(
    n: usize,
    s: usize,
    re: *const f64,
    im: *const f64,
    power: f64,
    noise_var: f64,
    out_model: *mut *mut EhSignalModel,
) -> EhStatus {
    guard(|| {
        let dst = unsafe { out(out_model, "out_model") }?;
        let len = n.checked_mul(s).ok_or(Fail::Lib(Error::Numerical("n * s overflows".into())))?;
        let re = unsafe { input(re, len, "re") }?;
        let im = unsafe { input(im, len, "im") }?;
        let cols = ehmmse::linalg::CMatrix::from_fn(n, s, |i, j| {
            num_complex::Complex64::new(re[j * n + i], im[j * n + i])
        });
        boxed(EhSignalModel(SignalModel::from_unitary_columns(cols, power, noise_var)?), dst);
        Ok(())
    })
}

/// # Safety
/// `model` must come from a signal constructor (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eh_signal_free(model: *mut EhSignalModel) {
    if !model.is_null() {
        // SAFETY: pointer came from Box::into_raw in a constructor.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Row-norm coherence `(eta_L, eta_U)`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eh_signal_eta(
    model: *const EhSignalModel,
    eta_lower: *mut f64,
    eta_upper: *mut f64,
) -> EhStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        *unsafe { out(eta_lower, "eta_lower") }? = m.0.eta_lower();
        *unsafe { out(eta_upper, "eta_upper") }? = m.0.eta_upper();
        Ok(())
    })
}

/// # Safety
/// `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_arrival_bernoulli_new(p: f64, e0: f64, out_model: *mut *mut EhArrivalModel) -> EhStatus {
    guard(|| {
        let dst = unsafe { out(out_model, "out_model") }?;
        boxed(EhArrivalModel(ArrivalModel::bernoulli(p, e0)?), dst);
        Ok(())
    })
}

/// Packets uniform on `[0, e_u]`.
///
/// # Safety
/// `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_arrival_uniform_new(e_u: f64, out_model: *mut *mut EhArrivalModel) -> EhStatus {
    guard(|| {
        let dst = unsafe { out(out_model, "out_model") }?;
        boxed(EhArrivalModel(ArrivalModel::uniform(e_u)?), dst);
        Ok(())
    })
}

/// # Safety
/// `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_arrival_deterministic_new(e: f64, out_model: *mut *mut EhArrivalModel) -> EhStatus {
    guard(|| {
        let dst = unsafe { out(out_model, "out_model") }?;
        boxed(EhArrivalModel(ArrivalModel::deterministic(e)?), dst);
        Ok(())
    })
}

/// # Safety
/// `model` must come from an arrival constructor (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn eh_arrival_free(model: *mut EhArrivalModel) {
    if !model.is_null() {
        // SAFETY: pointer came from Box::into_raw in a constructor.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Mean, variance, peak packet energy and peak-to-mean ratio.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eh_arrival_stats(
    model: *const EhArrivalModel,
    mean: *mut f64,
    variance: *mut f64,
    e_max: *mut f64,
    peak_ratio: *mut f64,
) -> EhStatus {
    guard(|| {
        let a = &unsafe { deref(model, "model") }?.0;
        *unsafe { out(mean, "mean") }? = a.mean();
        *unsafe { out(variance, "variance") }? = a.variance();
        *unsafe { out(e_max, "e_max") }? = a.e_max();
        *unsafe { out(peak_ratio, "peak_ratio") }? = a.peak_ratio();
        Ok(())
    })
}

/// `P(slot energy >= threshold)`; `std_error` is 0 for exact results.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eh_slot_tail_probability(
    model: *const EhArrivalModel,
    q: usize,
    threshold: f64,
    value: *mut f64,
    std_error: *mut f64,
) -> EhStatus {
    guard(|| {
        let a = &unsafe { deref(model, "model") }?.0;
        let t = a.slot_tail_probability(q, threshold)?;
        *unsafe { out(value, "value") }? = t.value;
        *unsafe { out(std_error, "std_error") }? = t.std_error;
        Ok(())
    })
}

/// MMSE for the gain diagonal `diag` of length `N`.
///
/// # Safety
/// `diag` must hold `len` doubles; `mmse` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_mmse_closed_form(
    model: *const EhSignalModel,
    diag: *const f64,
    len: usize,
    mmse: *mut f64,
) -> EhStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.0;
        let d = unsafe { input(diag, len, "diag") }?;
        if d.len() != m.n() {
            return Err(Error::InvalidParameter {
                name: "diag",
                reason: format!("expected length {}, got {}", m.n(), d.len()),
            }
            .into());
        }
        *unsafe { out(mmse, "mmse") }? = mmse_closed_form(m, d)?;
        Ok(())
    })
}

/// Block gains `p_k = E_k / S_k` for `N / q` slot energies.
///
/// # Safety
/// `energies` and `gains` must each hold `n_slots` doubles.
#[no_mangle]
pub unsafe extern "C" fn eh_gains_block(
    model: *const EhSignalModel,
    q: usize,
    energies: *const f64,
    gains: *mut f64,
    n_slots: usize,
) -> EhStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.0;
        let e = unsafe { input(energies, n_slots, "energies") }?;
        let g = unsafe { output(gains, n_slots, "gains") }?;
        let cfg = TransmissionConfig::block(m.n(), q)?;
        g.copy_from_slice(&gains_block(m, &cfg, e)?);
        Ok(())
    })
}

fn tail_of(t: EhTail) -> Tail {
    match t {
        EhTail::Bt => Tail::Bt,
        EhTail::Bn => Tail::Bn,
    }
}

fn to_c(p: BoundPoint) -> EhBoundPoint {
    EhBoundPoint {
        family: match p.family {
            Family::I => EhFamily::I,
            Family::II => EhFamily::II,
            Family::IEquidistant => EhFamily::IEquidistant,
        },
        tail: match p.tail {
            Tail::Bt => EhTail::Bt,
            Tail::Bn => EhTail::Bn,
        },
        err_bound: p.err_bound,
        prob_lower: p.prob_lower,
        raw_prob: p.raw_prob,
        r: p.r,
        gamma: p.gamma.unwrap_or(f64::NAN),
        mu: p.mu,
        rho: p.rho,
        p_bar: p.p_bar.unwrap_or(f64::NAN),
        degenerate: p.degenerate,
    }
}

/// Bound I, `r in (0, 1/eta_U]`.
///
/// # Safety
/// Handles must be valid; `point` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_bound_i(
    model: *const EhSignalModel,
    arrivals: *const EhArrivalModel,
    q: usize,
    r: f64,
    tail: EhTail,
    point: *mut EhBoundPoint,
) -> EhStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.0;
        let a = &unsafe { deref(arrivals, "arrivals") }?.0;
        *unsafe { out(point, "point") }? = to_c(bounds::bound_i(m, a, q, r, tail_of(tail))?);
        Ok(())
    })
}

/// Bound II, `r in (0, 1/eta_U]`, `gamma in [0, q r_E]`.
///
/// # Safety
/// Handles must be valid; `point` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_bound_ii(
    model: *const EhSignalModel,
    arrivals: *const EhArrivalModel,
    q: usize,
    r: f64,
    gamma: f64,
    tail: EhTail,
    point: *mut EhBoundPoint,
) -> EhStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.0;
        let a = &unsafe { deref(arrivals, "arrivals") }?.0;
        *unsafe { out(point, "point") }? = to_c(bounds::bound_ii(m, a, q, r, gamma, tail_of(tail))?);
        Ok(())
    })
}

/// Equidistant bound for low-pass c.w.s.s. models, `r in (0, 1]`.
///
/// # Safety
/// Handles must be valid; `point` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_bound_equidistant(
    model: *const EhSignalModel,
    arrivals: *const EhArrivalModel,
    r: f64,
    tail: EhTail,
    point: *mut EhBoundPoint,
) -> EhStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.0;
        let a = &unsafe { deref(arrivals, "arrivals") }?.0;
        *unsafe { out(point, "point") }? = to_c(bounds::bound_equidistant(m, a, r, tail_of(tail))?);
        Ok(())
    })
}

/// Offline optimum `P_x / (1 + e_tot / (s sigma_w^2))`.
///
/// # Safety
/// `model` must be valid; `eps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_offline_benchmark(model: *const EhSignalModel, e_tot: f64, eps: *mut f64) -> EhStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.0;
        *unsafe { out(eps, "eps") }? = bounds::offline_benchmark(m, e_tot)?;
        Ok(())
    })
}

/// Block-transmission campaign; per-trial MMSE values go to `errors`
/// (`n_trials` doubles) and the fraction with `eps <= threshold` to
/// `success_probability`.
///
/// # Safety
/// Handles must be valid; `errors` must hold `n_trials` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn eh_run_campaign(
    model: *const EhSignalModel,
    arrivals: *const EhArrivalModel,
    q: usize,
    n_trials: usize,
    threshold: f64,
    seed: u64,
    errors: *mut f64,
    success_probability: *mut f64,
) -> EhStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.0;
        let a = &unsafe { deref(arrivals, "arrivals") }?.0;
        let errs = unsafe { output(errors, n_trials, "errors") }?;
        let sp = unsafe { out(success_probability, "success_probability") }?;
        let cfg = TransmissionConfig::block(m.n(), q)?;
        let c = run_campaign(m, &cfg, a, n_trials, threshold, seed)?;
        for (dst, r) in errs.iter_mut().zip(&c.records) {
            *dst = r.mmse;
        }
        *sp = c.success_probability;
        Ok(())
    })
}

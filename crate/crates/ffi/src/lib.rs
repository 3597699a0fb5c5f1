//! C ABI over `mterm_lab`.
//!
//! Every fallible call returns an [`MtlStatus`]; on failure the message is
//! available from [`mtl_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. Strings returned through
//! `char **` out-parameters are released with [`mtl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use mterm_lab::greedy::{wrga_run, GreedyTrace, SelectionPolicy, WeaknessSequence};
use mterm_lab::oracle::sigma_m_canonical;
use mterm_lab::{Error, LpSpace, SymmetricSystem};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    /// The quantity is undefined at this input, e.g. the norming functional of 0.
    Undefined = 4,
    /// The request exceeds a size guard or needs a case the routine does not cover.
    Unsupported = 5,
    Serialization = 6,
    Io = 7,
    Panic = 8,
}

/// Selection rule for the weak greedy step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtlPolicy {
    Exact = 0,
    LazyWeak = 1,
    RandomWeak = 2,
}

/// An ℓ_p^n space.
pub struct MtlSpace(LpSpace);

/// A finite symmetric system of atoms.
pub struct MtlSystem(SymmetricSystem);

/// The recorded run of the weak relaxed greedy algorithm.
pub struct MtlTrace(GreedyTrace);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> MtlStatus {
    match err {
        Error::DimensionMismatch { .. } => MtlStatus::DimensionMismatch,
        Error::ZeroFunctional => MtlStatus::Undefined,
        Error::NotHilbert(_)
        | Error::MissingHullDistance
        | Error::BruteForceTooLarge { .. }
        | Error::SizeGuard(_)
        | Error::CoverageViolated { .. }
        | Error::InsufficientPoints(_) => MtlStatus::Unsupported,
        Error::Serde(_) | Error::Config { .. } => MtlStatus::Serialization,
        Error::Io(_) => MtlStatus::Io,
        Error::InvalidExponent(_)
        | Error::InvalidDimension(_)
        | Error::InvalidHullExponent(_)
        | Error::AtomNormTooLarge { .. }
        | Error::EmptySystem
        | Error::TailExponentOrder { .. }
        | Error::AmbientMismatch(_)
        | Error::BudgetInconsistency(_)
        | Error::InvalidArgument(_) => MtlStatus::InvalidArgument,
    }
}

struct Fail(MtlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MtlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording errors and converting panics.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> MtlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            MtlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            MtlStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn as_slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|e| Fail(MtlStatus::Serialization, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn mtl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mtl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates ℓ_p^dim with `1 < p < ∞`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mtl_space_new(dim: usize, p: f64, out: *mut *mut MtlSpace) -> MtlStatus {
    guard(|| put(out, MtlSpace(LpSpace::new(dim, p)?)))
}

/// # Safety
/// `space` must be null or a handle from [`mtl_space_new`].
#[no_mangle]
pub unsafe extern "C" fn mtl_space_free(space: *mut MtlSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// # Safety
/// `space` must be valid, `x` must point to `len` doubles, `out` to one.
#[no_mangle]
pub unsafe extern "C" fn mtl_space_norm(space: *const MtlSpace, x: *const f64, len: usize, out: *mut f64) -> MtlStatus {
    guard(|| {
        let space = as_ref(space, "space")?;
        let x = as_slice(x, len, "x")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = space.0.norm(x)?;
        Ok(())
    })
}

/// Writes the norming functional of `f` into `out` (both of length `len`).
///
/// # Safety
/// `space` must be valid; `f` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mtl_space_norming_functional(
    space: *const MtlSpace,
    f: *const f64,
    len: usize,
    out: *mut f64,
) -> MtlStatus {
    guard(|| {
        let space = as_ref(space, "space")?;
        let g = space.0.norming_functional(as_slice(f, len, "f")?)?;
        as_slice_mut(out, len, "out")?.copy_from_slice(&g);
        Ok(())
    })
}

/// The canonical basis `{e_j}` of `space`.
///
/// # Safety
/// `space` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mtl_system_canonical(space: *const MtlSpace, out: *mut *mut MtlSystem) -> MtlStatus {
    guard(|| {
        let space = as_ref(space, "space")?;
        put(out, MtlSystem(SymmetricSystem::canonical(space.0)))
    })
}

/// `n_atoms` seeded Gaussian directions normalized in `space`.
///
/// # Safety
/// `space` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mtl_system_random(
    space: *const MtlSpace,
    n_atoms: usize,
    seed: u64,
    out: *mut *mut MtlSystem,
) -> MtlStatus {
    guard(|| {
        let space = as_ref(space, "space")?;
        put(out, MtlSystem(SymmetricSystem::random(space.0, n_atoms, seed)?))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mtl_system_from_json(json: *const c_char, out: *mut *mut MtlSystem) -> MtlStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(MtlStatus::Serialization, e.to_string()))?;
        put(out, MtlSystem(SymmetricSystem::from_json(text)?))
    })
}

/// # Safety
/// `system` and `out` must be valid; free the result with [`mtl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn mtl_system_to_json(system: *const MtlSystem, out: *mut *mut c_char) -> MtlStatus {
    guard(|| {
        let system = as_ref(system, "system")?;
        put_string(out, system.0.to_json()?)
    })
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `system` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn mtl_system_len(system: *const MtlSystem) -> usize {
    system.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `system` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mtl_system_free(system: *mut MtlSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Runs `m_max` steps of the weak relaxed greedy algorithm with constant
/// weakness `t ∈ (0, 1]`. `policy` is an [`MtlPolicy`] value. Pass NaN for
/// `b` when the hull distance is unknown.
///
/// # Safety
/// `system` and `out` must be valid; `f` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mtl_wrga_run(
    system: *const MtlSystem,
    f: *const f64,
    len: usize,
    t: f64,
    policy: u32,
    m_max: usize,
    b: f64,
    seed: u64,
    out: *mut *mut MtlTrace,
) -> MtlStatus {
    guard(|| {
        let system = as_ref(system, "system")?;
        let f = as_slice(f, len, "f")?;
        let policy = match policy {
            p if p == MtlPolicy::Exact as u32 => SelectionPolicy::Exact,
            p if p == MtlPolicy::LazyWeak as u32 => SelectionPolicy::LazyWeak,
            p if p == MtlPolicy::RandomWeak as u32 => SelectionPolicy::RandomWeak,
            other => return Err(Fail(MtlStatus::InvalidArgument, format!("unknown policy {other}"))),
        };
        let tau = WeaknessSequence::constant(t)?;
        let b = if b.is_nan() { None } else { Some(b) };
        put(out, MtlTrace(wrga_run(&system.0, f, &tau, m_max, policy, b, seed)?))
    })
}

/// Number of executed steps, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn mtl_trace_len(trace: *const MtlTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.records.len())
}

/// Writes `‖f_0‖, …, ‖f_m‖` (`mtl_trace_len + 1` values) into `out`.
///
/// # Safety
/// `trace` must be valid and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mtl_trace_residuals(trace: *const MtlTrace, out: *mut f64, cap: usize) -> MtlStatus {
    guard(|| {
        let norms = as_ref(trace, "trace")?.0.residual_norms();
        if cap < norms.len() {
            return Err(Fail(MtlStatus::InvalidArgument, format!("need {} slots, got {cap}", norms.len())));
        }
        as_slice_mut(out, norms.len(), "out")?.copy_from_slice(&norms);
        Ok(())
    })
}

/// Writes the final approximant `G_m` (length `len`) into `out`.
///
/// # Safety
/// `trace` must be valid and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mtl_trace_approximant(trace: *const MtlTrace, out: *mut f64, len: usize) -> MtlStatus {
    guard(|| {
        let g = &as_ref(trace, "trace")?.0.approximant;
        if len != g.len() {
            return Err(Error::DimensionMismatch {
                expected: g.len(),
                actual: len,
            }
            .into());
        }
        as_slice_mut(out, len, "out")?.copy_from_slice(g);
        Ok(())
    })
}

/// One JSON object per step, newline separated.
///
/// # Safety
/// `trace` and `out` must be valid; free the result with [`mtl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn mtl_trace_to_jsonl(trace: *const MtlTrace, out: *mut *mut c_char) -> MtlStatus {
    guard(|| {
        let trace = as_ref(trace, "trace")?;
        put_string(out, trace.0.to_jsonl()?)
    })
}

/// # Safety
/// `trace` must be null or a handle from [`mtl_wrga_run`].
#[no_mangle]
pub unsafe extern "C" fn mtl_trace_free(trace: *mut MtlTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Best m-term error of `x` in the canonical basis of ℓ_p^len.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn mtl_sigma_m_canonical(x: *const f64, len: usize, m: usize, p: f64, out: *mut f64) -> MtlStatus {
    guard(|| {
        let x = as_slice(x, len, "x")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sigma_m_canonical(x, m, p)?.error;
        Ok(())
    })
}

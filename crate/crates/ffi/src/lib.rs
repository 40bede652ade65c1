//! C ABI for the team-disclosure library.
//!
//! Protocols and distributions are opaque handles created from the same text and
//! JSON forms the command-line tool accepts. Results come back as JSON strings
//! with exact rationals; free them with [`td_string_free`]. Every function
//! returns a [`TdStatus`]; on failure [`td_last_error`] describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use team_disclosure::binary::BinaryError;
use team_disclosure::config::{parse_dist, parse_env, parse_protocol, ConfigError};
use team_disclosure::equilibrium::{find_equilibria, EquilibriumError};
use team_disclosure::outcomes::JointDistribution;
use team_disclosure::protocol::DeliberationProtocol;
use team_disclosure::rational::to_exact_string;
use team_disclosure::report::{to_json, EquilibriumView};
use team_disclosure::SearchCaps;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TdStatus {
    /// Success.
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// A string argument was not UTF-8.
    InvalidUtf8 = 2,
    /// The input was malformed or inconsistent.
    InvalidInput = 3,
    /// The instance exceeds a search cap.
    ComputeCap = 4,
    /// Internal error.
    Panic = 5,
}

/// Opaque deliberation protocol.
pub struct TdProtocol(DeliberationProtocol);

/// Opaque joint outcome distribution.
pub struct TdDistribution(JointDistribution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TdStatus, String);

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let status = match &e {
            ConfigError::Equilibrium(inner) if inner.is_compute_cap() => TdStatus::ComputeCap,
            _ => TdStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<EquilibriumError> for Failure {
    fn from(e: EquilibriumError) -> Self {
        let status = if e.is_compute_cap() {
            TdStatus::ComputeCap
        } else {
            TdStatus::InvalidInput
        };
        Failure(status, e.to_string())
    }
}

impl From<BinaryError> for Failure {
    fn from(e: BinaryError) -> Self {
        Failure(TdStatus::InvalidInput, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TdStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (TdStatus::Ok, None),
        Ok(Err(Failure(status, msg))) => (status, Some(msg)),
        Err(_) => (TdStatus::Panic, Some("internal error".to_owned())),
    };
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() =
            message.map(|m| CString::new(m.replace('\0', " ")).expect("nul removed"));
    });
    status
}

fn null() -> Failure {
    Failure(TdStatus::NullPointer, "null pointer argument".to_owned())
}

/// # Safety
/// `s` must be null or a valid nul-terminated string.
unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(TdStatus::InvalidUtf8, e.to_string()))
}

/// # Safety
/// `out` must be null or writable.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s)
        .expect("JSON has no interior nul")
        .into_raw()
}

/// Message for the last failed call on this thread, or null. Free with
/// [`td_string_free`].
#[no_mangle]
pub extern "C" fn td_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |m| m.clone().into_raw())
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn td_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a protocol such as `k_majority:3,2`, `leader:3,1`, `custom:3;1,2;2,3`
/// or its JSON form.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_protocol_parse(
    spec: *const c_char,
    out: *mut *mut TdProtocol,
) -> TdStatus {
    guard(|| {
        let p = parse_protocol(text(spec)?)?;
        put(out, Box::into_raw(Box::new(TdProtocol(p))))
    })
}

/// Releases a protocol. Null is ignored.
///
/// # Safety
/// `p` must be null or a live handle from [`td_protocol_parse`].
#[no_mangle]
pub unsafe extern "C" fn td_protocol_free(p: *mut TdProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Team size of a protocol.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_protocol_members(p: *const TdProtocol, out: *mut usize) -> TdStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(null)?;
        put(out, p.0.members())
    })
}

/// Whether every pivotal coalition contains a strictly smaller group that can
/// block disclosure alone.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_protocol_requires_more_consensus(
    p: *const TdProtocol,
    out: *mut bool,
) -> TdStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(null)?;
        put(out, p.0.disclosure_requires_more_consensus())
    })
}

/// Parses a distribution such as `independent:1/2` or its JSON form. `members`
/// expands single-value shorthand; pass 0 when every member is listed.
///
/// # Safety
/// `spec` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn td_distribution_parse(
    spec: *const c_char,
    members: usize,
    out: *mut *mut TdDistribution,
) -> TdStatus {
    guard(|| {
        let d = parse_dist(text(spec)?, (members > 0).then_some(members))?;
        put(out, Box::into_raw(Box::new(TdDistribution(d))))
    })
}

/// Releases a distribution. Null is ignored.
///
/// # Safety
/// `d` must be null or a live handle from [`td_distribution_parse`].
#[no_mangle]
pub unsafe extern "C" fn td_distribution_free(d: *mut TdDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// All equilibria as a JSON array with exact rational strings.
///
/// # Safety
/// Handles must be live and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn td_solve(
    p: *const TdProtocol,
    d: *const TdDistribution,
    out_json: *mut *mut c_char,
) -> TdStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(null)?;
        let d = d.as_ref().ok_or_else(null)?;
        let eqs = find_equilibria(&p.0, &d.0, &SearchCaps::default())?;
        let views: Vec<EquilibriumView> = eqs
            .iter()
            .map(|e| EquilibriumView::new(e, d.0.space()))
            .collect();
        put(out_json, owned_string(to_json(&views)))
    })
}

/// Effort gains per consensus level for a binary environment given as JSON,
/// returned as a JSON array of exact strings, plus the optimal level.
///
/// # Safety
/// `env_json` must be a nul-terminated string; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_binary_gains(
    env_json: *const c_char,
    out_json: *mut *mut c_char,
    out_k_star: *mut usize,
) -> TdStatus {
    guard(|| {
        let env = parse_env(text(env_json)?)?;
        let gains: Vec<String> = env.gains()?.iter().map(to_exact_string).collect();
        let k_star = env.optimal_k()?;
        if out_json.is_null() || out_k_star.is_null() {
            return Err(null());
        }
        put(out_k_star, k_star)?;
        put(out_json, owned_string(to_json(&gains)))
    })
}

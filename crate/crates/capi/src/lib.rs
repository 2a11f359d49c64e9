//! C ABI over the streaming engine: opaque session handles, status codes,
//! and a flat interval struct. The matching header lives in
//! `include/sph.h`; `tests/header_sync.rs` keeps the two in step.
//!
//! Conventions: every function returns `SphStatus`; out-parameters are only
//! written on `Ok`; `sph_last_error_message` returns a thread-local C string
//! describing the most recent failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use sph_core::points::{EdgeSource, PointCloud, PointMetric};
use sph_core::session::{RunOutcome, Session, SessionConfig};
use sph_core::{compute_edges, external_sort_edges};

/// Status codes shared with the C header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    InputError = 3,
    IoError = 4,
    ContractViolation = 5,
    CheckpointMismatch = 6,
    Finalized = 7,
}

/// One persistence interval; `death` is IEEE +inf for open classes.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SphInterval {
    pub dimension: u32,
    pub birth: f64,
    pub death: f64,
}

/// Outcome of `sph_session_run`, mirrored in the header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphRunOutcome {
    EndOfStream = 0,
    StoppedAtEpsilon = 1,
    EdgeBudgetExhausted = 2,
}

pub struct SphSession {
    inner: Session,
    finalized: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: SphStatus, message: &str) -> SphStatus {
    set_error(message);
    status
}

fn session_error_status(e: &sph_core::session::SessionError) -> SphStatus {
    use sph_core::session::SessionError;
    match e {
        SessionError::Clique(_) | SessionError::Persistence(_) | SessionError::AlreadyFinalized => {
            SphStatus::ContractViolation
        }
        SessionError::Checkpoint(inner) => checkpoint_error_status(inner),
        _ => SphStatus::IoError,
    }
}

fn checkpoint_error_status(e: &sph_core::checkpoint::CheckpointError) -> SphStatus {
    use sph_core::checkpoint::CheckpointError;
    match e {
        CheckpointError::Io(_) | CheckpointError::EdgeFile(_) => SphStatus::IoError,
        _ => SphStatus::CheckpointMismatch,
    }
}

/// # Safety
/// `ptr` must be a NUL-terminated string valid for the duration of the call.
unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, SphStatus> {
    if ptr.is_null() {
        return Err(fail(SphStatus::NullArgument, "path argument is NULL"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(fail(SphStatus::InvalidArgument, "path is not UTF-8")),
    }
}

/// Version of the library as a static C string.
#[no_mangle]
pub extern "C" fn sph_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sph_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds the sorted edge file for `n` points of dimension `dim`, stored
/// row-major in `coords`. `metric` is 0 for Euclidean, 1 for Manhattan.
///
/// # Safety
/// `coords` must point to `n * dim` doubles; `edges_path` must be a valid
/// NUL-terminated path string.
#[no_mangle]
pub unsafe extern "C" fn sph_compute_edges(
    coords: *const f64,
    n: usize,
    dim: usize,
    metric: u32,
    max_epsilon: f64,
    edges_path: *const c_char,
    memory_budget: usize,
) -> SphStatus {
    if coords.is_null() {
        return fail(SphStatus::NullArgument, "coords is NULL");
    }
    let path = match path_arg(edges_path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let metric = match metric {
        0 => PointMetric::Euclidean,
        1 => PointMetric::Manhattan,
        other => {
            return fail(
                SphStatus::InvalidArgument,
                &format!("unknown metric code {other}"),
            )
        }
    };
    let slice = std::slice::from_raw_parts(coords, n * dim);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| slice[i * dim..(i + 1) * dim].to_vec()).collect();
    let cloud = match PointCloud::from_rows(rows) {
        Ok(c) => c,
        Err(e) => return fail(SphStatus::InputError, &e.to_string()),
    };
    let source = EdgeSource::Points { cloud, metric };

    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let unsorted = match tempfile::Builder::new()
        .prefix("edges-unsorted-")
        .tempfile_in(parent)
    {
        Ok(f) => f,
        Err(e) => return fail(SphStatus::IoError, &e.to_string()),
    };
    let unsorted_file = match compute_edges(&source, max_epsilon, unsorted.path()) {
        Ok(f) => f,
        Err(e) => return fail(SphStatus::IoError, &e.to_string()),
    };
    match external_sort_edges(&unsorted_file, path, memory_budget) {
        Ok(_) => SphStatus::Ok,
        Err(e) => fail(SphStatus::IoError, &e.to_string()),
    }
}

/// Starts a fresh session over a sorted edge file. On success `*out` owns
/// the session; release it with `sph_session_free`.
///
/// # Safety
/// Path arguments must be valid NUL-terminated strings and `out` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn sph_session_start(
    edges_path: *const c_char,
    n: u32,
    max_dim: u32,
    intervals_path: *const c_char,
    out: *mut *mut SphSession,
) -> SphStatus {
    if out.is_null() {
        return fail(SphStatus::NullArgument, "out is NULL");
    }
    let edges = match path_arg(edges_path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let intervals = match path_arg(intervals_path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match Session::start(
        edges,
        n,
        max_dim as usize,
        intervals,
        SessionConfig::default(),
    ) {
        Ok(session) => {
            *out = Box::into_raw(Box::new(SphSession {
                inner: session,
                finalized: false,
            }));
            SphStatus::Ok
        }
        Err(e) => fail(session_error_status(&e), &e.to_string()),
    }
}

/// Restores a checkpointed session; the interval file is truncated back to
/// the checkpoint's closed count so the resumed run extends it in place.
///
/// # Safety
/// Path arguments must be valid NUL-terminated strings and `out` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn sph_session_resume(
    checkpoint_path: *const c_char,
    edges_path: *const c_char,
    intervals_path: *const c_char,
    out: *mut *mut SphSession,
) -> SphStatus {
    if out.is_null() {
        return fail(SphStatus::NullArgument, "out is NULL");
    }
    let checkpoint = match path_arg(checkpoint_path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let edges = match path_arg(edges_path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let intervals = match path_arg(intervals_path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match Session::resume(checkpoint, edges, intervals, SessionConfig::default()) {
        Ok(session) => {
            *out = Box::into_raw(Box::new(SphSession {
                inner: session,
                finalized: false,
            }));
            SphStatus::Ok
        }
        Err(e) => fail(session_error_status(&e), &e.to_string()),
    }
}

unsafe fn session_arg<'a>(session: *mut SphSession) -> Result<&'a mut SphSession, SphStatus> {
    if session.is_null() {
        return Err(fail(SphStatus::NullArgument, "session is NULL"));
    }
    Ok(&mut *session)
}

/// Processes edges until the stream ends, the next edge exceeds
/// `stop_epsilon`, or `max_edges` (0 = unlimited) are consumed. `outcome`
/// may be NULL.
///
/// # Safety
/// `session` must come from `sph_session_start`/`sph_session_resume`.
#[no_mangle]
pub unsafe extern "C" fn sph_session_run(
    session: *mut SphSession,
    stop_epsilon: f64,
    max_edges: u64,
    outcome: *mut SphRunOutcome,
) -> SphStatus {
    let handle = match session_arg(session) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if handle.finalized {
        return fail(SphStatus::Finalized, "session already finalized");
    }
    let budget = if max_edges == 0 { None } else { Some(max_edges) };
    match handle.inner.run(stop_epsilon, budget, None) {
        Ok(result) => {
            if !outcome.is_null() {
                *outcome = match result {
                    RunOutcome::EndOfStream => SphRunOutcome::EndOfStream,
                    RunOutcome::StoppedAtEpsilon => SphRunOutcome::StoppedAtEpsilon,
                    RunOutcome::EdgeBudgetExhausted => SphRunOutcome::EdgeBudgetExhausted,
                    RunOutcome::Interrupted => SphRunOutcome::EdgeBudgetExhausted,
                };
            }
            SphStatus::Ok
        }
        Err(e) => fail(session_error_status(&e), &e.to_string()),
    }
}

/// Number of edges the session has processed so far.
///
/// # Safety
/// `session` must be a live session handle; `out` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn sph_session_edges_processed(
    session: *mut SphSession,
    out: *mut u64,
) -> SphStatus {
    let handle = match session_arg(session) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail(SphStatus::NullArgument, "out is NULL");
    }
    *out = handle.inner.edges_processed();
    SphStatus::Ok
}

/// Closed-interval count so far (they are on disk, not in memory).
///
/// # Safety
/// `session` must be a live session handle; `out` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn sph_session_closed_count(
    session: *mut SphSession,
    out: *mut u64,
) -> SphStatus {
    let handle = match session_arg(session) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail(SphStatus::NullArgument, "out is NULL");
    }
    *out = handle.inner.state().closed_count();
    SphStatus::Ok
}

/// Copies the open-interval counts per dimension (0 .. max_dim-1) into
/// `betti`, which holds `len` entries; `len` must equal max_dim.
///
/// # Safety
/// `session` must be a live session handle; `betti` must hold `len` u64s.
#[no_mangle]
pub unsafe extern "C" fn sph_session_betti(
    session: *mut SphSession,
    betti: *mut u64,
    len: usize,
) -> SphStatus {
    let handle = match session_arg(session) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if betti.is_null() {
        return fail(SphStatus::NullArgument, "betti is NULL");
    }
    let counts = handle.inner.state().betti_numbers();
    if len != counts.len() {
        return fail(
            SphStatus::InvalidArgument,
            &format!("betti buffer holds {len}, need {}", counts.len()),
        );
    }
    for (i, count) in counts.iter().enumerate() {
        *betti.add(i) = *count as u64;
    }
    SphStatus::Ok
}

/// Two-call pattern for the currently open intervals: with `buffer` NULL,
/// writes the required capacity to `written`; otherwise copies up to `cap`
/// intervals and writes the copied count.
///
/// # Safety
/// `session` must be a live session handle; `buffer` (when non-NULL) must
/// hold `cap` entries; `written` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn sph_session_open_intervals(
    session: *mut SphSession,
    buffer: *mut SphInterval,
    cap: usize,
    written: *mut usize,
) -> SphStatus {
    let handle = match session_arg(session) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if written.is_null() {
        return fail(SphStatus::NullArgument, "written is NULL");
    }
    let open = handle.inner.state().open_intervals();
    if buffer.is_null() {
        *written = open.len();
        return SphStatus::Ok;
    }
    let count = open.len().min(cap);
    for (i, interval) in open.iter().take(count).enumerate() {
        *buffer.add(i) = SphInterval {
            dimension: interval.dimension as u32,
            birth: interval.birth,
            death: interval.death,
        };
    }
    *written = count;
    SphStatus::Ok
}

/// Writes a checkpoint of the current state to `path`.
///
/// # Safety
/// `session` must be a live session handle; `path` a valid NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn sph_session_checkpoint(
    session: *mut SphSession,
    path: *const c_char,
) -> SphStatus {
    let handle = match session_arg(session) {
        Ok(h) => h,
        Err(status) => return status,
    };
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match handle.inner.checkpoint_to(path) {
        Ok(()) => SphStatus::Ok,
        Err(e) => fail(session_error_status(&e), &e.to_string()),
    }
}

/// Appends the open intervals to the interval file and backfills its record
/// count. The session stays readable but cannot run or finalize again.
///
/// # Safety
/// `session` must be a live session handle.
#[no_mangle]
pub unsafe extern "C" fn sph_session_finalize(session: *mut SphSession) -> SphStatus {
    let handle = match session_arg(session) {
        Ok(h) => h,
        Err(status) => return status,
    };
    if handle.finalized {
        return fail(SphStatus::Finalized, "session already finalized");
    }
    match handle.inner.finalize() {
        Ok(_) => {
            handle.finalized = true;
            SphStatus::Ok
        }
        Err(e) => fail(session_error_status(&e), &e.to_string()),
    }
}

/// Releases a session handle. NULL is a no-op.
///
/// # Safety
/// `session` must come from `sph_session_start`/`sph_session_resume` and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sph_session_free(session: *mut SphSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Reads a finalized interval file with the two-call pattern: `buffer` NULL
/// reports the record count; otherwise up to `cap` records are copied.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `buffer` (when non-NULL)
/// must hold `cap` entries; `written` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn sph_intervals_read(
    path: *const c_char,
    buffer: *mut SphInterval,
    cap: usize,
    written: *mut usize,
) -> SphStatus {
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    if written.is_null() {
        return fail(SphStatus::NullArgument, "written is NULL");
    }
    let intervals = match sph_core::intervals::read_intervals(path) {
        Ok(iv) => iv,
        Err(e) => return fail(SphStatus::IoError, &e.to_string()),
    };
    if buffer.is_null() {
        *written = intervals.len();
        return SphStatus::Ok;
    }
    let count = intervals.len().min(cap);
    for (i, interval) in intervals.iter().take(count).enumerate() {
        *buffer.add(i) = SphInterval {
            dimension: interval.dimension as u32,
            birth: interval.birth,
            death: interval.death,
        };
    }
    *written = count;
    SphStatus::Ok
}

//! Exercises the C surface from Rust: happy path, resume, argument
//! validation, and the two-call buffer pattern.

use std::ffi::{CStr, CString};
use std::os::unix::ffi::OsStrExt;
use std::path::Path;
use std::ptr;

use sph_capi::{
    sph_compute_edges, sph_intervals_read, sph_last_error_message, sph_session_betti,
    sph_session_checkpoint, sph_session_closed_count, sph_session_edges_processed,
    sph_session_finalize, sph_session_free, sph_session_open_intervals, sph_session_resume,
    sph_session_run, sph_session_start, sph_version, SphInterval, SphRunOutcome, SphSession,
    SphStatus,
};

fn cpath(path: &Path) -> CString {
    CString::new(path.as_os_str().as_bytes()).unwrap()
}

fn circle_coords(n: usize) -> Vec<f64> {
    (0..n)
        .flat_map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            [theta.cos(), theta.sin()]
        })
        .collect()
}

#[test]
fn version_and_error_message_are_c_strings() {
    let version = unsafe { CStr::from_ptr(sph_version()) };
    assert!(!version.to_str().unwrap().is_empty());
    let message = unsafe { CStr::from_ptr(sph_last_error_message()) };
    assert!(message.to_str().is_ok());
}

#[test]
fn full_pipeline_through_the_c_surface() {
    let dir = tempfile::tempdir().unwrap();
    let edges = cpath(&dir.path().join("edges.sph"));
    let intervals_path = dir.path().join("iv.sphi");
    let intervals = cpath(&intervals_path);
    let coords = circle_coords(8);

    let status = unsafe {
        sph_compute_edges(
            coords.as_ptr(),
            8,
            2,
            0, // Euclidean
            2.1,
            edges.as_ptr(),
            64 * 1024 * 1024,
        )
    };
    assert_eq!(status, SphStatus::Ok);

    let mut session: *mut SphSession = ptr::null_mut();
    let status =
        unsafe { sph_session_start(edges.as_ptr(), 8, 2, intervals.as_ptr(), &mut session) };
    assert_eq!(status, SphStatus::Ok);
    assert!(!session.is_null());

    // Stepwise: 10 edges, then the rest.
    let mut outcome = SphRunOutcome::EndOfStream;
    let status = unsafe { sph_session_run(session, 2.1, 10, &mut outcome) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(outcome, SphRunOutcome::EdgeBudgetExhausted);
    let mut processed = 0u64;
    let status = unsafe { sph_session_edges_processed(session, &mut processed) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(processed, 10);

    let status = unsafe { sph_session_run(session, 2.1, 0, &mut outcome) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(outcome, SphRunOutcome::EndOfStream);

    let mut betti = [0u64; 2];
    let status = unsafe { sph_session_betti(session, betti.as_mut_ptr(), 2) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(betti, [1, 0]);

    // Wrong betti length is rejected.
    let status = unsafe { sph_session_betti(session, betti.as_mut_ptr(), 1) };
    assert_eq!(status, SphStatus::InvalidArgument);

    let mut needed = 0usize;
    let status =
        unsafe { sph_session_open_intervals(session, ptr::null_mut(), 0, &mut needed) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(needed, 1);
    let mut open = vec![
        SphInterval {
            dimension: 0,
            birth: 0.0,
            death: 0.0
        };
        needed
    ];
    let mut written = 0usize;
    let status =
        unsafe { sph_session_open_intervals(session, open.as_mut_ptr(), open.len(), &mut written) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(written, 1);
    assert_eq!(open[0].dimension, 0);
    assert!(open[0].death.is_infinite());

    let mut closed = 0u64;
    let status = unsafe { sph_session_closed_count(session, &mut closed) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(closed, 28); // 7 dim-0 deaths + 21 dim-1 deaths on K8

    let status = unsafe { sph_session_finalize(session) };
    assert_eq!(status, SphStatus::Ok);
    let status = unsafe { sph_session_finalize(session) };
    assert_eq!(status, SphStatus::Finalized);
    unsafe { sph_session_free(session) };

    // Read the finalized interval file back through the C surface.
    let mut count = 0usize;
    let status =
        unsafe { sph_intervals_read(intervals.as_ptr(), ptr::null_mut(), 0, &mut count) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(count, 29);
    let mut buffer = vec![
        SphInterval {
            dimension: 0,
            birth: 0.0,
            death: 0.0
        };
        count
    ];
    let status = unsafe {
        sph_intervals_read(intervals.as_ptr(), buffer.as_mut_ptr(), buffer.len(), &mut written)
    };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(written, 29);
    assert!(buffer.iter().any(|iv| iv.death.is_infinite()));
}

#[test]
fn checkpoint_and_resume_through_the_c_surface() {
    let dir = tempfile::tempdir().unwrap();
    let edges = cpath(&dir.path().join("edges.sph"));
    let intervals = cpath(&dir.path().join("iv.sphi"));
    let checkpoint = cpath(&dir.path().join("run.sphc"));
    let coords = circle_coords(8);

    let status = unsafe {
        sph_compute_edges(coords.as_ptr(), 8, 2, 0, 2.1, edges.as_ptr(), 64 * 1024 * 1024)
    };
    assert_eq!(status, SphStatus::Ok);

    let mut session: *mut SphSession = ptr::null_mut();
    let status =
        unsafe { sph_session_start(edges.as_ptr(), 8, 2, intervals.as_ptr(), &mut session) };
    assert_eq!(status, SphStatus::Ok);
    let status = unsafe { sph_session_run(session, 2.1, 12, ptr::null_mut()) };
    assert_eq!(status, SphStatus::Ok);
    let status = unsafe { sph_session_checkpoint(session, checkpoint.as_ptr()) };
    assert_eq!(status, SphStatus::Ok);
    unsafe { sph_session_free(session) }; // abandon without finalizing

    let mut resumed: *mut SphSession = ptr::null_mut();
    let status = unsafe {
        sph_session_resume(
            checkpoint.as_ptr(),
            edges.as_ptr(),
            intervals.as_ptr(),
            &mut resumed,
        )
    };
    assert_eq!(status, SphStatus::Ok);
    let mut processed = 0u64;
    unsafe { sph_session_edges_processed(resumed, &mut processed) };
    assert_eq!(processed, 12);
    let status = unsafe { sph_session_run(resumed, 2.1, 0, ptr::null_mut()) };
    assert_eq!(status, SphStatus::Ok);
    let status = unsafe { sph_session_finalize(resumed) };
    assert_eq!(status, SphStatus::Ok);
    unsafe { sph_session_free(resumed) };

    let mut count = 0usize;
    let status =
        unsafe { sph_intervals_read(intervals.as_ptr(), ptr::null_mut(), 0, &mut count) };
    assert_eq!(status, SphStatus::Ok);
    assert_eq!(count, 29);
}

#[test]
fn null_and_invalid_arguments_are_reported() {
    let status = unsafe {
        sph_compute_edges(ptr::null(), 4, 2, 0, 1.0, ptr::null(), 64 * 1024 * 1024)
    };
    assert_eq!(status, SphStatus::NullArgument);
    let message = unsafe { CStr::from_ptr(sph_last_error_message()) };
    assert!(message.to_str().unwrap().contains("NULL"));

    let coords = [0.0, 0.0, 1.0, 0.0];
    let dir = tempfile::tempdir().unwrap();
    let edges = cpath(&dir.path().join("edges.sph"));
    let status = unsafe {
        sph_compute_edges(coords.as_ptr(), 2, 2, 9, 1.0, edges.as_ptr(), 64 * 1024 * 1024)
    };
    assert_eq!(status, SphStatus::InvalidArgument);

    let mut session: *mut SphSession = ptr::null_mut();
    let status = unsafe {
        sph_session_start(edges.as_ptr(), 2, 2, edges.as_ptr(), ptr::null_mut())
    };
    assert_eq!(status, SphStatus::NullArgument);
    let status = unsafe { sph_session_run(ptr::null_mut(), 1.0, 0, ptr::null_mut()) };
    assert_eq!(status, SphStatus::NullArgument);

    // A resume against a missing checkpoint is an I/O error; against a wrong
    // edge file it is a checkpoint mismatch (exercised in core tests).
    let missing = cpath(&dir.path().join("missing.sphc"));
    let status = unsafe {
        sph_session_resume(missing.as_ptr(), edges.as_ptr(), edges.as_ptr(), &mut session)
    };
    assert_eq!(status, SphStatus::IoError);
    assert!(session.is_null());
}

/// The committed header must declare exactly the exported sph_ symbols.
#[test]
fn header_matches_exported_surface() {
    let header = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sph.h"),
    )
    .unwrap();
    // Taking each function as a value proves the symbol exists with the
    // linkage the header promises.
    let exported: &[(&str, usize)] = &[
        ("sph_version", sph_version as usize),
        ("sph_last_error_message", sph_last_error_message as usize),
        ("sph_compute_edges", sph_compute_edges as usize),
        ("sph_session_start", sph_session_start as usize),
        ("sph_session_resume", sph_session_resume as usize),
        ("sph_session_run", sph_session_run as usize),
        ("sph_session_edges_processed", sph_session_edges_processed as usize),
        ("sph_session_closed_count", sph_session_closed_count as usize),
        ("sph_session_betti", sph_session_betti as usize),
        ("sph_session_open_intervals", sph_session_open_intervals as usize),
        ("sph_session_checkpoint", sph_session_checkpoint as usize),
        ("sph_session_finalize", sph_session_finalize as usize),
        ("sph_session_free", sph_session_free as usize),
        ("sph_intervals_read", sph_intervals_read as usize),
    ];
    for (name, _) in exported {
        assert!(
            header.contains(name),
            "header is missing declaration for {name}"
        );
    }
    // And no phantom declarations: every sph_ identifier in the header is
    // one of the exported names.
    for line in header.lines() {
        if let Some(start) = line.find("sph_") {
            let identifier: String = line[start..]
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                .collect();
            assert!(
                exported.iter().any(|(name, _)| *name == identifier)
                    || identifier == "sph_h", // include guard comment
                "header declares unknown identifier {identifier}"
            );
        }
    }
}

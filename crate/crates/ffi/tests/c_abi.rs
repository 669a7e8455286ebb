use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mirror_descent_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(md_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn fixture(name: &str) -> *mut MdInstance {
    let name = CString::new(name).unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { md_instance_fixture(name.as_ptr(), &mut inst) },
        MdStatus::Ok
    );
    inst
}

#[test]
fn partial_solve_through_handles() {
    let inst = fixture("active-linear");
    unsafe {
        assert_eq!(md_instance_dim(inst), 2);
        let mut trace = ptr::null_mut();
        assert_eq!(md_solve_partial(inst, 0.1, &mut trace), MdStatus::Ok);
        assert_eq!(md_trace_total_iterations(trace), 100);
        assert_eq!(
            md_trace_productive_count(trace) + md_trace_nonproductive_count(trace),
            100
        );
        assert!(md_trace_output_g(trace) <= 0.1);

        let mut x = [0.0; 2];
        assert_eq!(
            md_trace_output_point(trace, x.as_mut_ptr(), 2),
            MdStatus::Ok
        );
        assert_eq!(
            md_trace_output_point(trace, x.as_mut_ptr(), 1),
            MdStatus::OutOfRange
        );

        let mut step = MdStep::default();
        assert_eq!(md_trace_step(trace, 0, &mut step), MdStatus::Ok);
        assert_eq!(step.productive, 0);
        assert_eq!(step.g_value, 1.0);
        assert_eq!(md_trace_step(trace, 100, &mut step), MdStatus::OutOfRange);
        assert!(last_error().contains("step 100"));

        md_trace_free(trace);
        md_instance_free(inst);
    }
}

#[test]
fn adaptive_and_restart() {
    let inst = fixture("strongly-convex-ball");
    unsafe {
        let mut trace = ptr::null_mut();
        assert_eq!(
            md_solve_adaptive(inst, 0.05, 10.0, &mut trace),
            MdStatus::Ok
        );
        assert!(md_trace_total_iterations(trace) > 0);
        md_trace_free(trace);

        let mut rep = ptr::null_mut();
        let x0 = [0.0, 0.0];
        assert_eq!(
            md_restart(inst, 0.02, x0.as_ptr(), 2, 0.5, &mut rep),
            MdStatus::Ok
        );
        assert_eq!(md_restart_count(rep), 4);
        assert!(md_restart_total_inner_iterations(rep) <= md_restart_iteration_bound(rep));
        let mut s = MdRestartStep::default();
        for i in 0..4 {
            assert_eq!(md_restart_step(rep, i, &mut s), MdStatus::Ok);
            assert_eq!(s.p, i + 1);
            assert!(s.dist_sq_to_solution <= s.r_p_sq + 1e-9);
        }
        let mut x = [0.0; 2];
        assert_eq!(md_restart_final_point(rep, x.as_mut_ptr(), 2), MdStatus::Ok);
        assert!((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) <= 0.04);
        md_restart_free(rep);

        // Null start point means the setup's center.
        let mut rep = ptr::null_mut();
        assert_eq!(
            md_restart(inst, 0.02, ptr::null(), 0, 0.5, &mut rep),
            MdStatus::Ok
        );
        md_restart_free(rep);
        md_instance_free(inst);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let inst = fixture("active-linear");
        let mut trace = ptr::null_mut();
        assert_eq!(
            md_solve_partial(inst, 0.0, &mut trace),
            MdStatus::Precondition
        );
        assert!(trace.is_null());
        assert!(last_error().contains("epsilon"));

        let mut rep = ptr::null_mut();
        assert_eq!(
            md_restart(inst, 0.1, ptr::null(), 0, 0.5, &mut rep),
            MdStatus::Precondition
        );
        md_instance_free(inst);

        assert_eq!(
            md_solve_partial(ptr::null(), 0.1, &mut trace),
            MdStatus::NullPointer
        );
        let mut out = ptr::null_mut();
        let bad = CString::new("no-such-fixture").unwrap();
        assert_eq!(
            md_instance_fixture(bad.as_ptr(), &mut out),
            MdStatus::InvalidArgument
        );
        let broken = CString::new("{\"version\": 1,").unwrap();
        assert_eq!(
            md_instance_from_json(broken.as_ptr(), &mut out),
            MdStatus::Parse
        );
        assert!(last_error().contains("line"));
        let missing = CString::new("/nonexistent/instance.json").unwrap();
        assert_eq!(md_instance_load(missing.as_ptr(), &mut out), MdStatus::Io);

        let mut phi = 0.0;
        assert_eq!(
            md_phi_inverse(1.0, 0.0, 0.0, 0.0, &mut phi),
            MdStatus::Degenerate
        );
        assert_eq!(md_phi_inverse(1.0, 0.5, 2.0, 2.0, &mut phi), MdStatus::Ok);
        assert_eq!(phi, 0.5);
        assert!(last_error().is_empty());

        // Null handles are tolerated by the free functions and accessors.
        md_instance_free(ptr::null_mut());
        md_trace_free(ptr::null_mut());
        assert_eq!(md_trace_total_iterations(ptr::null()), 0);
        assert!(md_trace_output_f(ptr::null()).is_nan());
    }
}

#[test]
fn json_round_trip_and_generator() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(md_instance_generate(3, 2, 5, &mut inst), MdStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(md_instance_to_json(inst, &mut text), MdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(md_instance_from_json(text, &mut back), MdStatus::Ok);
        assert_eq!(md_instance_dim(back), 3);
        let mut again = ptr::null_mut();
        assert_eq!(md_instance_to_json(back, &mut again), MdStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        md_string_free(text);
        md_string_free(again);
        md_instance_free(inst);
        md_instance_free(back);

        assert_eq!(
            md_instance_generate(0, 2, 5, &mut inst),
            MdStatus::Precondition
        );
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/mirror_descent.h"
    ))
    .unwrap();
    for name in [
        "md_instance_load",
        "md_instance_from_json",
        "md_instance_fixture",
        "md_instance_generate",
        "md_instance_free",
        "md_solve_partial",
        "md_solve_adaptive",
        "md_trace_step",
        "md_restart",
        "md_phi_inverse",
        "md_last_error_message",
        "typedef struct MdInstance MdInstance",
        "MD_STATUS_INVARIANT_VIOLATION = 8",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs `tests/c/smoke.c` against the static library when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let archive = profile_dir.join("libmirror_descent_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} missing", archive.display());
        return;
    }
    let out = std::env::temp_dir().join(format!("md_smoke_{}", std::process::id()));
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("N=100 "));
}

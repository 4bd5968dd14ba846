use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dpsbp_wave_ffi::*;

fn last_error() -> String {
    let p = dpsbp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn exact_solution_round_trip() {
    let mut ex = ptr::null_mut();
    unsafe {
        assert_eq!(dpsbp_exact_new(2, 1.0, 1.0, &mut ex), DpsbpStatus::Ok);
        let mut u = f64::NAN;
        assert_eq!(dpsbp_exact_eval(ex, [0.0, 0.0].as_ptr(), 0.0, &mut u), DpsbpStatus::Ok);
        assert!((u - 1.0).abs() < 1e-15);
        dpsbp_exact_free(ex);
    }
}

#[test]
fn bad_arguments_set_the_message() {
    let mut ex = ptr::null_mut();
    unsafe {
        assert_eq!(dpsbp_exact_new(3, 1.0, 0.0, &mut ex), DpsbpStatus::InvalidArgument);
        assert!(last_error().contains("dim"));
        assert_eq!(dpsbp_exact_eval(ptr::null(), ptr::null(), 0.0, ptr::null_mut()), DpsbpStatus::NullPointer);
        dpsbp_clear_error();
        assert!(dpsbp_last_error().is_null());
    }
}

#[test]
fn rate_fit() {
    let d = [0.1, 0.05, 0.025];
    let e: Vec<f64> = d.iter().map(|x| x * x * x * x).collect();
    let mut r = 0.0;
    unsafe {
        assert_eq!(dpsbp_convergence_rate(d.as_ptr(), e.as_ptr(), 3, &mut r), DpsbpStatus::Ok);
        assert!((r - 4.0).abs() < 1e-12);
        assert_eq!(dpsbp_convergence_rate(d.as_ptr(), e.as_ptr(), 1, &mut r), DpsbpStatus::InvalidArgument);
    }
    assert!(last_error().contains("two"));
}

#[test]
fn config_errors_map_to_codes() {
    let mut cfg = ptr::null_mut();
    let missing = CString::new(r#"{"experiment": "forward1d"}"#).unwrap();
    let invalid = CString::new(r#"{"experiment": "forward1d", "order": 3, "grids": [0.1]}"#).unwrap();
    unsafe {
        assert_eq!(dpsbp_config_parse(missing.as_ptr(), &mut cfg), DpsbpStatus::Parse);
        assert_eq!(dpsbp_config_parse(invalid.as_ptr(), &mut cfg), DpsbpStatus::InvalidConfig);
        assert!(last_error().contains("order"));
        assert!(cfg.is_null());
    }
}

#[test]
fn convergence_run_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let json = CString::new(
        r#"{"experiment": "convergence1d", "order": 2, "flavors": [["minus", "minus"]], "grids": [0.1, 0.05]}"#,
    )
    .unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(dpsbp_config_parse(json.as_ptr(), &mut cfg), DpsbpStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(dpsbp_run(cfg, out.as_ptr(), &mut s), DpsbpStatus::Ok);
        assert_eq!(dpsbp_summary_rate_count(s), 1);
        let mut rate = 0.0;
        let mut label = [0 as std::ffi::c_char; 3];
        assert_eq!(dpsbp_summary_rate(s, 0, &mut rate, label.as_mut_ptr(), 3), DpsbpStatus::Ok);
        assert_eq!(CStr::from_ptr(label.as_ptr()).to_str().unwrap(), "mm");
        assert!(rate > 1.5 && rate < 3.5);
        assert_eq!(dpsbp_summary_rate(s, 1, &mut rate, ptr::null_mut(), 0), DpsbpStatus::InvalidArgument);
        let mut err = 0.0;
        assert_eq!(dpsbp_summary_final_error(s, &mut err), DpsbpStatus::NotAvailable);
        dpsbp_summary_free(s);
        dpsbp_config_free(cfg);
    }
    assert!(dir.path().join("rates.csv").exists());
}

#[test]
fn certification() {
    let mut passed = false;
    unsafe {
        assert_eq!(dpsbp_certify(4, &mut passed), DpsbpStatus::Ok);
        assert!(passed);
        assert_eq!(dpsbp_certify(5, &mut passed), DpsbpStatus::InvalidArgument);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dpsbp_wave.h")).unwrap();
    for name in [
        "dpsbp_last_error",
        "dpsbp_config_parse",
        "dpsbp_run",
        "dpsbp_summary_rate",
        "dpsbp_exact_eval",
        "dpsbp_convergence_rate",
        "dpsbp_certify",
        "DPSBP_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

/// Compiles a C program against the header and the static library.
#[test]
fn c_program_links() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libdpsbp_wave_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping", lib.display());
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

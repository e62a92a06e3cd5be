use std::ffi::{c_void, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use aniso_ffi::*;

const CONFIG: &str = "[model]\nname = burgers\n[grid]\ncells = 32\n[scheme]\nt_end = 0.2\noutput_every = 0.05\n";

fn last_error() -> String {
    let p = aniso_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut AnisoConfig {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { aniso_config_parse(text.as_ptr(), &mut cfg) }, AnisoStatus::Ok);
    cfg
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(aniso_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_errors_set_the_last_error() {
    let text = CString::new("[grid]\ncells = -1\n").unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { aniso_config_parse(text.as_ptr(), &mut cfg) };
    assert_eq!(status, AnisoStatus::Config);
    assert!(cfg.is_null());
    let msg = last_error();
    assert!(msg.contains("line 2"), "{msg}");
    assert!(msg.contains("[model]"), "{msg}");
}

#[test]
fn null_arguments_are_reported() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { aniso_config_parse(ptr::null(), &mut cfg) }, AnisoStatus::NullPointer);
    assert!(last_error().contains("text"));
    let name = CString::new("burgers").unwrap();
    assert_eq!(unsafe { aniso_model_preset(name.as_ptr(), ptr::null_mut()) }, AnisoStatus::NullPointer);
    let (mut d, mut m) = (0usize, 0.0);
    assert_eq!(unsafe { aniso_model_info(ptr::null(), &mut d, &mut m) }, AnisoStatus::NullPointer);
    unsafe {
        aniso_config_free(ptr::null_mut());
        aniso_model_free(ptr::null_mut());
        aniso_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn serialize_reports_the_required_size() {
    let cfg = parse(CONFIG);
    let mut len = 0usize;
    let status = unsafe { aniso_config_serialize(cfg, ptr::null_mut(), 0, &mut len) };
    assert_eq!(status, AnisoStatus::BufferTooSmall);
    let mut buf = vec![0 as std::ffi::c_char; len];
    assert_eq!(unsafe { aniso_config_serialize(cfg, buf.as_mut_ptr(), len, &mut len) }, AnisoStatus::Ok);
    let text = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned();
    assert_eq!(text.len() + 1, len);
    let again = parse(&text);
    unsafe {
        aniso_config_free(cfg);
        aniso_config_free(again);
    }
}

#[test]
fn presets_validate_and_report_their_shape() {
    for (name, dim) in [("burgers", 1), ("porous-medium", 1), ("anisotropic-2d", 2)] {
        let c = CString::new(name).unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(unsafe { aniso_model_preset(c.as_ptr(), &mut model) }, AnisoStatus::Ok);
        let (mut d, mut m) = (0usize, 0.0);
        let (mut passed, mut worst) = (false, f64::NAN);
        unsafe {
            assert_eq!(aniso_model_info(model, &mut d, &mut m), AnisoStatus::Ok);
            assert_eq!(aniso_model_validate(model, 101, &mut passed, &mut worst), AnisoStatus::Ok);
            aniso_model_free(model);
        }
        assert_eq!(d, dim, "{name}");
        assert!(m > 0.0);
        assert!(passed, "{name}: worst {worst}");
    }
    let bad = CString::new("nope").unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { aniso_model_preset(bad.as_ptr(), &mut model) }, AnisoStatus::InvalidArgument);
}

#[test]
fn omega_matches_direct_quadrature_for_linear_advection() {
    // a ≡ 1, A ≡ 0: the integrand is constant in ξ.
    let name = CString::new("linear-advection").unwrap();
    let mut model = ptr::null_mut();
    unsafe { aniso_model_preset(name.as_ptr(), &mut model) };
    let (mut d, mut m) = (0usize, 0.0);
    unsafe { aniso_model_info(model, &mut d, &mut m) };
    let (tau, k, lambda) = (0.3, 1.2, 0.05);
    let mut w = 0.0;
    let status = unsafe { aniso_omega_at(model, tau, [k].as_ptr(), 1, lambda, &mut w) };
    assert_eq!(status, AnisoStatus::Ok);
    let expected = 2.0 * m * lambda / (lambda + (tau + k) * (tau + k));
    assert!((w - expected).abs() <= 1e-10 * expected, "{w} vs {expected}");

    let status = unsafe { aniso_omega_at(model, tau, [k, k].as_ptr(), 2, lambda, &mut w) };
    assert_eq!(status, AnisoStatus::InvalidArgument);
    unsafe { aniso_model_free(model) };
}

unsafe extern "C" fn kruzhkov(xi: f64, user: *mut c_void) -> f64 {
    let v = *(user as *const f64);
    if xi > v {
        1.0
    } else {
        -1.0
    }
}

#[test]
fn entropy_callback_receives_user_data() {
    let mut v = 0.25f64;
    let mut s = 0.0;
    let status =
        unsafe { aniso_entropy_from_kinetic(Some(kruzhkov), (&mut v as *mut f64).cast(), -0.5, 1.0, &mut s) };
    assert_eq!(status, AnisoStatus::Ok);
    assert!((s - (0.75 - 0.25)).abs() < 1e-9, "{s}");
    let status = unsafe { aniso_entropy_from_kinetic(None, ptr::null_mut(), 0.0, 1.0, &mut s) };
    assert_eq!(status, AnisoStatus::NullPointer);
}

#[test]
fn condition_verdicts_follow_the_model() {
    for (name, expected) in [("linear-advection", AnisoVerdict::Fail), ("burgers", AnisoVerdict::Pass)] {
        let cfg = parse(&CONFIG.replace("burgers", name));
        let (mut verdict, mut floor) = (AnisoVerdict::Inconclusive, f64::NAN);
        assert_eq!(unsafe { aniso_check_condition(cfg, &mut verdict, &mut floor) }, AnisoStatus::Ok);
        assert_eq!(verdict, expected, "{name}");
        assert!(floor.is_finite());
        unsafe { aniso_config_free(cfg) };
    }
}

#[test]
fn run_exposes_rows_field_and_audit() {
    let cfg = parse(CONFIG);
    let mut n = 0usize;
    assert_eq!(unsafe { aniso_initial_field(cfg, ptr::null_mut(), 0, &mut n) }, AnisoStatus::BufferTooSmall);
    let mut u0 = vec![0.0; n];
    assert_eq!(unsafe { aniso_initial_field(cfg, u0.as_mut_ptr(), n, &mut n) }, AnisoStatus::Ok);

    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { aniso_run(cfg, &mut traj) }, AnisoStatus::Ok);
    let mut rows = 0usize;
    assert_eq!(unsafe { aniso_trajectory_row_count(traj, &mut rows) }, AnisoStatus::Ok);
    assert_eq!(rows, 5);

    let mut first = AnisoRow::default();
    let mut last = AnisoRow::default();
    unsafe {
        assert_eq!(aniso_trajectory_row(traj, 0, &mut first), AnisoStatus::Ok);
        assert_eq!(aniso_trajectory_row(traj, rows - 1, &mut last), AnisoStatus::Ok);
        assert_eq!(aniso_trajectory_row(traj, rows, &mut last), AnisoStatus::InvalidArgument);
    }
    assert_eq!(first.t, 0.0);
    assert!(last.l1_to_mean < first.l1_to_mean);
    assert!((last.mean - first.mean).abs() < 1e-14);

    let mut u = vec![0.0; n];
    assert_eq!(unsafe { aniso_trajectory_final_field(traj, u.as_mut_ptr(), n, &mut n) }, AnisoStatus::Ok);
    let m0 = u0.iter().sum::<f64>() / n as f64;
    let m1 = u.iter().sum::<f64>() / n as f64;
    assert!((m0 - m1).abs() < 1e-14);
    assert!(u.iter().all(|x| x.abs() <= 1.0 + 1e-12));

    let mut audit = AnisoAudit::default();
    assert_eq!(unsafe { aniso_trajectory_audit(traj, 0.0, &mut audit) }, AnisoStatus::Ok);
    assert!(audit.passed);
    assert!(audit.cumulative_budget <= audit.global_budget_bound);
    unsafe {
        aniso_trajectory_free(traj);
        aniso_config_free(cfg);
    }
}

#[test]
fn blow_up_returns_the_partial_trajectory() {
    let cfg = parse(&CONFIG.replace("cells = 32", "cells = 128").replace("t_end = 0.2", "t_end = 2\ncfl = 2.0"));
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { aniso_run(cfg, &mut traj) }, AnisoStatus::BlowUp);
    assert!(last_error().contains("blow-up"));
    assert!(!traj.is_null());
    let mut rows = 0usize;
    unsafe {
        aniso_trajectory_row_count(traj, &mut rows);
        aniso_trajectory_free(traj);
        aniso_config_free(cfg);
    }
    assert!(rows >= 1);
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/aniso.h")).unwrap();
    let source = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .filter(|name| name.starts_with("aniso_"))
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct AnisoConfig AnisoConfig;", "ANISO_STATUS_OK = 0", "ANISO_VERDICT_FAIL = 3"] {
        assert!(header.contains(ty), "{ty}");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libaniso_ffi.a");
    lib.is_file().then_some(lib)
}

fn has_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn c_program_links_against_the_static_library() {
    let (Some(lib), true) = (static_lib(), has_cc()) else {
        eprintln!("skipped: no C compiler or static library");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let dir = crate_dir();
    let compile = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(compile.status.success(), "{}", String::from_utf8_lossy(&compile.stderr));
    let out = Command::new(Path::new(&exe)).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("cells=32"));
}

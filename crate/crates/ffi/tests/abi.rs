use std::f64::consts::PI;
use std::ffi::{c_char, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use minhom_ffi::*;

fn circle_xy(n: usize, r: f64) -> Vec<f64> {
    (0..n)
        .flat_map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let len = unsafe { mh_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf.iter().take(len.min(255)).map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn make_curve(xy: &[f64]) -> *mut MhCurve {
    let mut c = ptr::null_mut();
    let s = unsafe { mh_curve_from_points(xy.as_ptr(), xy.len() / 2, &mut c) };
    assert_eq!(s, MhStatus::Ok);
    c
}

#[test]
fn winding_queries() {
    let c = make_curve(&circle_xy(128, 1.0));
    let mut w = 0i64;
    assert_eq!(unsafe { mh_winding_number(c, 0.1, -0.2, &mut w) }, MhStatus::Ok);
    assert_eq!(w, 1);
    assert_eq!(unsafe { mh_winding_number(c, 3.0, 0.0, &mut w) }, MhStatus::Ok);
    assert_eq!(w, 0);
    let (mut v, mut e) = (0.0, 0.0);
    assert_eq!(unsafe { mh_winding_area(c, 256, &mut v, &mut e) }, MhStatus::Ok);
    let polygon = 0.5 * 128.0 * (2.0 * PI / 128.0).sin();
    assert!((v - polygon).abs() <= e, "{v} vs {polygon} +- {e}");
    assert_eq!(unsafe { mh_winding_area(c, 8, &mut v, &mut e) }, MhStatus::Domain);
    unsafe { mh_curve_free(c) };
}

#[test]
fn invalid_curve_reports_index() {
    let xy = [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
    let mut c = ptr::null_mut();
    let s = unsafe { mh_curve_from_points(xy.as_ptr(), 4, &mut c) };
    assert_eq!(s, MhStatus::InvalidCurve);
    assert!(c.is_null());
    assert!(last_error().contains("sample 1"), "{}", last_error());
}

#[test]
fn null_arguments() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { mh_curve_from_points(ptr::null(), 3, &mut c) }, MhStatus::NullPointer);
    let mut w = 0;
    assert_eq!(unsafe { mh_winding_number(ptr::null(), 0.0, 0.0, &mut w) }, MhStatus::NullPointer);
    assert!(unsafe { mh_solution_area0(ptr::null()) }.is_nan());
    assert_eq!(unsafe { mh_solution_passed(ptr::null()) }, 0);
    unsafe {
        mh_curve_free(ptr::null_mut());
        mh_solution_free(ptr::null_mut());
    }
    let len = unsafe { mh_last_error(ptr::null_mut(), 0) };
    assert!(len > 0);
}

#[test]
fn solve_circle_and_sample_frames() {
    let xy = circle_xy(64, 1.0);
    let c = make_curve(&xy);
    let cfg = CString::new(r#"{"rings": 12, "boundary_count": 48, "samples": 64, "resolution": 128, "swept_time_steps": 65, "swept_samples": 1024}"#).unwrap();
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { mh_solve(c, cfg.as_ptr(), &mut sol) }, MhStatus::Ok, "{}", last_error());
    let a0 = unsafe { mh_solution_area0(sol) };
    assert!((a0 - PI).abs() < 0.02 * PI, "area0 {a0}");
    assert!(unsafe { mh_solution_planarity(sol) } > 0.0);
    assert!(unsafe { mh_solution_swept_area(sol) } > 0.0);

    let mut out = vec![f64::NAN; 128];
    assert_eq!(unsafe { mh_solution_frame(sol, 1.0, 64, out.as_mut_ptr()) }, MhStatus::Ok);
    for (p, q) in out.chunks(2).zip(xy.chunks(2)) {
        assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
    }
    assert_eq!(unsafe { mh_solution_frame(sol, 0.0, 64, out.as_mut_ptr()) }, MhStatus::Ok);
    assert!(out.chunks(2).all(|p| p == &out[..2]));
    assert_eq!(unsafe { mh_solution_frame(sol, 1.5, 64, out.as_mut_ptr()) }, MhStatus::Domain);
    assert!(last_error().starts_with("domain"));
    unsafe {
        mh_solution_free(sol);
        mh_curve_free(c);
    }
}

#[test]
fn bad_config_is_rejected() {
    let c = make_curve(&circle_xy(32, 1.0));
    let cfg = CString::new(r#"{"boundary_count": 50}"#).unwrap();
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { mh_solve(c, cfg.as_ptr(), &mut sol) }, MhStatus::Config);
    let cfg = CString::new(r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(unsafe { mh_solve(c, cfg.as_ptr(), &mut sol) }, MhStatus::Config);
    assert!(sol.is_null());
    unsafe { mh_curve_free(c) };
}

#[test]
fn header_declares_every_export() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/minhom.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.strip_prefix("pub unsafe extern \"C\" fn "))
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let Ok(probe) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(probe.status.success());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"minhom.h\"\n\
         int main(void) {\n\
           MhCurve *c = 0; double xy[6] = {0, 0, 1, 0, 0, 1};\n\
           MhStatus s = mh_curve_from_points(xy, 3, &c);\n\
           mh_curve_free(c);\n\
           return s == MH_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

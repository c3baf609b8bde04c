use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use sqmanip_ffi::*;

fn scenario_path(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe {
        let n = sq_last_error(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n + 1];
        assert_eq!(sq_last_error(buf.as_mut_ptr(), buf.len()), n);
        CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_owned()
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sq_scenario_load(ptr::null(), &mut s), SqStatus::NullPointer);
        assert!(s.is_null());
        assert!(last_error().contains("path"));
        let path = scenario_path("minimal.toml");
        assert_eq!(sq_scenario_load(path.as_ptr(), ptr::null_mut()), SqStatus::NullPointer);
        assert_eq!(sq_run_metrics(ptr::null(), ptr::null_mut()), SqStatus::NullPointer);
        sq_scenario_free(ptr::null_mut());
        sq_run_free(ptr::null_mut());
    }
}

#[test]
fn validation_error_names_the_field() {
    let text = CString::new(
        "format_version = 1\n[world]\nmin = [-1.0, -1.0]\nmax = [1.0, 1.0]\n\
         [[obstacles]]\naxes = [0.2, 0.2]\neps = 3.0\ncenter = [0.0, 0.0]\nheight = 1.0\n\
         [start]\nconfig = [-0.8, 0.0, 0.0, 0.0, 0.0]\n[goal]\npoint = [0.8, 0.0]\n",
    )
    .unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sq_scenario_from_toml(text.as_ptr(), ptr::null(), &mut s), SqStatus::Validation);
        assert!(s.is_null());
        assert!(last_error().contains("obstacles[0]"), "{}", last_error());
    }
}

#[test]
fn truncated_error_is_nul_terminated() {
    unsafe {
        sq_scenario_load(ptr::null(), ptr::null_mut());
        let full = last_error();
        let mut buf = [1 as c_char; 5];
        assert_eq!(sq_last_error(buf.as_mut_ptr(), buf.len()), full.len());
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), &full[..4]);
    }
}

#[test]
fn plan_only_run_round_trip() {
    unsafe {
        let path = scenario_path("minimal.toml");
        let mut s = ptr::null_mut();
        assert_eq!(sq_scenario_load(path.as_ptr(), &mut s), SqStatus::Ok, "{}", last_error());
        let mut n = 0;
        assert_eq!(sq_scenario_obstacle_count(s, &mut n), SqStatus::Ok);
        assert_eq!(n, 3);

        let mut run = ptr::null_mut();
        assert_eq!(sq_run(s, 7, false, &mut run), SqStatus::InvalidArgument);
        assert_eq!(sq_run(s, SQ_MODE_SQ, false, &mut run), SqStatus::Ok, "{}", last_error());
        let mut m = SqMetrics::default();
        assert_eq!(sq_run_metrics(run, &mut m), SqStatus::Ok);
        assert!(m.min_distance > 0.0);
        assert_eq!(m.ticks, 0);
        assert!(m.h_co_min.is_infinite());

        let (mut samples, mut ticks) = (0, 1);
        assert_eq!(sq_run_counts(run, &mut samples, &mut ticks), SqStatus::Ok);
        assert_eq!((samples, ticks), (m.samples, 0));
        let mut first = SqSample::default();
        assert_eq!(sq_run_sample(run, 0, &mut first), SqStatus::Ok);
        assert_eq!(first.s, 0.0);
        let mut min_gap = f64::INFINITY;
        for k in 0..samples {
            let mut x = SqSample::default();
            assert_eq!(sq_run_sample(run, k, &mut x), SqStatus::Ok);
            min_gap = min_gap.min(x.gap);
        }
        assert_eq!(min_gap, m.min_distance);
        assert_eq!(sq_run_sample(run, samples, &mut first), SqStatus::OutOfRange);
        let mut t = SqTick::default();
        assert_eq!(sq_run_tick(run, 0, &mut t), SqStatus::OutOfRange);

        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(sq_run_emit(run, d.as_ptr()), SqStatus::Ok, "{}", last_error());
        assert!(dir.path().join("trajectory.csv").exists());
        assert!(dir.path().join("metrics.toml").exists());
        assert!(!dir.path().join("telemetry.csv").exists());

        sq_run_free(run);
        sq_scenario_free(s);
    }
}

#[test]
fn closest_gap_of_two_circles() {
    let a = SqShape { a1: 0.5, a2: 0.5, eps: 1.0, x: 0.0, y: 0.0, angle: 0.0 };
    let b = SqShape { a1: 0.25, a2: 0.25, eps: 1.0, x: 2.0, y: 0.0, angle: 0.3 };
    let mut g = SqGap::default();
    unsafe {
        assert_eq!(sq_closest_gap(&a, &b, &mut g), SqStatus::Ok);
    }
    assert!((g.gap - 1.25).abs() < 1e-8, "{}", g.gap);
    assert!((g.point_a[0] - 0.5).abs() < 1e-6 && (g.point_b[0] - 1.75).abs() < 1e-6);
    assert!(g.normal_angle.abs() < 1e-6);

    let bad = SqShape { eps: 0.0, ..a };
    unsafe {
        assert_eq!(sq_closest_gap(&bad, &b, &mut g), SqStatus::InvalidArgument);
    }
}

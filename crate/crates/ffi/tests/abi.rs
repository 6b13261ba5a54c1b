use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cdyn_ffi::*;

fn scenario_path(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(format!("{name}.json"));
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        cdyn_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn micro_run_through_handles() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(cdyn_scenario_load(scenario_path("leaders_k1").as_ptr(), &mut sc), CdynStatus::Ok);
        let (mut agents, mut horizon) = (0usize, 0.0f64);
        assert_eq!(cdyn_scenario_info(sc, &mut agents, &mut horizon, ptr::null_mut()), CdynStatus::Ok);
        assert_eq!((agents, horizon), (20, 5.0));

        let mut t = ptr::null_mut();
        assert_eq!(cdyn_simulate_micro(sc, 10, 11, &mut t), CdynStatus::Ok);
        let (mut samples, mut n, mut dim) = (0, 0, 0);
        assert_eq!(cdyn_trajectory_shape(t, &mut samples, &mut n, &mut dim), CdynStatus::Ok);
        assert_eq!((samples, n, dim), (11, 10, 1));

        let mut times = vec![0.0; samples];
        assert_eq!(cdyn_trajectory_times(t, times.as_mut_ptr(), times.len()), CdynStatus::Ok);
        assert_eq!((times[0], times[10]), (0.0, 5.0));
        let mut m = vec![0.0; n];
        assert_eq!(cdyn_trajectory_weights(t, 10, m.as_mut_ptr(), m.len()), CdynStatus::Ok);
        assert!((m.iter().sum::<f64>() - 10.0).abs() < 1e-9);

        let mut short = vec![0.0; n - 1];
        assert_eq!(
            cdyn_trajectory_positions(t, 0, short.as_mut_ptr(), short.len()),
            CdynStatus::BufferTooSmall
        );
        assert!(last_error().contains("needed"));
        assert_eq!(cdyn_trajectory_positions(t, 11, m.as_mut_ptr(), m.len()), CdynStatus::InvalidInput);

        cdyn_trajectory_free(t);
        cdyn_scenario_free(sc);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut sc = ptr::null_mut();
        let missing = CString::new("/nonexistent/scenario.json").unwrap();
        assert_eq!(cdyn_scenario_load(missing.as_ptr(), &mut sc), CdynStatus::Config);
        assert!(sc.is_null());
        assert!(cdyn_last_error(ptr::null_mut(), 0) > 1);

        let bad = CString::new("{\"name\": 1}").unwrap();
        assert_eq!(cdyn_scenario_from_json(bad.as_ptr(), &mut sc), CdynStatus::Config);
        assert_eq!(cdyn_scenario_load(ptr::null(), &mut sc), CdynStatus::NullPointer);
        assert_eq!(cdyn_scenario_info(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), CdynStatus::NullPointer);

        assert_eq!(cdyn_scenario_load(scenario_path("leaders_k2").as_ptr(), &mut sc), CdynStatus::Ok);
        assert_eq!(cdyn_last_error(ptr::null_mut(), 0), 0);
        let mut t = ptr::null_mut();
        // 15 agents cannot be split into leader groups.
        assert_eq!(cdyn_simulate_micro(sc, 15, 11, &mut t), CdynStatus::Config);
        assert_eq!(cdyn_simulate_micro(sc, 0, 1, &mut t), CdynStatus::InvalidInput);
        cdyn_scenario_free(sc);
        cdyn_scenario_free(ptr::null_mut());
    }
}

#[test]
fn sweep_and_distance() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(cdyn_scenario_load(scenario_path("leaders_k1").as_ptr(), &mut sc), CdynStatus::Ok);
        let list = [10usize, 20];
        let mut s = ptr::null_mut();
        assert_eq!(cdyn_sweep_run(sc, list.as_ptr(), list.len(), &mut s), CdynStatus::Ok);
        let mut rows = 0;
        assert_eq!(cdyn_sweep_summary(s, &mut rows, ptr::null_mut()), CdynStatus::Ok);
        assert_eq!(rows, 2);
        let mut row = CdynSweepRow::default();
        assert_eq!(cdyn_sweep_row(s, 1, &mut row), CdynStatus::Ok);
        assert_eq!(row.n, 20);
        assert!(row.x_error > 0.0 && row.x_projection > 0.0);
        assert_eq!(cdyn_sweep_row(s, 2, &mut row), CdynStatus::InvalidInput);
        cdyn_sweep_free(s);
        cdyn_scenario_free(sc);

        let (a, b, w) = ([0.0], [1.0], [1.0]);
        let mut d = -1.0;
        assert_eq!(cdyn_wasserstein1(1, a.as_ptr(), w.as_ptr(), 1, b.as_ptr(), w.as_ptr(), &mut d), CdynStatus::Ok);
        assert_eq!(d, 1.0);
        let half = [0.5];
        assert_eq!(
            cdyn_wasserstein1(1, a.as_ptr(), w.as_ptr(), 1, b.as_ptr(), half.as_ptr(), &mut d),
            CdynStatus::Refused
        );
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(cdyn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

// Compiles a C program against the generated header and the shared library.
#[test]
fn c_program_links_against_header() {
    let target = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target.join("libcdyn_ffi.so");
    let cc = Command::new("cc").arg("--version").output();
    if cc.is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or no shared library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "cdyn.h"

int main(int argc, char **argv) {
    CdynScenario *sc = NULL;
    if (cdyn_scenario_load(argv[1], &sc) != CDYN_STATUS_OK) return 1;
    CdynTrajectory *t = NULL;
    if (cdyn_simulate_micro(sc, 0, 6, &t) != CDYN_STATUS_OK) return 2;
    size_t samples = 0, agents = 0;
    cdyn_trajectory_shape(t, &samples, &agents, NULL);
    double x[64];
    if (cdyn_trajectory_positions(t, samples - 1, x, 64) != CDYN_STATUS_OK) return 3;
    if (cdyn_scenario_load(NULL, &sc) != CDYN_STATUS_NULL_POINTER) return 4;
    char msg[128];
    cdyn_last_error(msg, sizeof msg);
    printf("%zu %zu %s\n", samples, agents, msg);
    cdyn_trajectory_free(t);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-std=c99")
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&target)
        .arg("-lcdyn_ffi")
        .arg(format!("-Wl,-rpath,{}", target.display()))
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).arg(scenario_path("leaders_k1").to_str().unwrap()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "6 20 path is null\n");
}

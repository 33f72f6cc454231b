use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qortho_ffi::*;

fn params(q: f64) -> QorthoParams {
    QorthoParams { q, ..Default::default() }
}

#[test]
fn family_eval_and_errors() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(qortho_family_new(QorthoFamilyKind::QHermite, params(0.5), &mut h), QorthoStatus::Ok);
        let mut v = 0.0;
        assert_eq!(qortho_family_eval(h, 3, 1.0, &mut v), QorthoStatus::Ok);
        assert_eq!(v, -1.5);
        let mut buf = [0.0; 4];
        assert_eq!(qortho_family_eval_all(h, 3, 1.0, buf.as_mut_ptr(), 4), QorthoStatus::Ok);
        assert_eq!(buf, [1.0, 1.0, 0.0, -1.5]);
        assert_eq!(qortho_family_eval_all(h, 3, 1.0, buf.as_mut_ptr(), 3), QorthoStatus::InvalidArgument);
        assert_eq!(qortho_family_eval(h, 3, 1.0, ptr::null_mut()), QorthoStatus::NullPointer);
        qortho_family_free(h);
        qortho_family_free(ptr::null_mut());

        assert_eq!(qortho_family_new(QorthoFamilyKind::QHermite, params(-1.0), &mut h), QorthoStatus::OutOfRange);
        let msg = CStr::from_ptr(qortho_last_error()).to_string_lossy();
        assert!(msg.contains("q"), "{msg}");
    }
}

#[test]
fn density_and_expansion_agree() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(qortho_density_new(QorthoDensityKind::N, params(0.6), &mut d), QorthoStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(qortho_expansion_new(QorthoExpansionKind::NOverU, params(0.6), 0.0, 0, &mut e), QorthoStatus::Ok);
        for x in [-1.5, 0.0, 0.7, 2.2] {
            let (mut a, mut b, mut k) = (0.0, 0.0, 0usize);
            assert_eq!(qortho_density_eval(d, x, &mut a), QorthoStatus::Ok);
            assert_eq!(qortho_expansion_eval(e, x, &mut b, &mut k), QorthoStatus::Ok);
            assert!((a - b).abs() < 1e-12 && k > 0, "{x}: {a} vs {b}");
        }
        qortho_expansion_free(e);
        qortho_density_free(d);
    }
}

#[test]
fn sampler_is_deterministic() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(qortho_density_new(QorthoDensityKind::N, params(0.5), &mut d), QorthoStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(qortho_sampler_new(d, 9, &mut s), QorthoStatus::Ok);
        let mut m = 0.0;
        assert_eq!(qortho_sampler_envelope(s, &mut m), QorthoStatus::Ok);
        assert!((m - 3.2435).abs() < 1e-4);
        let (mut a, mut b) = (vec![0.0; 500], vec![0.0; 500]);
        assert_eq!(qortho_sampler_draw(s, 500, a.as_mut_ptr()), QorthoStatus::Ok);
        assert_eq!(qortho_sampler_draw(s, 500, b.as_mut_ptr()), QorthoStatus::Ok);
        assert_eq!(a, b);
        let mut rate = 0.0;
        assert_eq!(qortho_sampler_acceptance_rate(s, &mut rate), QorthoStatus::Ok);
        assert!(rate > 0.0 && rate <= 1.0);
        qortho_sampler_free(s);
        qortho_density_free(d);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/qortho.h")).unwrap();
    for name in [
        "qortho_family_new",
        "qortho_family_eval_all",
        "qortho_density_eval",
        "qortho_expansion_new",
        "qortho_connection_row",
        "qortho_sampler_draw",
        "qortho_last_error",
        "typedef struct QorthoFamily QorthoFamily",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

/// Builds tests/c/smoke.c against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // the test binary sits in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    // cargo test links the rlib only; refresh the static archive for this profile
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut build = Command::new(cargo);
    build.args(["build", "-p", "qortho-ffi", "--lib"]).current_dir(&manifest);
    if profile_dir.ends_with("release") {
        build.arg("--release");
    }
    assert!(build.status().expect("run cargo build").success());
    let lib = profile_dir.join("libqortho_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let out = profile_dir.join("qortho_c_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("run cc");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}

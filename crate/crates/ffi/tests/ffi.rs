use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use wilink_ffi::*;

const SMALL: &str = "train = 12\ntest = 80\nsample_duration = 1.5\n";

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn cpath(p: &Path) -> CString {
    cstr(p.to_str().unwrap())
}

fn last_error() -> String {
    let p = wl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    wl_string_free(p);
    s
}

#[test]
fn null_and_invalid_arguments_are_reported() {
    unsafe {
        assert_eq!(
            wl_dataset_open(ptr::null(), ptr::null_mut()),
            WlStatus::NullPointer
        );
        let mut ds = ptr::null_mut();
        assert_eq!(wl_dataset_open(ptr::null(), &mut ds), WlStatus::NullPointer);
        assert!(last_error().contains("dir"));
        assert_eq!(
            wl_dataset_open(cstr("/nonexistent/wl").as_ptr(), &mut ds),
            WlStatus::Data
        );
        assert!(ds.is_null());

        let mut m = ptr::null_mut();
        assert_eq!(wl_model_new(9, 1, 4, 0, &mut m), WlStatus::InvalidArgument);
        assert_eq!(wl_model_new(3, 7, 4, 0, &mut m), WlStatus::InvalidArgument);
        assert_eq!(wl_model_new(3, 1, 0, 0, &mut m), WlStatus::InvalidArgument);
        assert!(m.is_null());
        assert_eq!(wl_model_new(3, 1, 4, 0, &mut m), WlStatus::Ok);
        assert!(wl_last_error().is_null());
        let mut case = 0;
        assert_eq!(wl_model_case(m, &mut case), WlStatus::Ok);
        assert_eq!(case, 3);
        assert_eq!(wl_model_case(ptr::null(), &mut case), WlStatus::NullPointer);
        wl_model_free(m);
        wl_model_free(ptr::null_mut());
        wl_dataset_free(ptr::null_mut());
        wl_string_free(ptr::null_mut());

        let tmp = tempfile::tempdir().unwrap();
        assert_eq!(
            wl_generate(
                cstr("colour = blue").as_ptr(),
                cpath(tmp.path()).as_ptr(),
                1
            ),
            WlStatus::InvalidArgument
        );
        assert!(last_error().contains("colour"));
    }
    assert_eq!(wl_num_classes(), 5);
    assert_eq!(
        unsafe { CStr::from_ptr(wl_version()) }.to_str().unwrap(),
        env!("CARGO_PKG_VERSION")
    );
}

#[test]
fn generate_train_evaluate_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    unsafe {
        assert_eq!(
            wl_generate(cstr(SMALL).as_ptr(), cpath(&data).as_ptr(), 3),
            WlStatus::Ok,
            "{}",
            last_error()
        );
        let mut ds = ptr::null_mut();
        assert_eq!(
            wl_dataset_open(cpath(&data).as_ptr(), &mut ds),
            WlStatus::Ok
        );
        let (mut train, mut test, mut links) = (0, 0, 0);
        assert_eq!(
            wl_dataset_info(ds, &mut train, &mut test, &mut links),
            WlStatus::Ok
        );
        assert_eq!((train, test, links), (12, 80, 4));
        let mut hash = ptr::null_mut();
        assert_eq!(wl_dataset_hash(ds, &mut hash), WlStatus::Ok);
        assert_eq!(
            take_string(hash),
            wilink::harness::dataset_hash(&data).unwrap()
        );

        let mut m = ptr::null_mut();
        assert_eq!(
            wl_train(ds, 2, 1, 1, 0, &mut m),
            WlStatus::Ok,
            "{}",
            last_error()
        );
        let mut json = ptr::null_mut();
        assert_eq!(
            wl_evaluate(m, ds, 0, &mut json),
            WlStatus::Ok,
            "{}",
            last_error()
        );
        let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
        assert_eq!(report["case"], 2);
        assert_eq!(report["metrics"]["mean_links"], 2.0);

        let mut class = 99;
        let mut probs = [0.0f64; 5];
        let mut chosen = [9u8; 4];
        assert_eq!(
            wl_predict(
                m,
                ds,
                0,
                0,
                &mut class,
                probs.as_mut_ptr(),
                chosen.as_mut_ptr()
            ),
            WlStatus::Ok
        );
        assert!(class < 5);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert_eq!(chosen.iter().map(|&b| b as usize).sum::<usize>(), 2);
        assert_eq!(
            wl_predict(m, ds, 80, 0, &mut class, ptr::null_mut(), ptr::null_mut()),
            WlStatus::InvalidArgument
        );

        let ckpt = tmp.path().join("ckpt");
        let mut h1 = ptr::null_mut();
        assert_eq!(
            wl_model_save(m, cpath(&ckpt).as_ptr(), &mut h1),
            WlStatus::Ok
        );
        let h1 = take_string(h1);
        let mut loaded = ptr::null_mut();
        assert_eq!(
            wl_model_load(cpath(&ckpt).as_ptr(), &mut loaded),
            WlStatus::Ok
        );
        let mut h2 = ptr::null_mut();
        assert_eq!(
            wl_model_save(loaded, cpath(&tmp.path().join("again")).as_ptr(), &mut h2),
            WlStatus::Ok
        );
        assert_eq!(h1, take_string(h2));
        wl_model_free(loaded);
        wl_model_free(m);
        wl_dataset_free(ds);
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libwilink_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("probe.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "wilink.h"
int main(void) {
    WlModel *m = NULL;
    if (wl_model_new(9, 1, 4, 0, &m) != WL_STATUS_INVALID_ARGUMENT || m != NULL) return 10;
    if (wl_last_error() == NULL) return 11;
    if (wl_model_new(4, 1, 4, 0, &m) != WL_STATUS_OK) return 12;
    uint32_t c = 0;
    if (wl_model_case(m, &c) != WL_STATUS_OK || c != 4) return 13;
    wl_model_free(m);
    if (wl_dataset_open(NULL, NULL) != WL_STATUS_NULL_POINTER) return 14;
    printf("%s %zu\n", wl_version(), wl_num_classes());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("probe");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&run.stdout).trim(),
        format!("{} 5", env!("CARGO_PKG_VERSION"))
    );
}

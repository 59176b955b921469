use std::ffi::{CStr, CString};
use std::ptr;

use reuselab_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(reuselab_last_error()) }.to_str().unwrap().to_string()
}

fn generate(kind: &str, n: usize, seed: u64) -> *mut ReuselabDataset {
    let mut d = ptr::null_mut();
    let status = unsafe { reuselab_dataset_generate(c(kind).as_ptr(), n, 0.01, seed, &mut d) };
    assert_eq!(status, ReuselabStatus::Ok, "{}", last_error());
    d
}

#[test]
fn dataset_round_trip_through_arrays() {
    let d = generate("circle", 50, 3);
    unsafe {
        assert_eq!(reuselab_dataset_len(d), 50);
        assert_eq!(reuselab_dataset_dim(d), 2);
        let mut features = vec![0.0; 100];
        let mut labels = vec![0i8; 50];
        assert_eq!(reuselab_dataset_copy(d, features.as_mut_ptr(), 100, labels.as_mut_ptr(), 50), ReuselabStatus::Ok);
        assert!(labels.iter().all(|&l| l == 1 || l == -1));
        assert_eq!(reuselab_dataset_copy(d, features.as_mut_ptr(), 99, labels.as_mut_ptr(), 50), ReuselabStatus::BufferTooSmall);

        let mut e = ptr::null_mut();
        assert_eq!(reuselab_dataset_from_arrays(features.as_ptr(), labels.as_ptr(), 50, 2, &mut e), ReuselabStatus::Ok);
        let mut again = vec![0.0; 100];
        let mut again_labels = vec![0i8; 50];
        reuselab_dataset_copy(e, again.as_mut_ptr(), 100, again_labels.as_mut_ptr(), 50);
        assert_eq!(features, again);
        assert_eq!(labels, again_labels);
        reuselab_dataset_free(d);
        reuselab_dataset_free(e);
    }
}

#[test]
fn select_fit_score_and_serialise() {
    let d = generate("uniform-line", 400, 1);
    unsafe {
        let mut sel = ptr::null_mut();
        assert_eq!(reuselab_select_iwal(d, 0.1, 7, 1, &mut sel), ReuselabStatus::Ok);
        let n = reuselab_selection_len(sel);
        assert!(n > 0 && n < 400);
        let mut idx = vec![0usize; n];
        let mut w = vec![0.0; n];
        assert_eq!(reuselab_selection_copy(sel, idx.as_mut_ptr(), w.as_mut_ptr(), n), ReuselabStatus::Ok);
        assert!(idx.windows(2).all(|p| p[0] < p[1]));
        assert!(w.iter().all(|&w| w >= 1.0));

        let mut model = ptr::null_mut();
        assert_eq!(reuselab_model_fit(c("least-squares").as_ptr(), d, sel, &mut model), ReuselabStatus::Ok, "{}", last_error());
        let mut err = -1.0;
        assert_eq!(reuselab_model_error(model, d, &mut err), ReuselabStatus::Ok);
        assert!((0.0..0.2).contains(&err), "{err}");

        let mut text = ptr::null_mut();
        assert_eq!(reuselab_model_to_text(model, &mut text), ReuselabStatus::Ok);
        let mut copy = ptr::null_mut();
        assert_eq!(reuselab_model_from_text(text, &mut copy), ReuselabStatus::Ok);
        for x in [-0.7, -0.01, 0.0, 0.3] {
            let (mut a, mut b) = (0.0, 0.0);
            reuselab_model_score(model, &x, 1, &mut a);
            reuselab_model_score(copy, &x, 1, &mut b);
            assert_eq!(a, b);
        }
        reuselab_string_free(text);
        reuselab_model_free(copy);
        reuselab_model_free(model);
        reuselab_selection_free(sel);
        reuselab_dataset_free(d);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(reuselab_dataset_generate(c("spiral").as_ptr(), 10, 0.1, 0, &mut d), ReuselabStatus::InvalidArgument);
        assert!(last_error().contains("spiral"));
        assert!(d.is_null());
        assert_eq!(reuselab_dataset_generate(ptr::null(), 10, 0.1, 0, &mut d), ReuselabStatus::NullPointer);

        let d = generate("uniform-line", 20, 0);
        let mut model = ptr::null_mut();
        assert_eq!(reuselab_model_fit(c("lda").as_ptr(), d, ptr::null(), &mut model), ReuselabStatus::Ok);
        assert_eq!(last_error(), "");
        let mut score = 0.0;
        let x = [0.1, 0.2];
        assert_eq!(reuselab_model_score(model, x.as_ptr(), 2, &mut score), ReuselabStatus::DimensionMismatch);

        // A single-class sample cannot train a discriminant.
        let features = [0.1, 0.2, 0.3];
        let labels = [1i8, 1, 1];
        let mut one = ptr::null_mut();
        reuselab_dataset_from_arrays(features.as_ptr(), labels.as_ptr(), 3, 1, &mut one);
        let mut m2 = ptr::null_mut();
        assert_eq!(reuselab_model_fit(c("qda").as_ptr(), one, ptr::null(), &mut m2), ReuselabStatus::MissingClass);
        let bad = [1i8, 0, 1];
        let mut bad_ds = ptr::null_mut();
        assert_eq!(reuselab_dataset_from_arrays(features.as_ptr(), bad.as_ptr(), 3, 1, &mut bad_ds), ReuselabStatus::InvalidArgument);

        let mut parsed = ptr::null_mut();
        assert_eq!(reuselab_model_from_text(c("not a model").as_ptr(), &mut parsed), ReuselabStatus::Parse);
        let missing = c("/nonexistent/file.csv");
        let mut loaded = ptr::null_mut();
        assert_eq!(
            reuselab_dataset_load_csv(missing.as_ptr(), c("class").as_ptr(), c("yes").as_ptr(), ptr::null(), &mut loaded),
            ReuselabStatus::Io
        );
        reuselab_model_free(model);
        reuselab_dataset_free(one);
        reuselab_dataset_free(d);
        reuselab_dataset_free(ptr::null_mut());
    }
}

#[test]
fn loads_car_csv() {
    let path = c(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/car.csv"));
    let mut d = ptr::null_mut();
    unsafe {
        let status = reuselab_dataset_load_csv(path.as_ptr(), c("class").as_ptr(), c("acc,good,vgood").as_ptr(), ptr::null(), &mut d);
        assert_eq!(status, ReuselabStatus::Ok, "{}", last_error());
        assert_eq!(reuselab_dataset_len(d), 1728);
        reuselab_dataset_free(d);
    }
}

#[test]
fn probability_and_version() {
    let p = reuselab_selection_probability(1.0, 101, 0.01);
    assert!((p - 2.0 * 0.01 * 101f64.ln() / 100.0).abs() < 1e-15);
    let v = unsafe { CStr::from_ptr(reuselab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn run_config_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "test_prop = 0.5\nrepetitions = 2\nstrategies = [\"random\"]\nconsumers = [\"lda\"]\nn_grid = [20]\n[dataset]\nkind = \"uniform-line\"\nn = 100\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = unsafe { reuselab_run_config(c(cfg.to_str().unwrap()).as_ptr(), c(out.to_str().unwrap()).as_ptr(), 1) };
    assert_eq!(status, ReuselabStatus::Ok, "{}", last_error());
    assert!(out.join("curve.csv").exists());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/reuselab.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("REUSELAB_STATUS_BUFFER_TOO_SMALL"));
    assert!(header.contains("typedef struct ReuselabDataset ReuselabDataset;"));
}

use std::ffi::{CStr, CString};
use std::ptr;

use miqa_pns_ffi::*;

fn last_error() -> String {
    let p = pns_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn dataset(n: usize, seed: u64) -> *mut PnsDataset {
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { pns_dataset_generate(n, 16, 16, seed, &mut ds) }, PnsStatus::Ok);
    ds
}

fn quick_options() -> PnsTrainOptions {
    PnsTrainOptions {
        lr: 1e-3,
        max_epochs: 3,
        seed: 5,
        ..pns_train_options_default()
    }
}

fn path(dir: &tempfile::TempDir, name: &str) -> CString {
    CString::new(dir.path().join(name).to_str().unwrap()).unwrap()
}

#[test]
fn dataset_round_trips_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(40, 2);
    assert_eq!(unsafe { pns_dataset_len(ds) }, 40);
    let file = path(&tmp, "d.pnsa");
    assert_eq!(unsafe { pns_dataset_save(ds, file.as_ptr()) }, PnsStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { pns_dataset_load(file.as_ptr(), &mut back) }, PnsStatus::Ok);
    assert_eq!(unsafe { pns_dataset_len(back) }, 40);
    let other = path(&tmp, "e.pnsa");
    assert_eq!(unsafe { pns_dataset_save(back, other.as_ptr()) }, PnsStatus::Ok);
    assert_eq!(std::fs::read(file.to_str().unwrap()).unwrap(), std::fs::read(other.to_str().unwrap()).unwrap());
    unsafe {
        pns_dataset_free(ds);
        pns_dataset_free(back);
    }
}

#[test]
fn train_evaluate_predict_and_inference_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(150, 3);
    let opts = quick_options();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { pns_train(ds, &opts, &mut model) }, PnsStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { pns_model_has_complement(model) }, 1);
    assert_eq!(unsafe { pns_model_input_dim(model) }, 256);

    let mut full = PnsMetrics { precision: 0.0, recall: 0.0, f1: 0.0, deficient_accuracy: 0.0, pns_proxy: 0.0, mono_violation: 0.0, has_pns: 0, n_samples: 0 };
    assert_eq!(unsafe { pns_evaluate(model, ds, PNS_SCENARIO_IID, opts.seed, &mut full) }, PnsStatus::Ok);
    assert_eq!(full.has_pns, 1);
    assert!(full.pns_proxy.is_finite() && (0.0..=1.0).contains(&full.mono_violation));
    assert!(full.n_samples > 0 && (0.0..=1.0).contains(&full.f1));

    let inputs = vec![0.5; 3 * 256];
    let mut logits = [0.0; 6];
    assert_eq!(unsafe { pns_model_predict(model, inputs.as_ptr(), 3, 256, logits.as_mut_ptr()) }, PnsStatus::Ok);
    assert!(logits.iter().all(|v| v.is_finite()));
    assert_eq!(logits[0..2], logits[2..4]);

    let file = path(&tmp, "m.pnsm");
    assert_eq!(unsafe { pns_model_save(model, file.as_ptr(), 1) }, PnsStatus::Ok);
    let mut lean = ptr::null_mut();
    assert_eq!(unsafe { pns_model_load(file.as_ptr(), &mut lean) }, PnsStatus::Ok);
    assert_eq!(unsafe { pns_model_has_complement(lean) }, 0);
    let mut m = full;
    assert_eq!(unsafe { pns_evaluate(lean, ds, PNS_SCENARIO_IID, opts.seed, &mut m) }, PnsStatus::Ok);
    assert_eq!(m.has_pns, 0);
    assert!(m.pns_proxy.is_nan() && m.mono_violation.is_nan());
    assert_eq!((m.f1, m.n_samples), (full.f1, full.n_samples));

    let mut lean_logits = [0.0; 6];
    assert_eq!(unsafe { pns_model_predict(lean, inputs.as_ptr(), 3, 256, lean_logits.as_mut_ptr()) }, PnsStatus::Ok);
    assert_eq!(lean_logits, logits);

    unsafe {
        pns_model_free(model);
        pns_model_free(lean);
        pns_dataset_free(ds);
    }
}

#[test]
fn training_is_reproducible_across_calls() {
    let ds = dataset(120, 4);
    let opts = PnsTrainOptions { max_epochs: 2, ..quick_options() };
    let inputs = vec![0.25; 256];
    let run = || {
        let mut model = ptr::null_mut();
        assert_eq!(unsafe { pns_train(ds, &opts, &mut model) }, PnsStatus::Ok);
        let mut z = [0.0; 2];
        assert_eq!(unsafe { pns_model_predict(model, inputs.as_ptr(), 1, 256, z.as_mut_ptr()) }, PnsStatus::Ok);
        unsafe { pns_model_free(model) };
        z.map(f64::to_bits)
    };
    assert_eq!(run(), run());
    unsafe { pns_dataset_free(ds) };
}

#[test]
fn invalid_arguments_report_status_and_message() {
    let ds = dataset(60, 1);
    let mut model = ptr::null_mut();

    assert_eq!(unsafe { pns_train(ptr::null(), ptr::null(), &mut model) }, PnsStatus::NullPointer);
    assert!(last_error().contains("dataset"));

    let bad_mode = PnsTrainOptions { mode: 9, ..quick_options() };
    assert_eq!(unsafe { pns_train(ds, &bad_mode, &mut model) }, PnsStatus::InvalidArgument);
    assert!(last_error().contains("mode 9"));

    let bad_scenario = PnsTrainOptions { scenario: 3, ..quick_options() };
    assert_eq!(unsafe { pns_train(ds, &bad_scenario, &mut model) }, PnsStatus::InvalidArgument);
    assert!(last_error().contains("scenario 3"));

    let exploding = PnsTrainOptions { lr: 1e300, ..quick_options() };
    assert_eq!(unsafe { pns_train(ds, &exploding, &mut model) }, PnsStatus::Numerical);
    assert!(model.is_null());

    let missing = CString::new("/nonexistent/x.pnsa").unwrap();
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { pns_dataset_load(missing.as_ptr(), &mut loaded) }, PnsStatus::Io);

    let tmp = tempfile::tempdir().unwrap();
    let junk = path(&tmp, "junk.pnsm");
    std::fs::write(junk.to_str().unwrap(), b"not a checkpoint").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pns_model_load(junk.as_ptr(), &mut m) }, PnsStatus::Format);

    assert_eq!(unsafe { pns_dataset_generate(10, 16, 16, 0, ptr::null_mut()) }, PnsStatus::NullPointer);
    assert_eq!(unsafe { pns_dataset_len(ptr::null()) }, 0);
    assert_eq!(unsafe { pns_model_has_complement(ptr::null()) }, 0);
    unsafe {
        pns_dataset_free(ptr::null_mut());
        pns_model_free(ptr::null_mut());
        pns_dataset_free(ds);
    }
}

#[test]
fn predict_checks_the_input_width() {
    let ds = dataset(100, 6);
    let mut model = ptr::null_mut();
    let opts = PnsTrainOptions { max_epochs: 1, ..quick_options() };
    assert_eq!(unsafe { pns_train(ds, &opts, &mut model) }, PnsStatus::Ok);
    let x = [0.0; 10];
    let mut z = [0.0; 2];
    assert_eq!(unsafe { pns_model_predict(model, x.as_ptr(), 1, 10, z.as_mut_ptr()) }, PnsStatus::InvalidArgument);
    assert!(last_error().contains("input_dim 10"));
    assert_eq!(unsafe { pns_model_predict(model, ptr::null(), 1, 256, z.as_mut_ptr()) }, PnsStatus::NullPointer);
    unsafe {
        pns_model_free(model);
        pns_dataset_free(ds);
    }
}

#[test]
fn pns_statistics_match_hand_values() {
    let p = [0.9, 0.6, 0.2];
    let q = [0.1, 0.6, 0.5];
    let mut est = 0.0;
    let mut mono = 0.0;
    assert_eq!(unsafe { pns_pns_estimate(p.as_ptr(), q.as_ptr(), 3, &mut est) }, PnsStatus::Ok);
    assert_eq!(unsafe { pns_monotonicity_violation(p.as_ptr(), q.as_ptr(), 3, &mut mono) }, PnsStatus::Ok);
    assert!((est - (1.7 - 1.2) / 3.0).abs() < 1e-12);
    assert!((mono - (0.1 * 0.1 + 0.4 * 0.6 + 0.8 * 0.5) / 3.0).abs() < 1e-12);

    let outside = [1.5];
    assert_eq!(unsafe { pns_pns_estimate(outside.as_ptr(), q.as_ptr(), 1, &mut est) }, PnsStatus::InvalidArgument);
    assert_eq!(unsafe { pns_pns_estimate(ptr::null(), q.as_ptr(), 1, &mut est) }, PnsStatus::NullPointer);
}

#[test]
fn errors_are_per_thread() {
    let mut out = 0.0;
    assert_eq!(unsafe { pns_pns_estimate(ptr::null(), ptr::null(), 1, &mut out) }, PnsStatus::NullPointer);
    let other = std::thread::spawn(|| pns_last_error().is_null()).join().unwrap();
    assert!(other);
}

// Compiles and runs a C client against the generated header and static
// library. Skipped when no C compiler is on PATH.
#[test]
fn c_client_links_and_runs() {
    let Some(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libmiqa_pns_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = std::process::Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which_cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(str::to_owned)
}

use std::ffi::{CStr, CString};
use std::ptr;

use fedcgau::nn::{save_checkpoint, ClassifierModel, ModelSpec, Task, UnitKind};
use fedcgau_ffi::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn last_error() -> String {
    let p = fc_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn blobs() -> *mut FcDataset {
    let mut ds = ptr::null_mut();
    let status = unsafe { fc_synth_blobs(3, 2, 30, 5, 8.0, 1.0, 3, &mut ds) };
    assert_eq!(status, FcStatus::Ok);
    ds
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(fc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn dataset_round_trips_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = blobs();
    for name in ["d.emb1", "d.csv"] {
        let path = CString::new(tmp.path().join(name).to_str().unwrap()).unwrap();
        assert_eq!(unsafe { fc_dataset_write(ds, path.as_ptr()) }, FcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(unsafe { fc_dataset_read(path.as_ptr(), &mut back) }, FcStatus::Ok);
        unsafe {
            assert_eq!(fc_dataset_len(back), 180);
            assert_eq!(fc_dataset_dim(back), 5);
            assert_eq!(fc_dataset_num_classes(back), 3);
            let mut a = vec![0.0; 900];
            let mut b = vec![0.0; 900];
            assert_eq!(fc_dataset_features(ds, a.as_mut_ptr(), a.len()), FcStatus::Ok);
            assert_eq!(fc_dataset_features(back, b.as_mut_ptr(), b.len()), FcStatus::Ok);
            // EMB1 narrows to f32, CSV keeps full precision
            for (x, y) in a.iter().zip(&b) {
                let expect = if name.ends_with(".emb1") { (*x as f32) as f64 } else { *x };
                assert_eq!(*y, expect, "{name}");
            }
            fc_dataset_free(back);
        }
    }
    unsafe { fc_dataset_free(ds) };
}

#[test]
fn from_arrays_validates() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y = [0u32, 1];
    let mut ds = ptr::null_mut();
    let ok = unsafe { fc_dataset_from_arrays(x.as_ptr(), y.as_ptr(), 2, 2, 2, &mut ds) };
    assert_eq!(ok, FcStatus::Ok);
    let mut labels = [9u32; 2];
    assert_eq!(unsafe { fc_dataset_labels(ds, labels.as_mut_ptr(), 2) }, FcStatus::Ok);
    assert_eq!(labels, [0, 1]);
    unsafe { fc_dataset_free(ds) };

    let mut bad = ptr::null_mut();
    let status = unsafe { fc_dataset_from_arrays(x.as_ptr(), y.as_ptr(), 2, 2, 1, &mut bad) };
    assert_eq!(status, FcStatus::InvalidArgument);
    assert!(bad.is_null());
    assert!(last_error().contains("label"));
}

#[test]
fn errors_map_to_status_codes() {
    let missing = CString::new("/no/such/dir/x.emb1").unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { fc_dataset_read(missing.as_ptr(), &mut ds) }, FcStatus::Io);
    assert!(last_error().contains("/no/such/dir"));

    let tmp = tempfile::tempdir().unwrap();
    let junk = tmp.path().join("junk.emb1");
    std::fs::write(&junk, b"EMB2garbage").unwrap();
    let junk = CString::new(junk.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { fc_dataset_read(junk.as_ptr(), &mut ds) }, FcStatus::Parse);
    assert!(last_error().contains("byte 0"));

    assert_eq!(unsafe { fc_dataset_read(ptr::null(), &mut ds) }, FcStatus::NullPointer);
    let ok = blobs();
    let mut small = [0.0; 4];
    let status = unsafe { fc_dataset_features(ok, small.as_mut_ptr(), small.len()) };
    assert_eq!(status, FcStatus::BufferTooSmall);
    // a successful call clears the message
    assert_eq!(unsafe { fc_dataset_features(ok, ptr::null_mut(), 0) }, FcStatus::BufferTooSmall);
    let mut big = vec![0.0; 900];
    assert_eq!(unsafe { fc_dataset_features(ok, big.as_mut_ptr(), 900) }, FcStatus::Ok);
    assert!(fc_last_error().is_null());
    unsafe { fc_dataset_free(ok) };
}

#[test]
fn frechet_and_gamma() {
    let a = [0.0, 0.0, 2.0, 0.0, 1.0, 1.0];
    let b = [3.0, 4.0, 5.0, 4.0, 4.0, 5.0];
    let mut d = -1.0;
    let s = unsafe { fc_frechet_distance_sq(a.as_ptr(), 3, b.as_ptr(), 3, 2, &mut d) };
    assert_eq!(s, FcStatus::Ok);
    // equal covariances, means differ by (3, 4)
    assert!((d - 25.0).abs() < 1e-9, "{d}");
    let s = unsafe { fc_frechet_distance_sq(a.as_ptr(), 1, b.as_ptr(), 3, 2, &mut d) };
    assert_eq!(s, FcStatus::InsufficientData);

    let ds = blobs();
    let n = unsafe { fc_dataset_len(ds) };
    let mut assignment = vec![0u32; n];
    let s = unsafe { fc_simulate_clients(ds, 3, 0.0, 7, assignment.as_mut_ptr(), n) };
    assert_eq!(s, FcStatus::Ok);
    let mut gamma = 0.0;
    let mut per = [0.0; 3];
    let s = unsafe { fc_gamma(ds, assignment.as_ptr(), 3, &mut gamma, per.as_mut_ptr()) };
    assert_eq!(s, FcStatus::Ok);
    assert!((gamma - per.iter().sum::<f64>() / 3.0).abs() < 1e-12);

    let s = unsafe { fc_gamma(ds, assignment.as_ptr(), 1, &mut gamma, ptr::null_mut()) };
    assert_eq!(s, FcStatus::InvalidArgument);
    unsafe { fc_dataset_free(ds) };
}

#[test]
fn model_load_predict_save() {
    let spec = ModelSpec {
        input_dim: 3,
        hidden: vec![4],
        kind: UnitKind::Cgau,
        task: Task::Multiclass(3),
        dropout: 0.0,
        num_clients: 2,
    };
    let model = ClassifierModel::init(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.ckpt");
    save_checkpoint(&model, &path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fc_model_load(cpath.as_ptr(), &mut m) }, FcStatus::Ok);
    unsafe {
        assert_eq!(fc_model_input_dim(m), 3);
        assert_eq!(fc_model_output_dim(m), 3);
        assert_eq!(fc_model_num_clients(m), 2);
    }
    let x = [0.5, -1.0, 2.0, 0.0, 0.0, 1.0];
    let mut logits = [0.0; 6];
    let s = unsafe { fc_model_predict(m, x.as_ptr(), 2, 3, 1, logits.as_mut_ptr(), 6) };
    assert_eq!(s, FcStatus::Ok);
    let h = fedcgau::nn::ClientOneHot::new(1, 2).unwrap();
    let expect = model
        .predict(&fedcgau::linalg::Matrix::from_vec(2, 3, x.to_vec()).unwrap(), h)
        .unwrap();
    assert_eq!(&logits[..], expect.as_slice());

    let s = unsafe { fc_model_predict(m, x.as_ptr(), 2, 3, 2, logits.as_mut_ptr(), 6) };
    assert_eq!(s, FcStatus::Dimension);
    let s = unsafe { fc_model_predict(m, x.as_ptr(), 3, 2, 0, logits.as_mut_ptr(), 6) };
    assert_eq!(s, FcStatus::Dimension);

    let copy = CString::new(tmp.path().join("copy.ckpt").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { fc_model_save(m, copy.as_ptr()) }, FcStatus::Ok);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(tmp.path().join("copy.ckpt")).unwrap()
    );
    unsafe {
        fc_model_free(m);
        fc_model_free(ptr::null_mut());
        fc_dataset_free(ptr::null_mut());
    }
}

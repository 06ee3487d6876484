use std::ffi::{CStr, CString};
use std::ptr;

use hhg_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hhg_last_error_message()) }.to_str().unwrap().to_string()
}

fn default_model() -> *mut HhgModel {
    let params = hhg_model_params_default();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { hhg_model_new(&params, &mut model) }, HhgStatus::Ok);
    model
}

#[test]
fn model_matches_core() {
    let model = default_model();
    let mut e = [0.0; 4];
    let mut gap = 0.0;
    unsafe {
        assert_eq!(hhg_model_energies(model, e.as_mut_ptr()), HhgStatus::Ok);
        assert_eq!(hhg_model_gap(model, &mut gap), HhgStatus::Ok);
        hhg_model_free(model);
    }
    let dimer = hhg_core::Dimer::new(hhg_core::ModelSpec::default()).unwrap();
    assert_eq!(e, dimer.eigen.energies);
    assert_eq!(gap, dimer.eigen.gap);
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn invalid_model_reports_message() {
    let mut params = hhg_model_params_default();
    params.l = -1.0;
    let mut model = ptr::null_mut();
    let status = unsafe { hhg_model_new(&params, &mut model) };
    assert_eq!(status, HhgStatus::InvalidInput);
    assert!(model.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn spectrum_roundtrip_matches_core() {
    let model = default_model();
    let mut pulse = hhg_pulse_params_default();
    pulse.n_cyc = 3;
    let mut spec = ptr::null_mut();
    unsafe {
        assert_eq!(hhg_spectrum_compute(model, &pulse, HhgEngine::Exact as u32, 9, &mut spec), HhgStatus::Ok);
        let n = hhg_spectrum_len(spec);
        assert!(n > 0);
        let mut small = vec![0.0; n - 1];
        assert_eq!(
            hhg_spectrum_copy(spec, small.as_mut_ptr(), ptr::null_mut(), small.len()),
            HhgStatus::BufferTooSmall
        );
        let (mut order, mut intensity) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(hhg_spectrum_copy(spec, order.as_mut_ptr(), intensity.as_mut_ptr(), n), HhgStatus::Ok);
        assert_eq!(order[0], 0.0);

        let mut h1 = 0.0;
        assert_eq!(hhg_spectrum_harmonic(spec, 1, &mut h1), HhgStatus::Ok);
        let mut h = 0.0;
        assert_eq!(hhg_spectrum_harmonic(spec, 10, &mut h), HhgStatus::Numerical);

        let dimer = hhg_core::Dimer::new(hhg_core::ModelSpec::default()).unwrap();
        let core_pulse = hhg_core::PulseSpec { n_cyc: 3, ..Default::default() }.resolve(dimer.eigen.gap).unwrap();
        let reference =
            hhg_core::scans::engine_spectrum(&dimer, &core_pulse, hhg_core::Engine::Exact, 9).unwrap();
        assert_eq!(intensity, reference.intensity);
        assert_eq!(h1, reference.harmonics[&1]);
        assert_eq!(hhg_spectrum_omega0(spec), core_pulse.omega0);

        hhg_spectrum_free(spec);
        hhg_model_free(model);
    }
}

#[test]
fn unknown_engine_rejected() {
    let model = default_model();
    let pulse = hhg_pulse_params_default();
    let mut spec = ptr::null_mut();
    unsafe {
        assert_eq!(hhg_spectrum_compute(model, &pulse, 7, 15, &mut spec), HhgStatus::InvalidInput);
        assert!(spec.is_null());
        hhg_model_free(model);
    }
    assert!(last_error().contains("engine"));
}

#[test]
fn config_json_run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let json = CString::new(r#"{"pulse": {"n_cyc": 2}}"#).unwrap();
    assert_eq!(unsafe { hhg_run_config_json(json.as_ptr(), out.as_ptr()) }, HhgStatus::Ok);
    assert!(dir.path().join("manifest.json").exists());

    let bad = CString::new(r#"{"pulse": {"dt": 0, "bogus": 1}}"#).unwrap();
    assert_eq!(unsafe { hhg_run_config_json(bad.as_ptr(), out.as_ptr()) }, HhgStatus::Config);
    let msg = last_error();
    assert!(msg.contains("bogus") && msg.contains("dt"), "{msg}");
    assert_eq!(unsafe { hhg_run_config_json(ptr::null(), out.as_ptr()) }, HhgStatus::NullPointer);
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(hhg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

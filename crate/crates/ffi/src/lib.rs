//! C ABI over `hhg_core`.
//!
//! Models and spectra are opaque heap handles created by `hhg_*_new` /
//! `hhg_spectrum_compute` and released with the matching `*_free`. Every
//! fallible call returns an [`HhgStatus`]; on failure the message is kept per
//! thread and read back with [`hhg_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hhg_core::scans::engine_spectrum;
use hhg_core::{Dimer, Engine, Error, ModelSpec, PulseSpec, RunConfig, Spectrum};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HhgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    NormDrift = 4,
    Numerical = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Engine selectors accepted by [`hhg_spectrum_compute`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HhgEngine {
    Exact = 0,
    AdiaIntra = 1,
    AdiaInter = 2,
}

/// Tight-binding parameters. Angles in degrees.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HhgModelParams {
    pub t0: f64,
    pub t1: f64,
    pub d: f64,
    pub l: f64,
    pub alpha_mol: f64,
    pub alpha_inter: f64,
}

/// Pulse parameters. `omega0 <= 0` derives the carrier from the gap as
/// `gap / photon_fraction`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HhgPulseParams {
    pub e0: f64,
    pub omega0: f64,
    pub photon_fraction: f64,
    pub n_cyc: u32,
    pub phi: f64,
    pub dt: f64,
}

/// Opaque model handle.
pub struct HhgModel(Dimer);

/// Opaque spectrum handle.
pub struct HhgSpectrum(Spectrum);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HhgStatus {
    match e.kind() {
        "invalid-input" => HhgStatus::InvalidInput,
        "config" => HhgStatus::Config,
        "norm-drift" => HhgStatus::NormDrift,
        "numerical" => HhgStatus::Numerical,
        "io" => HhgStatus::Io,
        _ => HhgStatus::InvalidInput,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (HhgStatus, String)>) -> HhgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HhgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HhgStatus::Panic
        }
    }
}

fn core(e: Error) -> (HhgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HhgStatus, String) {
    (HhgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HhgStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

impl From<HhgModelParams> for ModelSpec {
    fn from(p: HhgModelParams) -> Self {
        ModelSpec {
            t0: p.t0,
            t1: p.t1,
            d: p.d,
            l: p.l,
            alpha_mol: p.alpha_mol,
            alpha_inter: p.alpha_inter,
        }
    }
}

impl From<HhgPulseParams> for PulseSpec {
    fn from(p: HhgPulseParams) -> Self {
        PulseSpec {
            e0: p.e0,
            omega0: (p.omega0 > 0.0).then_some(p.omega0),
            photon_fraction: p.photon_fraction,
            n_cyc: p.n_cyc,
            phi: p.phi,
            dt: p.dt,
        }
    }
}

#[no_mangle]
pub extern "C" fn hhg_model_params_default() -> HhgModelParams {
    let s = ModelSpec::default();
    HhgModelParams {
        t0: s.t0,
        t1: s.t1,
        d: s.d,
        l: s.l,
        alpha_mol: s.alpha_mol,
        alpha_inter: s.alpha_inter,
    }
}

#[no_mangle]
pub extern "C" fn hhg_pulse_params_default() -> HhgPulseParams {
    let s = PulseSpec::default();
    HhgPulseParams {
        e0: s.e0,
        omega0: s.omega0.unwrap_or(0.0),
        photon_fraction: s.photon_fraction,
        n_cyc: s.n_cyc,
        phi: s.phi,
        dt: s.dt,
    }
}

/// Builds a model. On success `*out` owns a handle for [`hhg_model_free`].
///
/// # Safety
/// `params` and `out` must be valid pointers or null.
#[no_mangle]
pub unsafe extern "C" fn hhg_model_new(params: *const HhgModelParams, out: *mut *mut HhgModel) -> HhgStatus {
    guard(|| {
        let params = *non_null(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let dimer = Dimer::new(params.into()).map_err(core)?;
        *out = Box::into_raw(Box::new(HhgModel(dimer)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`hhg_model_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hhg_model_free(model: *mut HhgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the four static eigenvalues, ascending.
///
/// # Safety
/// `out` must point to space for four doubles.
#[no_mangle]
pub unsafe extern "C" fn hhg_model_energies(model: *const HhgModel, out: *mut f64) -> HhgStatus {
    guard(|| {
        let m = non_null(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(m.0.eigen.energies.as_ptr(), out, 4);
        Ok(())
    })
}

/// HOMO-LUMO gap.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hhg_model_gap(model: *const HhgModel, out: *mut f64) -> HhgStatus {
    guard(|| {
        let m = non_null(model, "model")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.0.eigen.gap;
        Ok(())
    })
}

/// Propagates one pulse and computes the spectrum with harmonic band
/// intensities for orders `1..=max_order`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hhg_spectrum_compute(
    model: *const HhgModel,
    pulse: *const HhgPulseParams,
    engine: u32,
    max_order: u32,
    out: *mut *mut HhgSpectrum,
) -> HhgStatus {
    guard(|| {
        let m = non_null(model, "model")?;
        let p = *non_null(pulse, "pulse")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let engine = match engine {
            0 => Engine::Exact,
            1 => Engine::AdiaIntra,
            2 => Engine::AdiaInter,
            other => return Err((HhgStatus::InvalidInput, format!("unknown engine {other}"))),
        };
        if max_order < 1 {
            return Err((HhgStatus::InvalidInput, "max_order must be at least 1".into()));
        }
        let pulse = PulseSpec::from(p).resolve(m.0.eigen.gap).map_err(core)?;
        let s = engine_spectrum(&m.0, &pulse, engine, max_order).map_err(core)?;
        *out = Box::into_raw(Box::new(HhgSpectrum(s)));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must come from [`hhg_spectrum_compute`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hhg_spectrum_free(spectrum: *mut HhgSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of frequency bins (0 for a null handle).
///
/// # Safety
/// `spectrum` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hhg_spectrum_len(spectrum: *const HhgSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.intensity.len())
}

/// Copies the harmonic-order axis and intensities into caller buffers of
/// `capacity` doubles each. Either buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn hhg_spectrum_copy(
    spectrum: *const HhgSpectrum,
    order: *mut f64,
    intensity: *mut f64,
    capacity: usize,
) -> HhgStatus {
    guard(|| {
        let s = &non_null(spectrum, "spectrum")?.0;
        let n = s.intensity.len();
        if capacity < n {
            return Err((HhgStatus::BufferTooSmall, format!("need {n} doubles, got {capacity}")));
        }
        if !order.is_null() {
            ptr::copy_nonoverlapping(s.harmonic_order.as_ptr(), order, n);
        }
        if !intensity.is_null() {
            ptr::copy_nonoverlapping(s.intensity.as_ptr(), intensity, n);
        }
        Ok(())
    })
}

/// Band-integrated intensity of harmonic `n`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn hhg_spectrum_harmonic(spectrum: *const HhgSpectrum, n: u32, out: *mut f64) -> HhgStatus {
    guard(|| {
        let s = &non_null(spectrum, "spectrum")?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = s.harmonic(n).map_err(core)?;
        Ok(())
    })
}

/// Carrier frequency the spectrum was computed with.
///
/// # Safety
/// `spectrum` must be valid or null; null gives NaN.
#[no_mangle]
pub unsafe extern "C" fn hhg_spectrum_omega0(spectrum: *const HhgSpectrum) -> f64 {
    spectrum.as_ref().map_or(f64::NAN, |s| s.0.omega0)
}

/// Runs a JSON configuration (or an earlier manifest) and writes its output
/// files into `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings or null.
#[no_mangle]
pub unsafe extern "C" fn hhg_run_config_json(json: *const c_char, out_dir: *const c_char) -> HhgStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out_dir.is_null() {
            return Err(null("out_dir"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (HhgStatus::Config, format!("json is not UTF-8: {e}")))?;
        let dir = CStr::from_ptr(out_dir)
            .to_str()
            .map_err(|e| (HhgStatus::InvalidInput, format!("out_dir is not UTF-8: {e}")))?;
        let config = RunConfig::from_json_str(text).map_err(core)?;
        hhg_core::run::run(&config, Path::new(dir)).map_err(core)?;
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hhg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, NUL-terminated and static.
#[no_mangle]
pub extern "C" fn hhg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_handles_are_rejected() {
        unsafe {
            let mut gap = 0.0;
            assert_eq!(hhg_model_gap(ptr::null(), &mut gap), HhgStatus::NullPointer);
            let msg = CStr::from_ptr(hhg_last_error_message()).to_str().unwrap();
            assert!(msg.contains("model"));
            assert_eq!(hhg_spectrum_len(ptr::null()), 0);
            assert!(hhg_spectrum_omega0(ptr::null()).is_nan());
        }
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::InvalidModel("x".into())), HhgStatus::InvalidInput);
        assert_eq!(status_of(&Error::Config(vec![])), HhgStatus::Config);
        assert_eq!(status_of(&Error::MissingHarmonic(4)), HhgStatus::Numerical);
        assert_eq!(
            status_of(&Error::NormDrift { orbital: 0, step: 1, drift: 1.0 }),
            HhgStatus::NormDrift
        );
    }

    #[test]
    fn omega0_zero_means_derived() {
        let spec = PulseSpec::from(hhg_pulse_params_default());
        assert_eq!(spec, PulseSpec::default());
    }
}

//! C ABI over the zeno-gate simulator.
//!
//! Configurations and trajectories are opaque handles created and released through this
//! interface. Every fallible call returns a [`ZgStatus`]; on failure the message is kept
//! per thread and read with [`zg_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use zeno_gate::dynamics::{gate_analysis, loss_metrics, run, GateConfig, Trajectory};
use zeno_gate::scenario::{parse_config, pump_off_phase, resolve, resolve_scenario, Source};
use zeno_gate::schmidt::PhaseOutcome;
use zeno_gate::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Usage = 3,
    InvalidConfig = 4,
    Numerical = 5,
    Io = 6,
    Undefined = 7,
    Panic = 8,
    InvalidInput = 9,
}

/// Opaque resolved gate configuration.
pub struct ZgConfig {
    gate: GateConfig,
}

/// Opaque result of one gate run.
pub struct ZgTrajectory {
    config: GateConfig,
    traj: Trajectory,
}

/// Gate figures of merit; `rank` counts the Schmidt coefficients available.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZgGateMetrics {
    pub fidelity: f64,
    pub pump_fidelity: f64,
    pub first_mode_probability: f64,
    pub conditional_first_mode_probability: f64,
    pub rank: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZgLossMetrics {
    pub signal_energy_loss: f64,
    pub total_norm_deficit: f64,
    pub dissipated_signal: f64,
    pub dissipated_pump: f64,
    pub dissipated_sum_frequency: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ZgStatus {
    match e {
        Error::Usage(_) => ZgStatus::Usage,
        Error::Io { .. } => ZgStatus::Io,
        Error::Data(_) | Error::Domain(_) | Error::Range(_) => ZgStatus::InvalidInput,
        other => match other.exit_code() {
            3 => ZgStatus::Numerical,
            _ => ZgStatus::InvalidConfig,
        },
    }
}

/// Run `f`, translating errors and panics into a status and the last-error message.
fn guarded(f: impl FnOnce() -> Result<(), (ZgStatus, String)>) -> ZgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ZgStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ZgStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (ZgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (ZgStatus, String) {
    (ZgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ZgStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (ZgStatus::InvalidString, format!("{what} is not valid UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (ZgStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread; empty after a success. Valid until the next call.
#[no_mangle]
pub extern "C" fn zg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Resolve a flat key-value TOML text over the built-in defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zg_config_from_toml(text: *const c_char, out: *mut *mut ZgConfig) -> ZgStatus {
    guarded(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let table = parse_config(read_str(text, "text")?).map_err(lib_err)?;
        let resolved = resolve(&[(Source::File, &table)], None).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ZgConfig { gate: resolved.gate }));
        Ok(())
    })
}

/// Resolve a named scenario, optionally layering a configuration file (`path` may be null).
///
/// # Safety
/// `name` must be a NUL-terminated string, `path` null or NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_config_from_scenario(name: *const c_char, path: *const c_char, out: *mut *mut ZgConfig) -> ZgStatus {
    guarded(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let name = read_str(name, "name")?;
        let path = if path.is_null() { None } else { Some(Path::new(read_str(path, "path")?)) };
        let resolved = resolve_scenario(name, path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ZgConfig { gate: resolved.gate }));
        Ok(())
    })
}

/// Replace Υ (rad/s); the configuration is re-validated.
///
/// # Safety
/// `config` must be a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn zg_config_set_upsilon(config: *mut ZgConfig, upsilon_rad_s: f64) -> ZgStatus {
    guarded(|| {
        let c = out_ref(config, "config")?;
        let candidate = GateConfig { upsilon: upsilon_rad_s, ..c.gate.clone() };
        candidate.validate().map_err(lib_err)?;
        c.gate = candidate;
        Ok(())
    })
}

/// Υ in rad/s.
///
/// # Safety
/// `config` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_config_upsilon(config: *const ZgConfig, out: *mut f64) -> ZgStatus {
    guarded(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        *out_ref(out, "out")? = c.gate.upsilon;
        Ok(())
    })
}

/// Number of time steps of a run.
///
/// # Safety
/// `config` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_config_steps(config: *const ZgConfig, out: *mut usize) -> ZgStatus {
    guarded(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        *out_ref(out, "out")? = c.gate.steps();
        Ok(())
    })
}

/// Release a configuration; null is ignored.
///
/// # Safety
/// `config` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zg_config_free(config: *mut ZgConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Run the gate (or the single-photon reduction when one pulse is absent).
///
/// # Safety
/// `config` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_run(config: *const ZgConfig, out: *mut *mut ZgTrajectory) -> ZgStatus {
    guarded(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let traj = run(&c.gate).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ZgTrajectory { config: c.gate.clone(), traj }));
        Ok(())
    })
}

/// Release a trajectory; null is ignored.
///
/// # Safety
/// `traj` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zg_trajectory_free(traj: *mut ZgTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Total probability at the end of the window.
///
/// # Safety
/// `traj` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_trajectory_final_norm(traj: *const ZgTrajectory, out: *mut f64) -> ZgStatus {
    guarded(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        *out_ref(out, "out")? = t.traj.final_norm();
        Ok(())
    })
}

/// Schmidt-based gate metrics of a two-photon run.
///
/// # Safety
/// `traj` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_gate_metrics(traj: *const ZgTrajectory, out: *mut ZgGateMetrics) -> ZgStatus {
    guarded(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let out = out_ref(out, "out")?;
        let (m, res) = gate_analysis(&t.traj).map_err(lib_err)?;
        *out = ZgGateMetrics {
            fidelity: m.fidelity,
            pump_fidelity: m.pump_fidelity,
            first_mode_probability: m.first_mode_probability,
            conditional_first_mode_probability: m.conditional_first_mode_probability,
            rank: res.rank,
        };
        Ok(())
    })
}

/// Copy up to `capacity` Schmidt coefficients into `buffer`; `len` receives the total count.
///
/// # Safety
/// `traj` must be a handle from this library, `buffer` valid for `capacity` doubles (or null
/// with `capacity` 0) and `len` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_schmidt_coefficients(traj: *const ZgTrajectory, buffer: *mut f64, capacity: usize, len: *mut usize) -> ZgStatus {
    guarded(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let len = out_ref(len, "len")?;
        if buffer.is_null() && capacity > 0 {
            return Err(null("buffer"));
        }
        let (m, _) = gate_analysis(&t.traj).map_err(lib_err)?;
        *len = m.coefficients.len();
        for (i, a) in m.coefficients.iter().take(capacity).enumerate() {
            *buffer.add(i) = *a;
        }
        Ok(())
    })
}

/// Signal-energy loss and the probability absorbed per channel.
///
/// # Safety
/// `traj` must be a handle from this library and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_loss_metrics(traj: *const ZgTrajectory, out: *mut ZgLossMetrics) -> ZgStatus {
    guarded(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let l = loss_metrics(&t.traj);
        *out_ref(out, "out")? = ZgLossMetrics {
            signal_energy_loss: l.signal_energy_loss,
            total_norm_deficit: l.total_norm_deficit,
            dissipated_signal: t.traj.dissipated.signal,
            dissipated_pump: t.traj.dissipated.pump,
            dissipated_sum_frequency: t.traj.dissipated.sum_frequency,
        };
        Ok(())
    })
}

/// Phase of a single-photon run against its (mirrored, for rising exponentials) input.
/// Returns `ZG_STATUS_UNDEFINED` with `overlap` set when the overlap is too small.
///
/// # Safety
/// `traj` must be a handle from this library; `phase` and `overlap` valid.
#[no_mangle]
pub unsafe extern "C" fn zg_pump_off_phase(traj: *const ZgTrajectory, phase: *mut f64, overlap: *mut f64) -> ZgStatus {
    guarded(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let phase = out_ref(phase, "phase")?;
        let overlap = out_ref(overlap, "overlap")?;
        match pump_off_phase(&t.traj, &t.config).map_err(lib_err)? {
            PhaseOutcome::Defined { phase: p, overlap: o } => {
                *phase = p;
                *overlap = o;
                Ok(())
            }
            PhaseOutcome::Undefined { overlap: o } => {
                *phase = f64::NAN;
                *overlap = o;
                Err((ZgStatus::Undefined, format!("overlap {o:.3} too small for a phase")))
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "q_c_s = 1e7\nupsilon_mhz = 100\ndt = 1e-10\nbin_s = 1e-9\nbin_p = 1e-8\n";

    fn config(text: &str) -> *mut ZgConfig {
        let src = CString::new(text).unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(unsafe { zg_config_from_toml(src.as_ptr(), &mut cfg) }, ZgStatus::Ok);
        assert!(!cfg.is_null());
        cfg
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(zg_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn run_and_query_a_gate() {
        let cfg = config(SMALL);
        let mut traj = ptr::null_mut();
        unsafe {
            assert_eq!(zg_run(cfg, &mut traj), ZgStatus::Ok);
            let mut m = ZgGateMetrics::default();
            assert_eq!(zg_gate_metrics(traj, &mut m), ZgStatus::Ok);
            assert!(m.fidelity > 0.0 && m.fidelity <= 1.0 + 1e-12);
            assert!(m.rank >= 1);
            let mut len = 0;
            assert_eq!(zg_schmidt_coefficients(traj, ptr::null_mut(), 0, &mut len), ZgStatus::Ok);
            assert_eq!(len, m.rank);
            let mut buf = vec![0.0; len];
            assert_eq!(zg_schmidt_coefficients(traj, buf.as_mut_ptr(), len, &mut len), ZgStatus::Ok);
            assert!((buf[0] * buf[0] - m.first_mode_probability).abs() < 1e-12);
            let mut norm = 0.0;
            assert_eq!(zg_trajectory_final_norm(traj, &mut norm), ZgStatus::Ok);
            assert!((norm - 1.0).abs() < 1e-9);
            let mut loss = ZgLossMetrics::default();
            assert_eq!(zg_loss_metrics(traj, &mut loss), ZgStatus::Ok);
            assert_eq!(loss.dissipated_sum_frequency, 0.0);
            zg_trajectory_free(traj);
            zg_config_free(cfg);
        }
    }

    #[test]
    fn pump_off_phase_is_pi() {
        let cfg = config(&format!("{SMALL}pump_shape = \"none\"\n"));
        let mut traj = ptr::null_mut();
        unsafe {
            assert_eq!(zg_run(cfg, &mut traj), ZgStatus::Ok);
            let (mut phase, mut overlap) = (0.0, 0.0);
            assert_eq!(zg_pump_off_phase(traj, &mut phase, &mut overlap), ZgStatus::Ok);
            assert!((phase.abs() - std::f64::consts::PI).abs() < 0.05, "{phase}");
            assert!(overlap > 0.99);
            let mut m = ZgGateMetrics::default();
            assert_eq!(zg_gate_metrics(traj, &mut m), ZgStatus::InvalidInput);
            assert!(last_error().contains("two-photon"));
            zg_trajectory_free(traj);
            zg_config_free(cfg);
        }
    }

    #[test]
    fn errors_are_reported() {
        let bad = CString::new("colour = 1").unwrap();
        let mut cfg = ptr::null_mut();
        unsafe {
            assert_eq!(zg_config_from_toml(bad.as_ptr(), &mut cfg), ZgStatus::InvalidConfig);
            assert!(cfg.is_null());
            assert!(last_error().contains("colour"));
            assert_eq!(zg_config_from_toml(ptr::null(), &mut cfg), ZgStatus::NullPointer);
            let name = CString::new("fig9").unwrap();
            assert_eq!(zg_config_from_scenario(name.as_ptr(), ptr::null(), &mut cfg), ZgStatus::Usage);
            let cfg = config(SMALL);
            assert_eq!(zg_config_set_upsilon(cfg, 1e12), ZgStatus::InvalidConfig);
            assert!(last_error().starts_with("configuration invalid"));
            let mut ups = 0.0;
            assert_eq!(zg_config_upsilon(cfg, &mut ups), ZgStatus::Ok);
            assert!((ups - 2.0 * std::f64::consts::PI * 1e8).abs() < 1e-3);
            assert!(last_error().is_empty());
            zg_config_free(cfg);
            zg_config_free(ptr::null_mut());
            zg_trajectory_free(ptr::null_mut());
        }
    }

    #[test]
    fn scenario_handles_resolve() {
        let name = CString::new("fig4b").unwrap();
        let mut cfg = ptr::null_mut();
        unsafe {
            assert_eq!(zg_config_from_scenario(name.as_ptr(), ptr::null(), &mut cfg), ZgStatus::Ok);
            let mut steps = 0;
            assert_eq!(zg_config_steps(cfg, &mut steps), ZgStatus::Ok);
            assert!(steps > 10_000);
            zg_config_free(cfg);
        }
        assert!(unsafe { CStr::from_ptr(zg_version()) }.to_str().unwrap().starts_with("0."));
    }
}

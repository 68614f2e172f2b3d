//! Flat key-value run configuration: schema, layered resolution and the substitution report.
//!
//! A configuration is a TOML file holding only top-level keys from [`KEYS`]. A file that has
//! a `[config]` table (a run manifest) is read through that table instead. Values are
//! resolved in layers: built-in default, then scenario override, then file; keys that depend
//! on others (the κ of a rising exponential, the window, the output bins) are derived last.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::dynamics::{field_rates, FieldParams, GateConfig, Regime};
use crate::error::{Error, Result};
use crate::pulse::{read_tabulated_csv, PulseShape, PulseSpec};
use crate::qpm::SearchOptions;
use crate::wgm::{ResonatorSpec, C_LIGHT, DEFAULT_CHI2};

/// Value type of one configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Text,
    Bool,
    FloatList,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, help: &'static str) -> KeySpec {
    KeySpec { name, kind, help }
}

/// Every accepted key, in report order.
pub const KEYS: &[KeySpec] = &[
    key("wavelength_s_nm", Kind::Float, "signal vacuum wavelength, nm (default 1550)"),
    key("wavelength_p_nm", Kind::Float, "pump vacuum wavelength, nm (default 1550)"),
    key("wavelength_f_nm", Kind::Float, "sum-frequency wavelength, nm (default: energy conserving)"),
    key("q_c_s", Kind::Float, "signal coupling Q (default 1e8)"),
    key("q_c_p", Kind::Float, "pump coupling Q (default 1e8)"),
    key("q_c_f", Kind::Float, "sum-frequency coupling Q (default 1e8)"),
    key("q_i_s", Kind::Float, "signal intrinsic Q (default 1e9)"),
    key("q_i_p", Kind::Float, "pump intrinsic Q (default 1e9)"),
    key("q_i_f", Kind::Float, "sum-frequency intrinsic Q (default 1e9)"),
    key("regime", Kind::Text, "cqz (lossless, no intrinsic damping) or iqz (intrinsic damping applied)"),
    key("upsilon_mhz", Kind::Float, "nonlinear coupling in MHz (default 610)"),
    key("upsilon_convention", Kind::Text, "cycles: Upsilon = 2 pi 1e6 x MHz rad/s (default); angular: 1e6 x MHz rad/s"),
    key("upsilon_rad_s", Kind::Float, "nonlinear coupling in rad/s (default: from upsilon_mhz)"),
    key("signal_shape", Kind::Text, "rising_exponential (default), gaussian, tabulated or none"),
    key("signal_kappa", Kind::Float, "signal rising-exponential rate, 1/s (default: signal coupling rate)"),
    key("signal_t_end", Kind::Float, "signal rising-exponential cutoff, s (default: pump reference + signal_delay)"),
    key("signal_fwhm", Kind::Float, "signal Gaussian intensity FWHM, s (default 500e-9)"),
    key("signal_center", Kind::Float, "signal Gaussian centre, s (default: pump reference + signal_delay)"),
    key("signal_file", Kind::Text, "signal tabulated CSV (t_s,re,im), relative to the config file"),
    key("signal_phase", Kind::Float, "signal carrier phase, rad (default 0)"),
    key("signal_delay", Kind::Float, "signal reference time minus pump reference time, s (default 0.7/kappa_s for exponentials, 60e-9 otherwise)"),
    key("pump_shape", Kind::Text, "rising_exponential (default), gaussian, tabulated or none"),
    key("pump_kappa", Kind::Float, "pump rising-exponential rate, 1/s (default: pump coupling rate)"),
    key("pump_t_end", Kind::Float, "pump rising-exponential cutoff, s (default t_start + 20/pump_kappa + 10 ns)"),
    key("pump_fwhm", Kind::Float, "pump Gaussian intensity FWHM, s (default 500e-9)"),
    key("pump_center", Kind::Float, "pump Gaussian centre, s (default t_start + 3.6 pump_fwhm)"),
    key("pump_file", Kind::Text, "pump tabulated CSV (t_s,re,im), relative to the config file"),
    key("pump_phase", Kind::Float, "pump carrier phase, rad (default 0)"),
    key("dt", Kind::Float, "time step, s (default 2.5e-11)"),
    key("t_start", Kind::Float, "window start, s (default 0)"),
    key("window", Kind::Float, "window length, s (default: last pulse end + 12 slowest lifetimes)"),
    key("bin_s", Kind::Float, "signal output bin, s (default 20 dt)"),
    key("bin_p", Kind::Float, "pump output bin, s (default 200 dt)"),
    key("write_joint", Kind::Bool, "also write the two-photon output on the bin grid (default false)"),
    key("sweep_upsilon_mhz", Kind::FloatList, "Upsilon list for sweeps, MHz (default [50, 100, 200, 300, 450, 610])"),
    key("design_radii_um", Kind::FloatList, "radii for the design sweep, um (default [20, 30, 40, 50, 70, 100])"),
    key("design_band_nm", Kind::FloatList, "wavelength band for all three modes, nm (default [700, 2000])"),
    key("design_chi2_pm_v", Kind::Float, "chi2 used by the design search, pm/V (default 50)"),
    key("design_radius_tuning_um", Kind::Float, "radius tuning range about each nominal radius, um (default 0.2)"),
];

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    Derived,
    Scenario,
    File,
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::Derived => "derived",
            Source::Scenario => "scenario",
            Source::File => "file",
        }
    }
}

/// Design-sweep settings carried by the same file.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSettings {
    pub radii: Vec<f64>,
    pub resonator: ResonatorSpec,
    pub options: SearchOptions,
}

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub gate: GateConfig,
    pub design: DesignSettings,
    /// Sweep values in rad/s.
    pub sweep_upsilon: Vec<f64>,
    /// rad/s per quoted MHz under the resolved convention.
    pub upsilon_per_mhz: f64,
    pub write_joint: bool,
    /// Every recorded key with its value and source, in [`KEYS`] order.
    pub values: Vec<(&'static str, Value, Source)>,
}

impl Resolved {
    /// Flat table of every recorded value; reading it back reproduces this configuration.
    pub fn to_table(&self) -> Table {
        self.values.iter().map(|(k, v, _)| (k.to_string(), v.clone())).collect()
    }

    pub fn sources_table(&self) -> Table {
        self.values.iter().map(|(k, _, s)| (k.to_string(), Value::String(s.name().into()))).collect()
    }

    /// One line per value not taken from the scenario or the file.
    pub fn substitution_report(&self) -> String {
        let mut out = String::new();
        for (k, v, s) in &self.values {
            if matches!(s, Source::Default | Source::Derived) {
                let _ = writeln!(out, "{k} = {v} ({})", s.name());
            }
        }
        out
    }
}

/// Parse a configuration file; manifests are read through their `[config]` table.
pub fn read_config_file(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<Table> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![format!("parse error: {e}")]))?;
    if let Some(Value::Table(inner)) = table.remove("config") {
        return Ok(inner);
    }
    Ok(table)
}

struct Layers<'a> {
    layers: &'a [(Source, &'a Table)],
    base_dir: Option<&'a Path>,
    values: BTreeMap<&'static str, (Value, Source)>,
    errors: Vec<String>,
}

impl<'a> Layers<'a> {
    fn explicit(&self, key: &'static str) -> Option<(&'a Value, Source)> {
        self.layers.iter().rev().find_map(|(s, t)| t.get(key).map(|v| (v, *s)))
    }

    fn record(&mut self, key: &'static str, value: Value, source: Source) {
        self.values.insert(key, (value, source));
    }

    fn float(&mut self, key: &'static str, fallback: f64, source: Source) -> f64 {
        match self.explicit(key) {
            Some((v, s)) => {
                let x = match v {
                    Value::Float(x) => Some(*x),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                };
                match x {
                    Some(x) if x.is_finite() => {
                        self.record(key, Value::Float(x), s);
                        x
                    }
                    _ => {
                        self.errors.push(format!("{key}: expected a finite number, got {v}"));
                        fallback
                    }
                }
            }
            None => {
                self.record(key, Value::Float(fallback), source);
                fallback
            }
        }
    }

    fn text(&mut self, key: &'static str, fallback: &str, allowed: &[&str]) -> String {
        let (value, source) = match self.explicit(key) {
            Some((Value::String(s), src)) => (s.clone(), src),
            Some((v, _)) => {
                self.errors.push(format!("{key}: expected a string, got {v}"));
                (fallback.to_string(), Source::Default)
            }
            None => (fallback.to_string(), Source::Default),
        };
        if !allowed.is_empty() && !allowed.contains(&value.as_str()) {
            self.errors.push(format!("{key}: `{value}` is not one of {}", allowed.join(", ")));
        }
        self.record(key, Value::String(value.clone()), source);
        value
    }

    fn boolean(&mut self, key: &'static str, fallback: bool) -> bool {
        let (value, source) = match self.explicit(key) {
            Some((Value::Boolean(b), src)) => (*b, src),
            Some((v, _)) => {
                self.errors.push(format!("{key}: expected true or false, got {v}"));
                (fallback, Source::Default)
            }
            None => (fallback, Source::Default),
        };
        self.record(key, Value::Boolean(value), source);
        value
    }

    fn list(&mut self, key: &'static str, fallback: &[f64]) -> Vec<f64> {
        let parsed = match self.explicit(key) {
            Some((Value::Array(items), src)) => {
                let xs: Option<Vec<f64>> = items
                    .iter()
                    .map(|v| match v {
                        Value::Float(x) if x.is_finite() => Some(*x),
                        Value::Integer(i) => Some(*i as f64),
                        _ => None,
                    })
                    .collect();
                match xs {
                    Some(xs) => Some((xs, src)),
                    None => {
                        self.errors.push(format!("{key}: expected an array of numbers"));
                        None
                    }
                }
            }
            Some((v, _)) => {
                self.errors.push(format!("{key}: expected an array of numbers, got {v}"));
                None
            }
            None => None,
        };
        let (xs, source) = parsed.unwrap_or_else(|| (fallback.to_vec(), Source::Default));
        self.record(key, Value::Array(xs.iter().map(|x| Value::Float(*x)).collect()), source);
        xs
    }

    fn positive(&mut self, key: &'static str, value: f64) {
        if !(value > 0.0) {
            self.errors.push(format!("{key}: must be positive, got {value}"));
        }
    }

    fn resolve_path(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        match self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

const SHAPES: &[&str] = &["rising_exponential", "gaussian", "tabulated", "none"];
const TRUNCATION_LIFETIMES: f64 = 20.0;
const DRAIN_LIFETIMES: f64 = 12.0;
const GAUSSIAN_HALF_SPAN: f64 = 3.4;
const DEFAULT_DELAY_LIFETIMES: f64 = 0.7;

fn omega_of_nm(nm: f64) -> f64 {
    2.0 * PI * C_LIGHT / (nm * 1e-9)
}

/// Pulse settings for one photon; `reference` is the cutoff or centre the partner is timed against.
struct PulsePlan {
    spec: Option<PulseSpec>,
    reference: f64,
    end: f64,
}

fn pulse_plan(l: &mut Layers, prefix: &'static str, kappa_c: f64, anchor: Option<f64>, t_start: f64) -> PulsePlan {
    let k = |suffix: &str| -> &'static str {
        KEYS.iter().find(|s| s.name.strip_prefix(prefix).and_then(|r| r.strip_prefix('_')) == Some(suffix)).map(|s| s.name).expect("schema key")
    };
    let shape = l.text(k("shape"), "rising_exponential", SHAPES);
    let phase = if shape != "none" { l.float(k("phase"), 0.0, Source::Default) } else { 0.0 };
    let delay_default = if shape == "rising_exponential" { DEFAULT_DELAY_LIFETIMES / kappa_c } else { 60e-9 };
    let delay = match anchor {
        Some(_) if shape != "none" => l.float(k("delay"), delay_default, Source::Derived),
        _ => 0.0,
    };
    let plan = |shape: Option<PulseShape>, reference: f64, end: f64| PulsePlan {
        spec: shape.map(|shape| PulseSpec { shape, carrier_phase: phase }),
        reference,
        end,
    };
    match shape.as_str() {
        "rising_exponential" => {
            let kappa = l.float(k("kappa"), kappa_c, Source::Derived);
            l.positive(k("kappa"), kappa);
            let default_end = match anchor {
                Some(a) => a + delay,
                None => t_start + TRUNCATION_LIFETIMES / kappa + 10e-9,
            };
            let t_end = l.float(k("t_end"), default_end, Source::Derived);
            plan(Some(PulseShape::RisingExponential { kappa, t_end }), t_end, t_end)
        }
        "gaussian" => {
            let fwhm = l.float(k("fwhm"), 500e-9, Source::Default);
            l.positive(k("fwhm"), fwhm);
            let default_center = match anchor {
                Some(a) => a + delay,
                None => t_start + (GAUSSIAN_HALF_SPAN + 0.2) * fwhm,
            };
            let center = l.float(k("center"), default_center, Source::Derived);
            plan(Some(PulseShape::Gaussian { fwhm, center }), center, center + GAUSSIAN_HALF_SPAN * fwhm)
        }
        "tabulated" => {
            let file = l.text(k("file"), "", &[]);
            if file.is_empty() {
                l.errors.push(format!("{}: required when {} = \"tabulated\"", k("file"), k("shape")));
                return plan(None, t_start, t_start);
            }
            match read_tabulated_csv(&l.resolve_path(&file)) {
                Ok(samples) => {
                    let end = samples.last().map_or(t_start, |s| s.0);
                    let peak = samples.iter().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map_or(t_start, |s| s.0);
                    plan(Some(PulseShape::Tabulated { samples }), peak, end)
                }
                Err(e) => {
                    l.errors.push(format!("{}: {e}", k("file")));
                    plan(None, t_start, t_start)
                }
            }
        }
        // an absent pump keeps the default cutoff so a lone signal is timed as in the two-photon run
        _ => plan(None, anchor.unwrap_or(t_start + TRUNCATION_LIFETIMES / kappa_c + 10e-9), t_start),
    }
}

/// Resolve layered tables into a run configuration, reporting every problem at once.
pub fn resolve(layers: &[(Source, &Table)], base_dir: Option<&Path>) -> Result<Resolved> {
    let mut l = Layers { layers, base_dir, values: BTreeMap::new(), errors: Vec::new() };
    for (_, table) in layers {
        for key in table.keys() {
            if !KEYS.iter().any(|s| s.name == key) {
                l.errors.push(format!("{key}: unknown key"));
            }
        }
    }

    let nm_s = l.float("wavelength_s_nm", 1550.0, Source::Default);
    let nm_p = l.float("wavelength_p_nm", 1550.0, Source::Default);
    l.positive("wavelength_s_nm", nm_s);
    l.positive("wavelength_p_nm", nm_p);
    let (omega_s, omega_p) = (omega_of_nm(nm_s), omega_of_nm(nm_p));
    let nm_f = l.float("wavelength_f_nm", 2.0 * PI * C_LIGHT / (omega_s + omega_p) * 1e9, Source::Derived);
    l.positive("wavelength_f_nm", nm_f);
    let mut q = [0.0; 6];
    for (i, name) in ["q_c_s", "q_c_p", "q_c_f"].into_iter().enumerate() {
        q[i] = l.float(name, 1e8, Source::Default);
        l.positive(name, q[i]);
    }
    for (i, name) in ["q_i_s", "q_i_p", "q_i_f"].into_iter().enumerate() {
        q[3 + i] = l.float(name, 1e9, Source::Default);
        l.positive(name, q[3 + i]);
    }
    let signal = FieldParams::new(omega_s, q[0], q[3]);
    let pump = FieldParams::new(omega_p, q[1], q[4]);
    let sf = FieldParams::new(omega_of_nm(nm_f), q[2], q[5]);
    let regime = match l.text("regime", "cqz", &["cqz", "iqz"]).as_str() {
        "iqz" => Regime::Iqz,
        _ => Regime::Cqz,
    };

    let convention = l.text("upsilon_convention", "cycles", &["cycles", "angular"]);
    let per_mhz = if convention == "angular" { 1e6 } else { 2.0 * PI * 1e6 };
    let mhz = l.float("upsilon_mhz", 610.0, Source::Default);
    let mhz_given = l.explicit("upsilon_mhz").is_some();
    let upsilon = l.float("upsilon_rad_s", mhz * per_mhz, Source::Derived);
    if mhz_given && l.explicit("upsilon_rad_s").is_some() && (upsilon - mhz * per_mhz).abs() > 1e-12 * upsilon.abs() {
        l.errors.push(format!("upsilon_rad_s: {upsilon:e} conflicts with upsilon_mhz = {mhz} under the {convention} convention"));
    }

    let t_start = l.float("t_start", 0.0, Source::Default);
    let kappa_s = field_rates(&signal).coupling;
    let kappa_p = field_rates(&pump).coupling;
    let pump_plan = pulse_plan(&mut l, "pump", kappa_p, None, t_start);
    let signal_plan = pulse_plan(&mut l, "signal", kappa_s, Some(pump_plan.reference), t_start);

    let dt = l.float("dt", 2.5e-11, Source::Default);
    l.positive("dt", dt);
    let slowest = [kappa_s, kappa_p, field_rates(&sf).coupling].into_iter().filter(|k| *k > 0.0).fold(f64::INFINITY, f64::min);
    let last_end = pump_plan.end.max(signal_plan.end);
    let drain = if slowest.is_finite() { DRAIN_LIFETIMES / slowest } else { 0.0 };
    let window_default = if dt > 0.0 { ((last_end + drain - t_start) / dt).ceil() * dt } else { 0.0 };
    let window = l.float("window", window_default, Source::Derived);
    let bin_s = l.float("bin_s", 20.0 * dt, Source::Derived);
    let bin_p = l.float("bin_p", 200.0 * dt, Source::Derived);
    let write_joint = l.boolean("write_joint", false);

    let sweep = l.list("sweep_upsilon_mhz", &[50.0, 100.0, 200.0, 300.0, 450.0, 610.0]);
    let radii = l.list("design_radii_um", &[20.0, 30.0, 40.0, 50.0, 70.0, 100.0]);
    let band = l.list("design_band_nm", &[700.0, 2000.0]);
    let chi2 = l.float("design_chi2_pm_v", DEFAULT_CHI2 * 1e12, Source::Default);
    let tuning = l.float("design_radius_tuning_um", 0.2, Source::Default);
    if band.len() != 2 || !(band[0] > 0.0 && band[1] > band[0]) {
        l.errors.push(format!("design_band_nm: expected [low, high] with 0 < low < high, got {band:?}"));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        l.errors.push("design_radii_um: expected a non-empty list of positive radii".into());
    }
    l.positive("design_chi2_pm_v", chi2);

    let gate = GateConfig {
        signal,
        pump,
        sf,
        upsilon,
        regime,
        signal_pulse: signal_plan.spec,
        pump_pulse: pump_plan.spec,
        dt,
        t_start,
        window,
        output_bin_signal: bin_s,
        output_bin_pump: bin_p,
    };
    if l.errors.is_empty() {
        l.errors.extend(gate.violations().into_iter().map(rename_violation));
    }
    if !l.errors.is_empty() {
        return Err(Error::Config(l.errors));
    }

    let mut resonator = ResonatorSpec::lithium_niobate(radii[0] * 1e-6);
    resonator.chi2 = chi2 * 1e-12;
    let options = SearchOptions {
        band: (band[0] * 1e-9, band[1] * 1e-9),
        radius_tuning: tuning * 1e-6,
        ..SearchOptions::default()
    };
    let values = KEYS.iter().filter_map(|s| l.values.remove(s.name).map(|(v, src)| (s.name, v, src))).collect();
    Ok(Resolved {
        gate,
        design: DesignSettings { radii: radii.iter().map(|r| r * 1e-6).collect(), resonator, options },
        sweep_upsilon: sweep.iter().map(|m| m * per_mhz).collect(),
        upsilon_per_mhz: per_mhz,
        write_joint,
        values,
    })
}

/// Gate invariants are reported against internal field names; map them onto file keys.
fn rename_violation(v: String) -> String {
    const MAP: &[(&str, &str)] = &[
        ("omega_s:", "wavelength_s_nm:"),
        ("omega_p:", "wavelength_p_nm:"),
        ("omega_f:", "wavelength_f_nm:"),
        ("upsilon:", "upsilon_rad_s:"),
        ("signal_pulse:", "signal_shape:"),
        ("pump_pulse:", "pump_shape:"),
        ("output_bin_signal:", "bin_s:"),
        ("output_bin_pump:", "bin_p:"),
    ];
    for (from, to) in MAP {
        if let Some(rest) = v.strip_prefix(from) {
            return format!("{to}{rest}");
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(text: &str) -> Result<Resolved> {
        let t = parse_config(text)?;
        resolve(&[(Source::File, &t)], None)
    }

    #[test]
    fn empty_file_resolves_to_defaults_with_full_report() {
        let r = resolve_text("").unwrap();
        assert!(r.values.iter().all(|(_, _, s)| matches!(s, Source::Default | Source::Derived)));
        let report = r.substitution_report();
        for key in ["q_c_s", "upsilon_rad_s", "dt", "window", "signal_t_end", "pump_kappa"] {
            assert!(report.lines().any(|line| line.starts_with(&format!("{key} = "))), "{key} missing from\n{report}");
        }
        assert!((r.gate.upsilon - 2.0 * PI * 610e6).abs() < 1e-3);
        assert!(r.gate.validate().is_ok());
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        let Err(Error::Config(errs)) = resolve_text("colour = 3\nq_c_s = \"high\"\nregime = \"qz\"") else { panic!() };
        assert!(errs.iter().any(|e| e.starts_with("colour: unknown key")));
        assert!(errs.iter().any(|e| e.starts_with("q_c_s:")));
        assert!(errs.iter().any(|e| e.starts_with("regime:")));
    }

    #[test]
    fn coupling_q_too_close_to_intrinsic_q_is_invalid_in_cqz() {
        let Err(Error::Config(errs)) = resolve_text("q_c_p = 5e8") else { panic!() };
        assert!(errs.iter().any(|e| e.starts_with("q_c_p:")), "{errs:?}");
        assert!(resolve_text("q_c_p = 5e8\nregime = \"iqz\"").is_ok());
    }

    #[test]
    fn energy_mismatch_is_invalid() {
        let Err(Error::Config(errs)) = resolve_text("wavelength_f_nm = 780") else { panic!() };
        assert!(errs.iter().any(|e| e.starts_with("wavelength_f_nm:")), "{errs:?}");
    }

    #[test]
    fn upsilon_conventions() {
        let a = resolve_text("upsilon_mhz = 100\nupsilon_convention = \"angular\"").unwrap();
        assert!((a.gate.upsilon - 1e8).abs() < 1e-6);
        let b = resolve_text("upsilon_mhz = 100").unwrap();
        assert!((b.gate.upsilon - 2.0 * PI * 1e8).abs() < 1e-6);
        assert!(resolve_text("upsilon_mhz = 100\nupsilon_rad_s = 1e8").is_err());
    }

    #[test]
    fn resolved_table_reads_back_identically() {
        let r = resolve_text("signal_shape = \"gaussian\"\npump_shape = \"gaussian\"\nq_c_s = 1e7").unwrap();
        let text = toml::to_string(&r.to_table()).unwrap();
        let again = resolve_text(&text).unwrap();
        assert_eq!(r.to_table(), again.to_table());
        assert!(again.values.iter().all(|(_, _, s)| *s == Source::File));
        let manifest = format!("tool = \"x\"\n[config]\n{text}");
        assert_eq!(resolve_text(&manifest).unwrap().to_table(), r.to_table());
    }

    #[test]
    fn later_layers_win() {
        let scenario: Table = "q_c_s = 1e7\ndt = 5e-11".parse().unwrap();
        let file: Table = "dt = 2.5e-11".parse().unwrap();
        let r = resolve(&[(Source::Scenario, &scenario), (Source::File, &file)], None).unwrap();
        assert_eq!(r.gate.dt, 2.5e-11);
        assert_eq!(r.gate.signal.q_coupling, 1e7);
        let src = |k: &str| r.values.iter().find(|(n, _, _)| *n == k).unwrap().2;
        assert_eq!(src("q_c_s"), Source::Scenario);
        assert_eq!(src("dt"), Source::File);
    }
}

//! Named scenarios, Υ sweeps and reproducible artifact output.
//!
//! Every run writes its CSV artifacts into one directory, each atomically (temporary file
//! plus rename), followed by `manifest.toml`: tool version, scenario name, the fully
//! resolved configuration under `[config]`, the source of every value under `[sources]`,
//! and the SHA-256 of every artifact. Passing the manifest back as `--config` reproduces
//! the run byte for byte.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

pub use config::{parse_config, read_config_file, resolve, KeySpec, Kind, Resolved, Source, KEYS};

use crate::dynamics::{
    gate_analysis, loss_metrics, pump_on_phase, run, GateConfig, GateMetrics, LossMetrics, Trajectory,
};
use crate::error::{Error, Result};
use crate::pulse::{PulseShape, Waveform};
use crate::qpm::{fit_log_quadratic, search_triples, triples_csv, upsilon_sweep, SweepRow};
use crate::schmidt::{phase_diagnostic, PhaseOutcome};

/// Named scenarios and what they reproduce.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("fig2", "best Upsilon per radius from the phase-matched mode search"),
    ("fig3", "Gaussian signal and pump: Schmidt spectrum of the entangled output"),
    ("fig4a", "pump OFF: matched rising-exponential signal scattered alone"),
    ("fig4b", "pump ON: signal input against the first Schmidt signal mode"),
    ("fig4c", "signal OFF: rising-exponential pump scattered alone"),
    ("fig4d", "pump ON: pump scattered alone against the first Schmidt pump mode"),
    ("fig5", "gate metrics versus Upsilon"),
    ("fig6", "incoherent regime: dissipative sum-frequency mode"),
    ("custom", "built-in defaults plus --config"),
];

const FIG4: &str = "q_c_s = 1e7\nbin_s = 5e-10\nbin_p = 5e-9\n";

/// Configuration overrides that define a named scenario.
pub fn scenario_overrides(name: &str) -> Result<Table> {
    let text = match name {
        "fig2" | "custom" => String::new(),
        "fig3" => concat!(
            "signal_shape = \"gaussian\"\npump_shape = \"gaussian\"\n",
            "signal_fwhm = 5e-7\npump_fwhm = 5e-7\nsignal_delay = 6e-8\n",
            "bin_s = 2.5e-9\nbin_p = 2.5e-9\n"
        )
        .into(),
        "fig4b" | "fig4d" | "fig5" => FIG4.into(),
        "fig4a" => format!("{FIG4}pump_shape = \"none\"\n"),
        "fig4c" => format!("{FIG4}signal_shape = \"none\"\n"),
        "fig6" => format!("{FIG4}regime = \"iqz\"\nq_i_f = 1e5\n"),
        _ => {
            let names: Vec<_> = SCENARIOS.iter().map(|s| s.0).collect();
            return Err(Error::Usage(format!("unknown scenario `{name}`; valid names: {}", names.join(", "))));
        }
    };
    Ok(text.parse().expect("built-in scenario tables parse"))
}

/// Resolve a scenario with an optional user file layered on top.
pub fn resolve_scenario(name: &str, config_file: Option<&Path>) -> Result<Resolved> {
    let scenario = scenario_overrides(name)?;
    let file = config_file.map(read_config_file).transpose()?;
    let mut layers = vec![(Source::Scenario, &scenario)];
    if let Some(f) = &file {
        layers.push((Source::File, f));
    }
    resolve(&layers, config_file.and_then(Path::parent))
}

/// One written file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Outcome of a scenario or sweep run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub metrics: Vec<(String, f64)>,
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|m| m.1)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Write through a sibling temporary file and rename it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).ok_or_else(|| Error::Usage(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct OutputDir {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputDir { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        atomic_write(&self.dir.join(name), contents.as_bytes())?;
        self.artifacts.push(Artifact { name: name.into(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() });
        Ok(())
    }

    fn finish(mut self, scenario: &str, resolved: Option<&Resolved>, metrics: Vec<(String, f64)>, warnings: Vec<String>) -> Result<RunReport> {
        let mut m = Table::new();
        m.insert("tool".into(), Value::String(env!("CARGO_PKG_NAME").into()));
        m.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        m.insert("scenario".into(), Value::String(scenario.into()));
        if let Some(r) = resolved {
            m.insert("config".into(), Value::Table(r.to_table()));
            m.insert("sources".into(), Value::Table(r.sources_table()));
        }
        let artifacts = self
            .artifacts
            .iter()
            .map(|a| {
                let mut t = Table::new();
                t.insert("name".into(), Value::String(a.name.clone()));
                t.insert("sha256".into(), Value::String(a.sha256.clone()));
                t.insert("bytes".into(), Value::Integer(a.bytes as i64));
                Value::Table(t)
            })
            .collect();
        m.insert("artifacts".into(), Value::Array(artifacts));
        let text = toml::to_string(&m).map_err(|e| Error::Data(format!("manifest serialisation: {e}")))?;
        atomic_write(&self.dir.join("manifest.toml"), text.as_bytes())?;
        let artifacts = std::mem::take(&mut self.artifacts);
        Ok(RunReport { scenario: scenario.into(), metrics, artifacts, warnings })
    }
}

fn metrics_csv(metrics: &[(String, f64)]) -> String {
    let mut s = String::from("metric,value\n");
    for (k, v) in metrics {
        let _ = writeln!(s, "{k},{v:.12e}");
    }
    s
}

fn push_phase(metrics: &mut Vec<(String, f64)>, key: &str, outcome: &PhaseOutcome) {
    let (phase, overlap) = match outcome {
        PhaseOutcome::Defined { phase, overlap } => (*phase, *overlap),
        PhaseOutcome::Undefined { overlap } => (f64::NAN, *overlap),
    };
    metrics.push((key.into(), phase));
    metrics.push((format!("{key}_overlap"), overlap));
}

/// Nearest bin boundary or centre to `t`, the admissible mirror points of a grid.
fn mirror_point(w: &Waveform, t: f64) -> f64 {
    let g = w.grid;
    g.t0 + ((t - g.t0) / g.dt * 2.0).round() * g.dt / 2.0
}

/// Phase of a lone photon's output against its input; rising exponentials are mirrored about their cutoff.
pub fn pump_off_phase(traj: &Trajectory, config: &GateConfig) -> Result<PhaseOutcome> {
    let (input, output, spec) = match (&traj.signal_input, &traj.signal_alone) {
        (Some(i), Some(o)) => (i, o, config.signal_pulse.as_ref()),
        _ => match (&traj.pump_input, &traj.pump_alone) {
            (Some(i), Some(o)) => (i, o, config.pump_pulse.as_ref()),
            _ => return Err(Error::Data("trajectory has no single-photon output".into())),
        },
    };
    let mirror = match spec.map(|s| &s.shape) {
        Some(PulseShape::RisingExponential { t_end, .. }) => Some(mirror_point(input, *t_end)),
        _ => None,
    };
    phase_diagnostic(input, output, mirror)
}

fn norm_csv(traj: &Trajectory, every: usize) -> String {
    let mut s = String::from("t_s,norm\n");
    for (i, n) in traj.norm.iter().enumerate().filter(|(i, _)| (i + 1) % every == 0 || i + 1 == traj.norm.len()) {
        let _ = writeln!(s, "{:.12e},{n:.15e}", traj.grid.t0 + (i + 1) as f64 * traj.grid.dt);
    }
    s
}

fn loss_entries(metrics: &mut Vec<(String, f64)>, traj: &Trajectory, loss: &LossMetrics) {
    metrics.push(("signal_energy_loss".into(), loss.signal_energy_loss));
    metrics.push(("total_norm_deficit".into(), loss.total_norm_deficit));
    metrics.push(("dissipated_signal".into(), traj.dissipated.signal));
    metrics.push(("dissipated_pump".into(), traj.dissipated.pump));
    metrics.push(("dissipated_sum_frequency".into(), traj.dissipated.sum_frequency));
    metrics.push(("sum_frequency_output".into(), traj.sf_output.norm_sqr()));
    metrics.push(("residual".into(), traj.residual));
    metrics.push(("steps".into(), traj.grid.len as f64));
}

/// Write every artifact of one gate run and return its metrics.
fn write_gate_run(out: &mut OutputDir, traj: &Trajectory, resolved: &Resolved) -> Result<Vec<(String, f64)>> {
    let (ks, kp) = resolved.gate.output_factors()?;
    let mut metrics = Vec::new();
    if let Some(w) = &traj.signal_input {
        out.write("signal_input.csv", &w.coarsened(ks).to_csv())?;
    }
    if let Some(w) = &traj.pump_input {
        out.write("pump_input.csv", &w.coarsened(kp).to_csv())?;
    }
    if let Some(w) = &traj.signal_alone {
        out.write("signal_alone.csv", &w.coarsened(ks).to_csv())?;
    }
    if let Some(w) = &traj.pump_alone {
        out.write("pump_alone.csv", &w.coarsened(kp).to_csv())?;
    }
    out.write("norm_history.csv", &norm_csv(traj, ks))?;
    let loss = loss_metrics(traj);
    match &traj.joint {
        Some(joint) => {
            let (m, res) = gate_analysis(traj)?;
            out.write("schmidt_coefficients.csv", &res.coefficients_csv())?;
            for n in 0..res.rank.min(2) {
                out.write(&format!("signal_mode_{}.csv", n + 1), &res.signal_modes[n].to_csv())?;
                out.write(&format!("pump_mode_{}.csv", n + 1), &res.pump_modes[n].to_csv())?;
            }
            out.write("sum_frequency.csv", &traj.sf_output.coarsened(ks).to_csv())?;
            if resolved.write_joint {
                out.write("joint.csv", &joint.to_csv())?;
            }
            gate_entries(&mut metrics, &m, res.tail_weight(3), traj.joint_norm);
            push_phase(&mut metrics, "pump_on_phase", &pump_on_phase(traj)?);
        }
        None => push_phase(&mut metrics, "pump_off_phase", &pump_off_phase(traj, &resolved.gate)?),
    }
    loss_entries(&mut metrics, traj, &loss);
    out.write("metrics.csv", &metrics_csv(&metrics))?;
    Ok(metrics)
}

fn gate_entries(metrics: &mut Vec<(String, f64)>, m: &GateMetrics, tail: f64, joint_norm: f64) {
    metrics.push(("fidelity".into(), m.fidelity));
    metrics.push(("pump_fidelity".into(), m.pump_fidelity));
    metrics.push(("first_mode_probability".into(), m.first_mode_probability));
    metrics.push(("conditional_first_mode_probability".into(), m.conditional_first_mode_probability));
    for (n, a) in m.coefficients.iter().take(4).enumerate() {
        metrics.push((format!("a_{}", n + 1), *a));
    }
    metrics.push(("schmidt_tail_after_3".into(), tail));
    metrics.push(("two_photon_output".into(), joint_norm));
}

/// Run a named scenario into `out_dir`.
pub fn run_scenario(name: &str, out_dir: &Path, config_file: Option<&Path>) -> Result<RunReport> {
    let resolved = resolve_scenario(name, config_file)?;
    let mut out = OutputDir::create(out_dir)?;
    match name {
        "fig2" => {
            let rows = upsilon_sweep(&resolved.design.resonator, &resolved.design.radii, &resolved.design.options);
            let metrics = write_design_sweep(&mut out, &rows)?;
            out.finish(name, Some(&resolved), metrics, Vec::new())
        }
        "fig5" => {
            let points = sweep_upsilon(&resolved.gate, &resolved.sweep_upsilon)?;
            out.write("sweep_upsilon.csv", &sweep_csv(&points, resolved.upsilon_per_mhz))?;
            let metrics = points
                .iter()
                .enumerate()
                .flat_map(|(i, p)| {
                    [(format!("fidelity_{i}"), p.metrics.fidelity), (format!("first_mode_probability_{i}"), p.metrics.first_mode_probability)]
                })
                .collect();
            let warnings = points.iter().flat_map(|p| p.warnings.clone()).collect();
            out.finish(name, Some(&resolved), metrics, warnings)
        }
        _ => {
            let traj = run(&resolved.gate)?;
            let metrics = write_gate_run(&mut out, &traj, &resolved)?;
            out.finish(name, Some(&resolved), metrics, traj.warnings.clone())
        }
    }
}

pub const DESIGN_SWEEP_HEADER: &str =
    "R_nominal_m,triples_found,R_m,l_s,l_p,l_f,upsilon_rad_s,upsilon_mhz_if_cycles,upsilon_mhz_if_angular,error";

fn write_design_sweep(out: &mut OutputDir, rows: &[SweepRow]) -> Result<Vec<(String, f64)>> {
    let mut csv = String::from(DESIGN_SWEEP_HEADER);
    csv.push('\n');
    let mut metrics = Vec::new();
    let mut points = Vec::new();
    for row in rows {
        let um = (row.nominal_radius * 1e6).round();
        metrics.push((format!("triples_found_{um}um"), row.triples_found as f64));
        match &row.best {
            Some(t) => {
                points.push((t.radius, t.upsilon));
                metrics.push((format!("best_upsilon_rad_s_{um}um"), t.upsilon));
                let _ = writeln!(
                    csv,
                    "{:.9e},{},{:.9e},{},{},{},{:.9e},{:.6e},{:.6e},",
                    row.nominal_radius,
                    row.triples_found,
                    t.radius,
                    t.signal.l,
                    t.pump.l,
                    t.sf.l,
                    t.upsilon,
                    t.upsilon / (2.0 * std::f64::consts::PI * 1e6),
                    t.upsilon / 1e6
                );
            }
            None => {
                let err = row.error.clone().unwrap_or_default().replace(',', ";");
                let _ = writeln!(csv, "{:.9e},{},,,,,,,,{err}", row.nominal_radius, row.triples_found);
            }
        }
    }
    out.write("fig2_sweep.csv", &csv)?;
    if let Some([a, b, c]) = fit_log_quadratic(&points) {
        metrics.extend([("fit_a".into(), a), ("fit_b".into(), b), ("fit_c".into(), c)]);
    }
    out.write("metrics.csv", &metrics_csv(&metrics))?;
    Ok(metrics)
}

/// Phase-matched triplets at one radius, written as `triples.csv`.
pub fn run_design(radius: f64, band_nm: (f64, f64), out_dir: &Path, config_file: Option<&Path>) -> Result<RunReport> {
    let file = config_file.map(read_config_file).transpose()?.unwrap_or_default();
    let mut over = Table::new();
    over.insert("design_radii_um".into(), Value::Array(vec![Value::Float(radius * 1e6)]));
    over.insert("design_band_nm".into(), Value::Array(vec![Value::Float(band_nm.0), Value::Float(band_nm.1)]));
    let resolved = resolve(&[(Source::File, &file), (Source::Scenario, &over)], config_file.and_then(Path::parent))?;
    let mut spec = resolved.design.resonator;
    spec.radius = radius;
    let found = search_triples(&spec, &resolved.design.options)?;
    let mut out = OutputDir::create(out_dir)?;
    out.write("triples.csv", &triples_csv(found.triples()))?;
    let mut metrics = vec![("triples_found".to_string(), found.triples().len() as f64)];
    if let Some(best) = found.best() {
        metrics.push(("best_upsilon_rad_s".into(), best.upsilon));
    }
    out.write("metrics.csv", &metrics_csv(&metrics))?;
    let warnings = if found.triples().is_empty() { vec!["no phase-matched triple in band".to_string()] } else { Vec::new() };
    out.finish("design", Some(&resolved), metrics, warnings)
}

/// Gate metrics at one Υ.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub upsilon: f64,
    pub metrics: GateMetrics,
    pub loss: LossMetrics,
    pub warnings: Vec<String>,
}

/// Run `base` once per Υ (rad/s), in parallel; points come back in input order.
pub fn sweep_upsilon(base: &GateConfig, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Usage("sweep needs at least one Upsilon value".into()));
    }
    let configs: Vec<GateConfig> = values.iter().map(|&upsilon| GateConfig { upsilon, ..base.clone() }).collect();
    let errors: Vec<String> = configs
        .iter()
        .flat_map(|c| c.violations().into_iter().map(move |v| format!("upsilon_rad_s = {:e}: {v}", c.upsilon)))
        .collect();
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    configs
        .par_iter()
        .map(|c| {
            let traj = run(c)?;
            let (metrics, _) = gate_analysis(&traj)?;
            Ok(SweepPoint { upsilon: c.upsilon, metrics, loss: loss_metrics(&traj), warnings: traj.warnings })
        })
        .collect()
}

pub const SWEEP_HEADER: &str =
    "upsilon_rad_s,upsilon_mhz,fidelity,first_mode_probability,conditional_first_mode_probability,pump_fidelity,signal_energy_loss";

pub fn sweep_csv(points: &[SweepPoint], per_mhz: f64) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for p in points {
        let m = &p.metrics;
        let _ = writeln!(
            s,
            "{:.9e},{:.6e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            p.upsilon,
            p.upsilon / per_mhz,
            m.fidelity,
            m.first_mode_probability,
            m.conditional_first_mode_probability,
            m.pump_fidelity,
            p.loss.signal_energy_loss
        );
    }
    s
}

/// `sweep-upsilon`: Υ values in MHz under the resolved convention, base taken from `scenario`.
pub fn run_sweep(scenario: &str, values_mhz: &[f64], out_dir: &Path, config_file: Option<&Path>) -> Result<RunReport> {
    let mut resolved = resolve_scenario(scenario, config_file)?;
    let values: Vec<f64> = values_mhz.iter().map(|m| m * resolved.upsilon_per_mhz).collect();
    let points = sweep_upsilon(&resolved.gate, &values)?;
    if let Some((_, v, s)) = resolved.values.iter_mut().find(|(k, _, _)| *k == "sweep_upsilon_mhz") {
        *v = Value::Array(values_mhz.iter().map(|x| Value::Float(*x)).collect());
        *s = Source::File;
    }
    let mut out = OutputDir::create(out_dir)?;
    out.write("sweep_upsilon.csv", &sweep_csv(&points, resolved.upsilon_per_mhz))?;
    let metrics = points.iter().enumerate().map(|(i, p)| (format!("fidelity_{i}"), p.metrics.fidelity)).collect();
    let warnings = points.iter().flat_map(|p| p.warnings.clone()).collect();
    out.finish("sweep-upsilon", Some(&resolved), metrics, warnings)
}

/// Checked configuration and its substitution report.
pub fn validate_config(scenario: &str, config_file: Option<&Path>) -> Result<(Resolved, String)> {
    let resolved = resolve_scenario(scenario, config_file)?;
    let report = resolved.substitution_report();
    Ok((resolved, report))
}

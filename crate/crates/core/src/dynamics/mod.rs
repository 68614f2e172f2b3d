//! Pulsed two-photon scattering off a χ⁽²⁾ cavity in retarded-time coordinates.
//!
//! Each waveguide is cut into time bins of width `dt`; bin n meets the cavity
//! during step n. The cavity–bin exchange over one step is the exact unitary of
//! the trapezoidal (Cayley) discretisation of the input–output equations and
//! the intracavity three-wave mixing is integrated exactly, combined by Strang
//! splitting.

mod dense;
mod solver;

pub use dense::run_dense;
pub use solver::{run, run_single_photon};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::{PulseSpec, TimeGrid, Waveform};
use crate::schmidt::{fidelity, schmidt_decompose, JointWavefunction, PhaseOutcome, PHASE_OVERLAP_THRESHOLD};

/// Residual cavity population above which the window counts as too short.
pub const RESIDUAL_LIMIT: f64 = 1e-4;
/// Largest admissible dt · max(κ^c, Υ).
pub const MAX_STEP_RATE: f64 = 0.1;
/// Smallest Q^i / Q^c for the lossless Hamiltonian in the coherent regime.
pub const MIN_Q_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Signal,
    Pump,
    SumFrequency,
}

impl Field {
    pub fn name(&self) -> &'static str {
        match self {
            Field::Signal => "signal",
            Field::Pump => "pump",
            Field::SumFrequency => "sf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Carrier angular frequency (rad/s).
    pub omega: f64,
    pub q_coupling: f64,
    pub q_intrinsic: f64,
}

impl FieldParams {
    pub fn new(omega: f64, q_coupling: f64, q_intrinsic: f64) -> Self {
        FieldParams { omega, q_coupling, q_intrinsic }
    }
}

/// Coherent (lossless sum-frequency mode) or incoherent (lossy sum-frequency mode) Zeno regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Cqz,
    Iqz,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Cqz => "cqz",
            Regime::Iqz => "iqz",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    pub signal: FieldParams,
    pub pump: FieldParams,
    pub sf: FieldParams,
    /// Nonlinear coupling rate (rad/s).
    pub upsilon: f64,
    pub regime: Regime,
    pub signal_pulse: Option<PulseSpec>,
    pub pump_pulse: Option<PulseSpec>,
    pub dt: f64,
    pub t_start: f64,
    pub window: f64,
    /// Bin width of the recorded joint output along the signal and pump axes.
    pub output_bin_signal: f64,
    pub output_bin_pump: f64,
}

/// Coupling and intrinsic decay rates of one cavity mode (1/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub coupling: f64,
    pub intrinsic: f64,
}

impl Rates {
    pub fn lifetime(&self) -> f64 {
        1.0 / (self.coupling + self.intrinsic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub signal: Rates,
    pub pump: Rates,
    pub sf: Rates,
}

pub fn field_rates(f: &FieldParams) -> Rates {
    Rates { coupling: f.omega / f.q_coupling, intrinsic: f.omega / f.q_intrinsic }
}

pub fn derive_rates(config: &GateConfig) -> DerivedRates {
    DerivedRates { signal: field_rates(&config.signal), pump: field_rates(&config.pump), sf: field_rates(&config.sf) }
}

impl GateConfig {
    pub fn params(&self, field: Field) -> &FieldParams {
        match field {
            Field::Signal => &self.signal,
            Field::Pump => &self.pump,
            Field::SumFrequency => &self.sf,
        }
    }

    pub fn steps(&self) -> usize {
        (self.window / self.dt).round() as usize
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_start, self.dt, self.steps())
    }

    /// Integer number of fine bins per recorded output bin along each axis.
    pub fn output_factors(&self) -> Result<(usize, usize)> {
        let f = |w: f64, key: &str| {
            let k = (w / self.dt).round();
            if k < 1.0 || ((w / self.dt) - k).abs() > 1e-6 {
                Err(Error::Grid(format!("{key}: {w:e} s is not a whole multiple of dt = {:e} s", self.dt)))
            } else {
                Ok(k as usize)
            }
        };
        Ok((f(self.output_bin_signal, "output_bin_signal")?, f(self.output_bin_pump, "output_bin_pump")?))
    }

    /// Every invariant violation, each naming its configuration key.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (key, f) in [("s", &self.signal), ("p", &self.pump), ("f", &self.sf)] {
            if !(f.omega > 0.0 && f.omega.is_finite()) {
                v.push(format!("omega_{}: carrier frequency must be positive", key));
            }
            if !(f.q_coupling > 0.0) {
                v.push(format!("q_c_{}: coupling Q must be positive", key));
            }
            if !(f.q_intrinsic > 0.0) {
                v.push(format!("q_i_{}: intrinsic Q must be positive", key));
            }
            if self.regime == Regime::Cqz && f.q_coupling * MIN_Q_RATIO > f.q_intrinsic {
                v.push(format!(
                    "q_c_{}: Q^c = {:e} exceeds Q^i/10 = {:e}; the lossless Hamiltonian needs Q^c << Q^i",
                    key,
                    f.q_coupling,
                    f.q_intrinsic / MIN_Q_RATIO
                ));
            }
        }
        let mismatch = self.signal.omega + self.pump.omega - self.sf.omega;
        if mismatch.abs() > 1e-9 * self.sf.omega {
            v.push(format!("omega_f: energy conservation violated, omega_s + omega_p - omega_f = {mismatch:e} rad/s"));
        }
        if !(self.upsilon >= 0.0 && self.upsilon.is_finite()) {
            v.push("upsilon: must be finite and non-negative".into());
        }
        if !(self.dt > 0.0) {
            v.push("dt: must be positive".into());
        } else {
            let r = derive_rates(self);
            let fastest = [r.signal.coupling, r.pump.coupling, r.sf.coupling, self.upsilon].into_iter().fold(0.0, f64::max);
            if self.dt * fastest >= MAX_STEP_RATE {
                v.push(format!(
                    "dt: dt * max(kappa, upsilon) = {:.3} must stay below {MAX_STEP_RATE}",
                    self.dt * fastest
                ));
            }
            if !(self.window > self.dt) {
                v.push("window: must exceed dt".into());
            } else if let Err(Error::Grid(m)) = self.output_factors() {
                v.push(m);
            }
        }
        if self.signal_pulse.is_none() && self.pump_pulse.is_none() {
            v.push("signal_shape: at least one input photon is required".into());
        }
        if v.is_empty() {
            if let Ok(grid) = self.grid() {
                for (key, p) in [("signal", &self.signal_pulse), ("pump", &self.pump_pulse)] {
                    if let Some(spec) = p {
                        if let Err(e) = spec.build(&grid) {
                            v.push(format!("{key}_shape: {e}"));
                        }
                    }
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() { Ok(()) } else { Err(Error::Config(v)) }
    }

    pub fn with_dt(&self, dt: f64) -> GateConfig {
        GateConfig { dt, ..self.clone() }
    }
}

/// Recorded outcome of one gate run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub signal_input: Option<Waveform>,
    pub pump_input: Option<Waveform>,
    /// Two-photon output on the recorded (coarse) grid, present when both photons are sent.
    pub joint: Option<JointWavefunction>,
    /// Probability that both photons left through their own channels, summed on the fine grid.
    pub joint_norm: f64,
    /// Output of each photon scattering alone off the empty cavity.
    pub signal_alone: Option<Waveform>,
    pub pump_alone: Option<Waveform>,
    /// Outgoing sum-frequency photon.
    pub sf_output: Waveform,
    /// Cavity amplitudes after every step: both photons (or the lone photon) inside, and the SF mode.
    pub e_sp: Vec<Complex64>,
    pub e_f: Vec<Complex64>,
    /// Total probability after every step.
    pub norm: Vec<f64>,
    /// Probability still inside the cavity at the end of the window.
    pub residual: f64,
    /// Probability removed by intrinsic damping, resolved by the photon that was absorbed.
    pub dissipated: LossChannels,
    pub warnings: Vec<String>,
}

/// Probability absorbed through each intrinsic loss channel.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossChannels {
    pub signal: f64,
    pub pump: f64,
    pub sum_frequency: f64,
}

impl LossChannels {
    pub fn total(&self) -> f64 {
        self.signal + self.pump + self.sum_frequency
    }
}

impl Trajectory {
    pub fn final_norm(&self) -> f64 {
        self.norm.last().copied().unwrap_or(1.0)
    }

    pub fn norm_history_csv(&self) -> String {
        let mut s = String::from("t_s,norm\n");
        for (i, n) in self.norm.iter().enumerate() {
            s.push_str(&format!("{:.12e},{n:.15e}\n", self.grid.t0 + (i + 1) as f64 * self.grid.dt));
        }
        s
    }

    pub fn cavity_history_csv(&self) -> String {
        let mut s = String::from("t_s,e_sp_re,e_sp_im,e_f_re,e_f_im\n");
        for (i, (a, b)) in self.e_sp.iter().zip(&self.e_f).enumerate() {
            s.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.grid.t0 + (i + 1) as f64 * self.grid.dt,
                a.re,
                a.im,
                b.re,
                b.im
            ));
        }
        s
    }
}

pub(crate) fn window_warning(residual: f64) -> Option<String> {
    (residual > RESIDUAL_LIMIT).then(|| Error::WindowTooShort { residual }.to_string())
}

/// Exchange between a cavity mode with coupling rate κ and one time bin.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coupler {
    pub cos: f64,
    pub sin: f64,
}

impl Coupler {
    pub fn new(kappa: f64, dt: f64) -> Self {
        let phi = 2.0 * ((kappa * dt).sqrt() / 2.0).atan();
        Coupler { cos: phi.cos(), sin: phi.sin() }
    }

    /// (bin, cavity) → (outgoing bin, cavity).
    #[inline(always)]
    pub fn apply(&self, bin: Complex64, cavity: Complex64) -> (Complex64, Complex64) {
        let mi = Complex64::new(0.0, -self.sin);
        (bin * self.cos + cavity * mi, cavity * self.cos + bin * mi)
    }
}

/// exp(M h) for M = [[−g1/2, −iΥ], [−iΥ, −g2/2]] acting on (e_sp, e_f).
pub(crate) fn mixing_propagator(upsilon: f64, g1: f64, g2: f64, h: f64) -> [[Complex64; 2]; 2] {
    let mu = -(g1 + g2) / 4.0;
    let delta = (g1 - g2) / 4.0;
    let s = Complex64::new(delta * delta - upsilon * upsilon, 0.0).sqrt();
    let (ch, shs) = if (s * h).norm() < 1e-8 {
        (Complex64::new(1.0, 0.0), Complex64::new(h, 0.0))
    } else {
        ((s * h).cosh(), (s * h).sinh() / s)
    };
    let e = (mu * h).exp();
    let n = [[Complex64::new(-delta, 0.0), Complex64::new(0.0, -upsilon)], [Complex64::new(0.0, -upsilon), Complex64::new(delta, 0.0)]];
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { ch } else { Complex64::new(0.0, 0.0) };
            out[i][j] = (id + shs * n[i][j]) * e;
        }
    }
    out
}

/// Loss and decay factors used by one run.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepFactors {
    pub signal: Coupler,
    pub pump: Coupler,
    pub sf: Coupler,
    /// Half-step amplitude damping of the signal and pump cavities.
    pub damp_s: f64,
    pub damp_p: f64,
    pub mixing: [[Complex64; 2]; 2],
    /// Intrinsic energy decay rates of the signal, pump and sum-frequency modes.
    pub decay: [f64; 3],
}

impl StepFactors {
    pub fn new(config: &GateConfig) -> Self {
        let r = derive_rates(config);
        let (gs, gp, gf) = match config.regime {
            Regime::Cqz => (0.0, 0.0, 0.0),
            Regime::Iqz => (r.signal.intrinsic, r.pump.intrinsic, r.sf.intrinsic),
        };
        let h = config.dt / 2.0;
        StepFactors {
            signal: Coupler::new(r.signal.coupling, config.dt),
            pump: Coupler::new(r.pump.coupling, config.dt),
            sf: Coupler::new(r.sf.coupling, config.dt),
            damp_s: (-gs * h / 2.0).exp(),
            damp_p: (-gp * h / 2.0).exp(),
            mixing: mixing_propagator(config.upsilon, gs + gp, gf, h),
            decay: [gs, gp, gf],
        }
    }

    /// Half-step mixing of (e_sp, e_f); the norm it removes is shared out by instantaneous decay rate.
    #[inline]
    pub fn mix_tracked(&self, e_sp: Complex64, e_f: Complex64, lost: &mut LossChannels) -> (Complex64, Complex64) {
        let (a, b) = mix(&self.mixing, e_sp, e_f);
        let removed = e_sp.norm_sqr() + e_f.norm_sqr() - a.norm_sqr() - b.norm_sqr();
        if removed != 0.0 {
            let sp = 0.5 * (e_sp.norm_sqr() + a.norm_sqr());
            let f = 0.5 * (e_f.norm_sqr() + b.norm_sqr());
            let w = [self.decay[0] * sp, self.decay[1] * sp, self.decay[2] * f];
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                lost.signal += removed * w[0] / total;
                lost.pump += removed * w[1] / total;
                lost.sum_frequency += removed * w[2] / total;
            }
        }
        (a, b)
    }
}

#[inline(always)]
pub(crate) fn mix(m: &[[Complex64; 2]; 2], a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    (m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b)
}

pub(crate) fn check_finite(step: usize, values: &[Complex64]) -> Result<()> {
    if values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { step, detail: "non-finite amplitude".into() })
    }
}

/// Gate figures of merit computed from a two-photon trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMetrics {
    pub coefficients: Vec<f64>,
    /// |⟨ψ_s,in|ψ_s1⟩|² against the signal input on the recorded grid.
    pub fidelity: f64,
    /// |⟨ψ_p,alone|ψ_p1⟩|² against the pump output without a signal photon.
    pub pump_fidelity: f64,
    pub first_mode_probability: f64,
    /// a₁² divided by the two-photon probability that left the cavity.
    pub conditional_first_mode_probability: f64,
}

/// Schmidt spectrum of the joint output over its support.
pub fn joint_schmidt(traj: &Trajectory) -> Result<(JointWavefunction, crate::schmidt::SchmidtResult)> {
    let joint = traj.joint.as_ref().ok_or_else(|| Error::Data("trajectory has no two-photon output".into()))?;
    let (rows, cols) = joint.support(1e-12);
    let cropped = joint.cropped(rows, cols)?;
    let res = schmidt_decompose(&cropped, 0)?;
    Ok((cropped, res))
}

pub fn gate_metrics(traj: &Trajectory) -> Result<GateMetrics> {
    gate_analysis(traj).map(|(m, _)| m)
}

/// Coarsen a fine-grid waveform onto `g`, which must be a bin-aligned sub-grid.
fn on_grid(w: &Waveform, g: &TimeGrid) -> Waveform {
    let k = (g.dt / w.grid.dt).round() as usize;
    let coarse = w.coarsened(k);
    let start = ((g.t0 - coarse.grid.t0) / g.dt).round() as usize;
    Waveform { grid: *g, values: coarse.values[start..start + g.len].to_vec() }
}

/// Figures of merit together with the Schmidt decomposition they were computed from.
pub fn gate_analysis(traj: &Trajectory) -> Result<(GateMetrics, crate::schmidt::SchmidtResult)> {
    let (cropped, res) = joint_schmidt(traj)?;
    let input = |w: &Option<Waveform>, g: &TimeGrid| -> Result<Waveform> {
        let w = w.as_ref().ok_or_else(|| Error::Data("trajectory lacks an input photon".into()))?;
        on_grid(w, g).normalized()
    };
    let s_in = input(&traj.signal_input, &cropped.signal_grid)?;
    let p_in = input(&traj.pump_alone, &cropped.pump_grid)?;
    let metrics = GateMetrics {
        fidelity: fidelity(&s_in, &res.signal_modes[0])?,
        pump_fidelity: fidelity(&p_in, &res.pump_modes[0])?,
        first_mode_probability: res.first_mode_probability(),
        conditional_first_mode_probability: if traj.joint_norm > 0.0 { res.first_mode_probability() / traj.joint_norm } else { 0.0 },
        coefficients: res.coefficients.clone(),
    };
    Ok((metrics, res))
}

/// Phase of the two-photon output against (signal input) ⊗ (pump scattered alone).
pub fn pump_on_phase(traj: &Trajectory) -> Result<PhaseOutcome> {
    let joint = traj.joint.as_ref().ok_or_else(|| Error::Data("trajectory has no two-photon output".into()))?;
    let missing = || Error::Data("trajectory lacks an input photon".into());
    let s = on_grid(traj.signal_input.as_ref().ok_or_else(missing)?, &joint.signal_grid);
    let p = on_grid(traj.pump_alone.as_ref().ok_or_else(missing)?, &joint.pump_grid);
    let reference = JointWavefunction::product(&s, &p);
    let w = joint.signal_grid.dt * joint.pump_grid.dt;
    let z: Complex64 = reference.values.iter().zip(&joint.values).map(|(r, v)| r.conj() * v).sum::<Complex64>() * w;
    let denom = (reference.norm_sqr() * joint.norm_sqr()).sqrt();
    let mag = if denom > 0.0 { z.norm() / denom } else { 0.0 };
    Ok(if mag > PHASE_OVERLAP_THRESHOLD {
        PhaseOutcome::Defined { phase: z.arg(), overlap: mag }
    } else {
        PhaseOutcome::Undefined { overlap: mag }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossMetrics {
    /// (sum-frequency output + absorption in the signal and sum-frequency modes) / input probability.
    pub signal_energy_loss: f64,
    /// 1 − total probability at the end of the window.
    pub total_norm_deficit: f64,
}

pub fn loss_metrics(traj: &Trajectory) -> LossMetrics {
    let initial = [&traj.signal_input, &traj.pump_input].iter().filter_map(|w| w.as_ref()).map(|w| w.norm_sqr()).product::<f64>();
    let signal_energy_loss = match traj.signal_input {
        Some(_) => (traj.sf_output.norm_sqr() + traj.dissipated.signal + traj.dissipated.sum_frequency) / initial,
        None => 0.0,
    };
    LossMetrics { signal_energy_loss, total_norm_deficit: 1.0 - traj.final_norm() / initial }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub dt: f64,
    pub fidelity: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// Fidelity change between the two finest levels.
    pub fidelity_drift: f64,
    /// Largest Schmidt coefficient change between the two finest levels.
    pub coefficient_drift: f64,
}

pub const CONVERGENCE_TOLERANCE: f64 = 1e-3;

/// Reruns `config` with dt halved `levels − 1` times and compares the two finest results.
pub fn convergence_check(config: &GateConfig, levels: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::Domain("convergence check needs at least two levels".into()));
    }
    let mut out = Vec::with_capacity(levels);
    for k in 0..levels {
        let cfg = config.with_dt(config.dt / f64::powi(2.0, k as i32));
        let m = gate_metrics(&run(&cfg)?)?;
        out.push(ConvergenceLevel { dt: cfg.dt, fidelity: m.fidelity, coefficients: m.coefficients.into_iter().take(8).collect() });
    }
    let (a, b) = (&out[levels - 2], &out[levels - 1]);
    let fidelity_drift = (a.fidelity - b.fidelity).abs();
    let coefficient_drift = a.coefficients.iter().zip(&b.coefficients).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (dt_a, dt_b) = (a.dt, b.dt);
    let report = ConvergenceReport { levels: out, fidelity_drift, coefficient_drift };
    if fidelity_drift.max(coefficient_drift) >= CONVERGENCE_TOLERANCE {
        return Err(Error::NotConverged(format!(
            "fidelity drift {fidelity_drift:.3e}, coefficient drift {coefficient_drift:.3e} between dt = {dt_a:e} and {dt_b:e}"
        )));
    }
    Ok(report)
}

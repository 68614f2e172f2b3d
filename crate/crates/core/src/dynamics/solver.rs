//! Two-photon collision solver with O(N) memory per axis.
//!
//! While one photon has not yet reached the cavity its partner scatters off
//! an empty cavity, so every amplitude with an unarrived photon is the product
//! of that photon's input and a single-photon reference run. Only the branches
//! in which one photon has left and the other sits in the cavity are stored
//! explicitly; finished two-photon amplitudes are binned straight into the
//! recorded output grid.

use num_complex::Complex64;

use super::{check_finite, window_warning, Coupler, Field, GateConfig, LossChannels, StepFactors, Trajectory};
use crate::error::{Error, Result};
use crate::pulse::Waveform;
use crate::schmidt::JointWavefunction;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A single photon scattering off an empty cavity.
pub(crate) struct SingleRun {
    pub output: Vec<Complex64>,
    /// Cavity amplitude entering the exchange of step n.
    pub pre: Vec<Complex64>,
    /// Cavity amplitude at the end of step n.
    pub post: Vec<Complex64>,
}

pub(crate) fn single_run(input: &[Complex64], coupler: Coupler, damp: f64) -> SingleRun {
    let mut run = SingleRun {
        output: Vec::with_capacity(input.len()),
        pre: Vec::with_capacity(input.len()),
        post: Vec::with_capacity(input.len()),
    };
    let mut cav = ZERO;
    for &a in input {
        cav *= damp;
        run.pre.push(cav);
        let (b, c) = coupler.apply(a, cav);
        cav = c * damp;
        run.output.push(b);
        run.post.push(cav);
    }
    run
}

/// Probability removed by the two damping half-steps of every step: sums weighted by
/// `before[n]` and `after[n]`, the partner's pending probability at each half-step.
fn damping_loss(run: &SingleRun, damp: f64, before: &[f64], after: &[f64]) -> f64 {
    if damp == 1.0 {
        return 0.0;
    }
    let mut prev = 0.0;
    let mut lost = 0.0;
    for n in 0..run.pre.len() {
        let post = run.post[n].norm_sqr();
        lost += (prev - run.pre[n].norm_sqr()) * before[n] + post * (1.0 / (damp * damp) - 1.0) * after[n];
        prev = post;
    }
    lost
}

fn suffix_norms(v: &[Complex64]) -> Vec<f64> {
    let mut s = vec![0.0; v.len() + 1];
    for i in (0..v.len()).rev() {
        s[i] = s[i + 1] + v[i].norm_sqr();
    }
    s
}

fn prefix_norms(v: &[Complex64]) -> Vec<f64> {
    let mut s = vec![0.0; v.len() + 1];
    for i in 0..v.len() {
        s[i + 1] = s[i] + v[i].norm_sqr();
    }
    s
}

/// Raw result of the two-photon evolution on the fine grid.
pub(crate) struct TwoPhotonRun {
    /// Finished two-photon bin amplitudes summed over output blocks, row-major.
    pub blocks: Vec<Complex64>,
    pub joint_norm: f64,
    pub sf: Vec<Complex64>,
    pub e_sp: Vec<Complex64>,
    pub e_f: Vec<Complex64>,
    pub norm: Vec<f64>,
    pub residual: f64,
    pub dissipated: LossChannels,
    pub signal_ref: SingleRun,
    pub pump_ref: SingleRun,
}

pub(crate) fn evolve(a: &[Complex64], b: &[Complex64], f: &StepFactors, ks: usize, kp: usize) -> Result<TwoPhotonRun> {
    let n_steps = a.len();
    assert_eq!(b.len(), n_steps);
    let sref = single_run(a, f.signal, f.damp_s);
    let pref = single_run(b, f.pump, f.damp_p);
    let rows = n_steps.div_ceil(ks);
    let cols = n_steps.div_ceil(kp);
    let mut blocks = vec![ZERO; rows * cols];

    let suf_a = suffix_norms(a);
    let suf_b = suffix_norms(b);
    let out_s = prefix_norms(&sref.output);
    let out_p = prefix_norms(&pref.output);

    // s_out[i]: signal left in bin i, pump in the cavity; p_out[j] likewise.
    let mut s_out: Vec<Complex64> = Vec::with_capacity(n_steps);
    let mut p_out: Vec<Complex64> = Vec::with_capacity(n_steps);
    let (mut e_sp, mut e_f) = (ZERO, ZERO);
    let mut sf = Vec::with_capacity(n_steps);
    let mut e_sp_hist = Vec::with_capacity(n_steps);
    let mut e_f_hist = Vec::with_capacity(n_steps);
    let mut norm = Vec::with_capacity(n_steps);
    let (mut finished, mut sf_norm) = (0.0, 0.0);
    let (ds, dp) = (f.damp_s, f.damp_p);
    let mut lost = LossChannels {
        signal: damping_loss(&sref, ds, &suf_b, &suf_b[1..]),
        pump: damping_loss(&pref, dp, &suf_a, &suf_a[1..]),
        sum_frequency: 0.0,
    };
    let (mut prev_s, mut prev_p) = (0.0, 0.0);
    // before a photon's first nonzero bin every branch involving it is exactly zero
    let first = |v: &[Complex64], k: usize| v.iter().position(|z| *z != ZERO).map_or(n_steps, |i| i / k * k);
    let (i0, j0) = (first(a, ks), first(b, kp));

    for n in 0..n_steps {
        (e_sp, e_f) = f.mix_tracked(e_sp, e_f, &mut lost);
        let (an, bn) = (a[n], b[n]);
        let (row, col) = (n / ks, n / kp);

        // signal bin n meets the signal cavity while the pump has already left in bin j < n
        let mut sum_p = 0.0;
        let j_lo = if n >= i0 { j0.min(n) } else { n };
        let row_blocks = &mut blocks[row * cols + j_lo / kp..(row + 1) * cols];
        for ((p_chunk, ref_chunk), block) in
            p_out[j_lo..].chunks_mut(kp).zip(pref.output[j_lo..n].chunks(kp)).zip(row_blocks.iter_mut())
        {
            let mut acc = ZERO;
            for (p, r) in p_chunk.iter_mut().zip(ref_chunk) {
                let (x, y) = f.signal.apply(an * r, *p * ds);
                let y = y * ds;
                *p = y;
                acc += x;
                finished += x.norm_sqr();
                sum_p += y.norm_sqr();
            }
            *block += acc;
        }

        // pump bin n meets the pump cavity while the signal has already left in bin i < n
        let mut sum_s = 0.0;
        let i_lo = if n >= j0 { i0.min(n) } else { n };
        for (bi, (s_chunk, ref_chunk)) in
            s_out[i_lo..].chunks_mut(ks).zip(sref.output[i_lo..n].chunks(ks)).enumerate().map(|(k, c)| (k + i_lo / ks, c))
        {
            let mut acc = ZERO;
            for (s, r) in s_chunk.iter_mut().zip(ref_chunk) {
                let (x, y) = f.pump.apply(r * bn, *s * dp);
                let y = y * dp;
                *s = y;
                acc += x;
                finished += x.norm_sqr();
                sum_s += y.norm_sqr();
            }
            blocks[bi * cols + col] += acc;
        }

        // both photons in bin n
        let mut both = an * bn;
        let mut sig_bin = an * pref.pre[n];
        let mut pump_bin = bn * sref.pre[n];
        (both, pump_bin) = f.signal.apply(both, pump_bin);
        (sig_bin, e_sp) = f.signal.apply(sig_bin, e_sp);
        (both, sig_bin) = f.pump.apply(both, sig_bin);
        (pump_bin, e_sp) = f.pump.apply(pump_bin, e_sp);
        blocks[row * cols + col] += both;
        finished += both.norm_sqr();
        let (sig_bin, pump_bin) = (sig_bin * dp, pump_bin * ds);
        sum_s += sig_bin.norm_sqr();
        sum_p += pump_bin.norm_sqr();
        s_out.push(sig_bin);
        p_out.push(pump_bin);
        // every explicit branch was damped once before and once after its exchange
        lost.signal += prev_p * (1.0 - ds * ds) + sum_p * (1.0 / (ds * ds) - 1.0);
        lost.pump += prev_s * (1.0 - dp * dp) + sum_s * (1.0 / (dp * dp) - 1.0);
        (prev_s, prev_p) = (sum_s, sum_p);

        let (out_f, ef) = f.sf.apply(ZERO, e_f);
        e_f = ef;
        sf.push(out_f);
        sf_norm += out_f.norm_sqr();

        (e_sp, e_f) = f.mix_tracked(e_sp, e_f, &mut lost);
        check_finite(n, &[e_sp, e_f])?;
        e_sp_hist.push(e_sp);
        e_f_hist.push(e_f);

        let m = n + 1;
        let pending = suf_a[m] * suf_b[m]
            + out_s[m] * suf_b[m]
            + suf_a[m] * out_p[m]
            + sref.post[n].norm_sqr() * suf_b[m]
            + pref.post[n].norm_sqr() * suf_a[m];
        let inside = sum_s + sum_p + e_sp.norm_sqr() + e_f.norm_sqr();
        norm.push(finished + sf_norm + inside + pending);
    }
    check_finite(n_steps, &blocks)?;
    let residual = s_out.iter().chain(&p_out).map(|v| v.norm_sqr()).sum::<f64>() + e_sp.norm_sqr() + e_f.norm_sqr();
    Ok(TwoPhotonRun {
        blocks,
        joint_norm: finished,
        sf,
        e_sp: e_sp_hist,
        e_f: e_f_hist,
        norm,
        residual,
        dissipated: lost,
        signal_ref: sref,
        pump_ref: pref,
    })
}

/// Pump-OFF (or signal-OFF) reduction: one photon and its own cavity mode.
pub fn run_single_photon(field: Field, config: &GateConfig) -> Result<Trajectory> {
    let spec = match field {
        Field::Signal => config.signal_pulse.as_ref(),
        Field::Pump => config.pump_pulse.as_ref(),
        Field::SumFrequency => return Err(Error::Domain("the sum-frequency mode has no input photon".into())),
    }
    .ok_or_else(|| Error::Config(vec![format!("{}_shape: no pulse configured", field.name())]))?;
    let mut cfg = config.clone();
    match field {
        Field::Signal => cfg.pump_pulse = None,
        _ => cfg.signal_pulse = None,
    }
    cfg.validate()?;
    let grid = cfg.grid()?;
    let input = spec.build(&grid)?;
    let f = StepFactors::new(&cfg);
    let (coupler, damp) = if field == Field::Signal { (f.signal, f.damp_s) } else { (f.pump, f.damp_p) };
    let amps = input.bin_amplitudes();
    let run = single_run(&amps, coupler, damp);
    check_finite(amps.len(), &run.output)?;
    let suf = suffix_norms(&amps);
    let out = prefix_norms(&run.output);
    let norm = (0..amps.len()).map(|n| out[n + 1] + run.post[n].norm_sqr() + suf[n + 1]).collect();
    let residual = run.post.last().map_or(0.0, |c| c.norm_sqr());
    let ones = vec![1.0; amps.len() + 1];
    let absorbed = damping_loss(&run, damp, &ones, &ones);
    let mut dissipated = LossChannels::default();
    if field == Field::Signal {
        dissipated.signal = absorbed;
    } else {
        dissipated.pump = absorbed;
    }
    let output = Waveform::from_bin_amplitudes(grid, &run.output);
    let (signal_input, pump_input, signal_alone, pump_alone) = if field == Field::Signal {
        (Some(input), None, Some(output), None)
    } else {
        (None, Some(input), None, Some(output))
    };
    Ok(Trajectory {
        grid,
        signal_input,
        pump_input,
        joint: None,
        joint_norm: 0.0,
        signal_alone,
        pump_alone,
        sf_output: Waveform::zeros(grid),
        e_sp: run.post,
        e_f: vec![ZERO; amps.len()],
        norm,
        residual,
        dissipated,
        warnings: window_warning(residual).into_iter().collect(),
    })
}

pub(crate) fn joint_from_blocks(config: &GateConfig, blocks: Vec<Complex64>, ks: usize, kp: usize) -> Result<JointWavefunction> {
    let grid = config.grid()?;
    let scale = 1.0 / (ks as f64 * kp as f64 * config.dt);
    JointWavefunction::new(grid.coarsened(ks), grid.coarsened(kp), blocks.into_iter().map(|v| v * scale).collect())
}

/// Full two-photon gate run; falls back to the single-photon reduction when one input is absent.
pub fn run(config: &GateConfig) -> Result<Trajectory> {
    match (&config.signal_pulse, &config.pump_pulse) {
        (Some(_), None) => return run_single_photon(Field::Signal, config),
        (None, Some(_)) => return run_single_photon(Field::Pump, config),
        _ => {}
    }
    config.validate()?;
    let grid = config.grid()?;
    let (ks, kp) = config.output_factors()?;
    let s_in = config.signal_pulse.as_ref().map(|p| p.build(&grid)).transpose()?.expect("validated");
    let p_in = config.pump_pulse.as_ref().map(|p| p.build(&grid)).transpose()?.expect("validated");
    let f = StepFactors::new(config);
    let raw = evolve(&s_in.bin_amplitudes(), &p_in.bin_amplitudes(), &f, ks, kp)?;
    Ok(Trajectory {
        grid,
        joint: Some(joint_from_blocks(config, raw.blocks, ks, kp)?),
        joint_norm: raw.joint_norm,
        signal_alone: Some(Waveform::from_bin_amplitudes(grid, &raw.signal_ref.output)),
        pump_alone: Some(Waveform::from_bin_amplitudes(grid, &raw.pump_ref.output)),
        sf_output: Waveform::from_bin_amplitudes(grid, &raw.sf),
        signal_input: Some(s_in),
        pump_input: Some(p_in),
        e_sp: raw.e_sp,
        e_f: raw.e_f,
        norm: raw.norm,
        residual: raw.residual,
        dissipated: raw.dissipated,
        warnings: window_warning(raw.residual).into_iter().collect(),
    })
}

//! Reference solver holding the full two-photon grid; quadratic memory, small windows only.

use num_complex::Complex64;

use super::solver::{joint_from_blocks, single_run};
use super::{check_finite, window_warning, GateConfig, LossChannels, StepFactors, Trajectory};
use crate::error::{Error, Result};
use crate::pulse::Waveform;

/// Largest number of steps accepted by [`run_dense`].
pub const MAX_DENSE_STEPS: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Same physics as [`super::run`], evolving every two-photon amplitude explicitly.
pub fn run_dense(config: &GateConfig) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.grid()?;
    let n = grid.len;
    if n > MAX_DENSE_STEPS {
        return Err(Error::Range(format!("dense solver limited to {MAX_DENSE_STEPS} steps, got {n}")));
    }
    let (ks, kp) = config.output_factors()?;
    let missing = || Error::Config(vec!["signal_shape: dense solver needs both photons".into()]);
    let s_in = config.signal_pulse.as_ref().ok_or_else(missing)?.build(&grid)?;
    let p_in = config.pump_pulse.as_ref().ok_or_else(missing)?.build(&grid)?;
    let (a, b) = (s_in.bin_amplitudes(), p_in.bin_amplitudes());
    let f = StepFactors::new(config);

    let mut psi: Vec<Complex64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    // sig_bin[i]: signal in bin i with the pump in its cavity; pump_bin[j] likewise
    let mut sig_bin = vec![ZERO; n];
    let mut pump_bin = vec![ZERO; n];
    let (mut e_sp, mut e_f) = (ZERO, ZERO);
    let mut sf = Vec::with_capacity(n);
    let (mut e_sp_hist, mut e_f_hist, mut norm) = (Vec::new(), Vec::new(), Vec::new());
    let mut sf_norm = 0.0;
    let mut lost = LossChannels::default();
    let damp = |v: &mut [Complex64], d: f64| -> f64 {
        let before: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        v.iter_mut().for_each(|x| *x *= d);
        before * (1.0 - d * d)
    };
    let sref = single_run(&a, f.signal, f.damp_s);
    let pref = single_run(&b, f.pump, f.damp_p);

    for step in 0..n {
        (e_sp, e_f) = f.mix_tracked(e_sp, e_f, &mut lost);
        lost.pump += damp(&mut sig_bin, f.damp_p);
        lost.signal += damp(&mut pump_bin, f.damp_s);

        for j in 0..n {
            let (x, y) = f.signal.apply(psi[step * n + j], pump_bin[j]);
            psi[step * n + j] = x;
            pump_bin[j] = y;
        }
        (sig_bin[step], e_sp) = f.signal.apply(sig_bin[step], e_sp);
        for i in 0..n {
            let (x, y) = f.pump.apply(psi[i * n + step], sig_bin[i]);
            psi[i * n + step] = x;
            sig_bin[i] = y;
        }
        (pump_bin[step], e_sp) = f.pump.apply(pump_bin[step], e_sp);

        let (out_f, ef) = f.sf.apply(ZERO, e_f);
        e_f = ef;
        sf.push(out_f);
        sf_norm += out_f.norm_sqr();

        lost.pump += damp(&mut sig_bin, f.damp_p);
        lost.signal += damp(&mut pump_bin, f.damp_s);
        (e_sp, e_f) = f.mix_tracked(e_sp, e_f, &mut lost);
        check_finite(step, &[e_sp, e_f])?;
        e_sp_hist.push(e_sp);
        e_f_hist.push(e_f);
        let total: f64 = psi.iter().chain(&sig_bin).chain(&pump_bin).map(|v| v.norm_sqr()).sum();
        norm.push(total + sf_norm + e_sp.norm_sqr() + e_f.norm_sqr());
    }
    check_finite(n, &psi)?;

    let rows = n.div_ceil(ks);
    let cols = n.div_ceil(kp);
    let mut blocks = vec![ZERO; rows * cols];
    for i in 0..n {
        for j in 0..n {
            blocks[(i / ks) * cols + j / kp] += psi[i * n + j];
        }
    }
    let joint_norm = psi.iter().map(|v| v.norm_sqr()).sum();
    let residual = sig_bin.iter().chain(&pump_bin).map(|v| v.norm_sqr()).sum::<f64>() + e_sp.norm_sqr() + e_f.norm_sqr();
    Ok(Trajectory {
        grid,
        joint: Some(joint_from_blocks(config, blocks, ks, kp)?),
        joint_norm,
        signal_alone: Some(Waveform::from_bin_amplitudes(grid, &sref.output)),
        pump_alone: Some(Waveform::from_bin_amplitudes(grid, &pref.output)),
        sf_output: Waveform::from_bin_amplitudes(grid, &sf),
        signal_input: Some(s_in),
        pump_input: Some(p_in),
        e_sp: e_sp_hist,
        e_f: e_f_hist,
        norm,
        residual,
        dissipated: lost,
        warnings: window_warning(residual).into_iter().collect(),
    })
}

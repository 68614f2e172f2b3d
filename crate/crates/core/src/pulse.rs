//! Single-photon temporal wave packets on a uniform time grid.

use std::f64::consts::LN_2;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniform grid of `len` bins of width `dt` starting at `t0`; sample i sits at
/// the bin centre t0 + (i + 1/2) dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0) || len == 0 || !t0.is_finite() {
            return Err(Error::Grid(format!("invalid grid t0={t0} dt={dt} len={len}")));
        }
        Ok(TimeGrid { t0, dt, len })
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + (i as f64 + 0.5) * self.dt
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.len as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.time(i))
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.len == other.len
            && ((self.dt - other.dt) / self.dt).abs() < 1e-12
            && (self.t0 - other.t0).abs() < 1e-9 * self.dt
    }

    /// Coarser grid merging `factor` bins into one.
    pub fn coarsened(&self, factor: usize) -> TimeGrid {
        TimeGrid { t0: self.t0, dt: self.dt * factor as f64, len: self.len.div_ceil(factor) }
    }
}

/// Complex amplitude ψ(t) sampled on a grid; Σ|ψ|² dt is the photon probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
}

impl Waveform {
    pub fn zeros(grid: TimeGrid) -> Self {
        Waveform { grid, values: vec![Complex64::new(0.0, 0.0); grid.len] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dt
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Data("cannot normalise a zero or non-finite waveform".into()));
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Waveform { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Bin amplitudes ψ_i √dt, whose squared magnitudes sum to the norm.
    pub fn bin_amplitudes(&self) -> Vec<Complex64> {
        let s = self.grid.dt.sqrt();
        self.values.iter().map(|v| v * s).collect()
    }

    pub fn from_bin_amplitudes(grid: TimeGrid, amps: &[Complex64]) -> Self {
        let s = 1.0 / grid.dt.sqrt();
        Waveform { grid, values: amps.iter().map(|v| v * s).collect() }
    }

    /// Mirror image about time `t_c`, which must sit on a bin boundary or centre.
    pub fn time_reversed_about(&self, t_c: f64) -> Result<Self> {
        let g = self.grid;
        let shift = 2.0 * (t_c - g.t0) / g.dt - 1.0;
        let k = shift.round();
        if (shift - k).abs() > 1e-6 {
            return Err(Error::Grid(format!("reflection point {t_c:e} not aligned with the grid")));
        }
        let k = k as i64;
        let values = (0..g.len as i64)
            .map(|i| {
                let j = k - i;
                if j >= 0 && (j as usize) < g.len {
                    self.values[j as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(Waveform { grid: g, values })
    }

    /// Box-car projection onto a grid `factor` times coarser.
    pub fn coarsened(&self, factor: usize) -> Self {
        let grid = self.grid.coarsened(factor);
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len];
        for (i, v) in self.values.iter().enumerate() {
            values[i / factor] += v / factor as f64;
        }
        Waveform { grid, values }
    }

    pub fn peak_time(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, v)| if v.norm_sqr() > acc.1 { (i, v.norm_sqr()) } else { acc });
        self.grid.time(i)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_s,re,im\n");
        for (t, v) in self.grid.times().zip(&self.values) {
            s.push_str(&format!("{t:.12e},{:.12e},{:.12e}\n", v.re, v.im));
        }
        s
    }
}

/// Temporal shape of an input photon.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// Gaussian with intensity FWHM `fwhm` centred at `center`.
    Gaussian { fwhm: f64, center: f64 },
    /// √κ e^{κ(t − t_end)/2} for t ≤ t_end: the time-reversed leakage mode of a cavity with rate κ.
    RisingExponential { kappa: f64, t_end: f64 },
    /// Samples (t, ψ) interpolated linearly onto the grid.
    Tabulated { samples: Vec<(f64, Complex64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub carrier_phase: f64,
}

/// e^{-20}: energy left beyond the 20/κ truncation of a rising exponential.
pub const EXP_TRUNCATION: f64 = 20.0;

/// Unit-norm Gaussian on `grid`.
pub fn gaussian(grid: &TimeGrid, fwhm: f64, t0: f64) -> Result<Waveform> {
    if !(fwhm > 0.0) {
        return Err(Error::Domain(format!("fwhm {fwhm} must be positive")));
    }
    if fwhm < 4.0 * grid.dt {
        return Err(Error::Resolution(format!("fwhm {fwhm:e} s below four grid cells ({:e} s)", 4.0 * grid.dt)));
    }
    // intensity falls to 1e-14 of its peak 3.4 fwhm from the centre
    let reach = 3.4 * fwhm;
    if t0 - reach < grid.t0 || t0 + reach > grid.end() {
        return Err(Error::Truncation(format!("gaussian at {t0:e} s does not fit in the window")));
    }
    let a = 2.0 * LN_2 / (fwhm * fwhm);
    let values = grid.times().map(|t| Complex64::new((-a * (t - t0).powi(2)).exp(), 0.0)).collect();
    Waveform { grid: *grid, values }.normalized()
}

/// Unit-norm rising exponential truncated 20/κ before `t_end`.
pub fn rising_exponential(grid: &TimeGrid, kappa: f64, t_end: f64) -> Result<Waveform> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa {kappa} must be positive")));
    }
    let t_start = t_end - EXP_TRUNCATION / kappa;
    if t_start < grid.t0 - 1e-9 * grid.dt || t_end > grid.end() {
        return Err(Error::Truncation(format!(
            "window [{:e}, {:e}] s shorter than the 20/kappa truncation before {t_end:e} s",
            grid.t0,
            grid.end()
        )));
    }
    // exact bin averages of √κ e^{κ(t − t_end)/2} over [max(lo, t_start), min(hi, t_end)]
    let half = 0.5 * kappa;
    let values = (0..grid.len)
        .map(|i| {
            let lo = (grid.t0 + i as f64 * grid.dt).max(t_start);
            let hi = (grid.t0 + (i + 1) as f64 * grid.dt).min(t_end);
            if hi <= lo {
                return Complex64::new(0.0, 0.0);
            }
            let integral = kappa.sqrt() / half * ((half * (hi - t_end)).exp() - (half * (lo - t_end)).exp());
            Complex64::new(integral / grid.dt, 0.0)
        })
        .collect();
    Waveform { grid: *grid, values }.normalized()
}

/// Linear interpolation of tabulated samples onto `grid`, then normalised.
pub fn tabulated(grid: &TimeGrid, samples: &[(f64, Complex64)]) -> Result<Waveform> {
    if samples.len() < 2 || samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Data("tabulated pulse needs at least two strictly increasing times".into()));
    }
    let values = grid
        .times()
        .map(|t| {
            let k = samples.partition_point(|s| s.0 <= t);
            if k == 0 || k == samples.len() {
                return Complex64::new(0.0, 0.0);
            }
            let (t0, v0) = samples[k - 1];
            let (t1, v1) = samples[k];
            v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
        })
        .collect();
    Waveform { grid: *grid, values }.normalized()
}

/// Parse a `t_seconds,re,im` CSV (header optional).
pub fn read_tabulated_csv(path: &Path) -> Result<Vec<(f64, Complex64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse::<f64>().ok()).collect();
        match parsed {
            Some(v) if v.len() == 3 => out.push((v[0], Complex64::new(v[1], v[2]))),
            None if lineno == 0 => continue,
            _ => return Err(Error::Data(format!("{}:{}: expected t_seconds,re,im", path.display(), lineno + 1))),
        }
    }
    Ok(out)
}

impl PulseSpec {
    pub fn build(&self, grid: &TimeGrid) -> Result<Waveform> {
        let w = match &self.shape {
            PulseShape::Gaussian { fwhm, center } => gaussian(grid, *fwhm, *center)?,
            PulseShape::RisingExponential { kappa, t_end } => rising_exponential(grid, *kappa, *t_end)?,
            PulseShape::Tabulated { samples } => tabulated(grid, samples)?,
        };
        Ok(w.scaled(Complex64::from_polar(1.0, self.carrier_phase)))
    }
}

/// Discrete inner product ⟨a|b⟩ = Σ a* b dt.
pub fn overlap(a: &Waveform, b: &Waveform) -> Result<Complex64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::Grid("waveforms live on different grids".into()));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum::<Complex64>() * a.grid.dt)
}

/// Unitary DFT (1/√N scaling) in the e^{-iωt} convention.
pub fn unitary_fft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

pub fn unitary_ifft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Angular frequency of FFT bin k for `n` samples spaced `dt`.
pub fn fft_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * std::f64::consts::PI * kk / (n as f64 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 1e-9, 4000).unwrap()
    }

    #[test]
    fn gaussian_fwhm_and_norm() {
        let g = grid();
        let w = gaussian(&g, 500e-9, 2000e-9).unwrap();
        assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
        let peak = w.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        // bins whose intensity exceeds half maximum span the FWHM to within one cell
        let above = w.values.iter().filter(|v| v.norm_sqr() >= 0.5 * peak).count() as f64;
        assert!((above * g.dt - 500e-9).abs() <= g.dt);
        assert!(gaussian(&g, 3e-9, 2000e-9).is_err());
        assert!(gaussian(&g, 500e-9, 500e-9).is_err());
    }

    #[test]
    fn gaussian_shift_is_exact_translation() {
        let g = grid();
        let a = gaussian(&g, 300e-9, 1800e-9).unwrap();
        let b = gaussian(&g, 300e-9, 1850e-9).unwrap();
        for i in 0..g.len - 50 {
            assert!((a.values[i] - b.values[i + 50]).norm() < 1e-12 * a.values[1500].norm());
        }
    }

    #[test]
    fn rising_exponential_slope_and_reversal() {
        let kappa = 1.0 / 82e-9;
        let g = grid();
        let w = rising_exponential(&g, kappa, 3000e-9).unwrap();
        assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
        // two cavity lifetimes before the cutoff the amplitude is e times smaller
        let i_end = 2999;
        let steps = (2.0 / kappa / g.dt).round() as usize;
        let ratio = w.values[i_end].re / w.values[i_end - steps].re;
        let expected = (0.5 * kappa * steps as f64 * g.dt).exp();
        assert!((ratio - expected).abs() < 1e-9 * expected);
        let rev = w.time_reversed_about(3000e-9).unwrap();
        assert!((rev.values[3000] - w.values[2999]).norm() < 1e-15);
        assert!(rev.values[2999].norm() < 1e-15);
        assert!(rising_exponential(&g, kappa, 1000e-9).is_err());
    }

    #[test]
    fn disjoint_and_self_overlaps() {
        let g = grid();
        let a = rising_exponential(&g, 1e8, 1000e-9).unwrap();
        let b = rising_exponential(&g, 1e8, 3000e-9).unwrap();
        assert!(overlap(&a, &b).unwrap().norm() < 1e-30);
        assert!((overlap(&a, &a).unwrap().re - 1.0).abs() < 1e-12);
        let other = Waveform::zeros(TimeGrid::new(0.0, 2e-9, 2000).unwrap());
        assert!(overlap(&a, &other).is_err());
    }

    #[test]
    fn gaussian_overlap_matches_closed_form() {
        // ψ ∝ exp(-a (t - t0)^2) with a = 2 ln2 / fwhm^2; ⟨ψ1|ψ2⟩ = exp(-a Δ² / 2)
        let g = TimeGrid::new(0.0, 0.5e-9, 8000).unwrap();
        let fwhm = 500e-9;
        let a = gaussian(&g, fwhm, 2000e-9).unwrap();
        let b = gaussian(&g, fwhm, 2060e-9).unwrap();
        let alpha = 2.0 * LN_2 / (fwhm * fwhm);
        let expected = (-alpha * (60e-9f64).powi(2) / 2.0).exp();
        assert!((overlap(&a, &b).unwrap().re - expected).abs() < 1e-10);
    }

    #[test]
    fn fft_preserves_norm() {
        let g = grid();
        let w = gaussian(&g, 200e-9, 1500e-9).unwrap();
        let spec = unitary_fft(&w.values);
        let n0: f64 = w.values.iter().map(|v| v.norm_sqr()).sum();
        let n1: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        assert!(((n0 - n1) / n0).abs() < 1e-10);
        let back = unitary_ifft(&spec);
        assert!(back.iter().zip(&w.values).all(|(a, b)| (a - b).norm() < 1e-9));
    }

    #[test]
    fn tabulated_interpolates() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let w = tabulated(&g, &[(0.0, Complex64::new(1.0, 0.0)), (10.0, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(w.values.iter().all(|v| (v.re - w.values[0].re).abs() < 1e-12));
        assert!(tabulated(&g, &[(1.0, Complex64::new(1.0, 0.0))]).is_err());
    }
}

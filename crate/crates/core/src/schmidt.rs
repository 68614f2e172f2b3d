//! Schmidt decomposition of two-photon output wavefunctions and gate figures of merit.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::{overlap, TimeGrid, Waveform};

/// Joint amplitude ψ(t, t′) of a signal photon at t and a pump photon at t′,
/// stored row-major with the signal time as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct JointWavefunction {
    pub signal_grid: TimeGrid,
    pub pump_grid: TimeGrid,
    pub values: Vec<Complex64>,
}

impl JointWavefunction {
    pub fn new(signal_grid: TimeGrid, pump_grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != signal_grid.len * pump_grid.len {
            return Err(Error::Grid(format!(
                "joint array holds {} values, grid needs {}x{}",
                values.len(),
                signal_grid.len,
                pump_grid.len
            )));
        }
        Ok(JointWavefunction { signal_grid, pump_grid, values })
    }

    pub fn product(signal: &Waveform, pump: &Waveform) -> Self {
        let mut values = Vec::with_capacity(signal.values.len() * pump.values.len());
        for s in &signal.values {
            values.extend(pump.values.iter().map(|p| s * p));
        }
        JointWavefunction { signal_grid: signal.grid, pump_grid: pump.grid, values }
    }

    pub fn rows(&self) -> usize {
        self.signal_grid.len
    }

    pub fn cols(&self) -> usize {
        self.pump_grid.len
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.pump_grid.len + j]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.signal_grid.dt * self.pump_grid.dt
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        JointWavefunction { values: self.values.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    /// L² distance to another wavefunction on the same grids.
    pub fn distance(&self, other: &JointWavefunction) -> Result<f64> {
        if !self.signal_grid.same_as(&other.signal_grid) || !self.pump_grid.same_as(&other.pump_grid) {
            return Err(Error::Grid("joint wavefunctions live on different grids".into()));
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.signal_grid.dt * self.pump_grid.dt).sqrt())
    }

    pub fn transposed(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let mut values = vec![Complex64::new(0.0, 0.0); r * c];
        for i in 0..r {
            for j in 0..c {
                values[j * r + i] = self.values[i * c + j];
            }
        }
        JointWavefunction { signal_grid: self.pump_grid, pump_grid: self.signal_grid, values }
    }

    /// Smallest rectangle holding every row and column whose probability exceeds
    /// `threshold` times the total.
    pub fn support(&self, threshold: f64) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (r, c) = (self.rows(), self.cols());
        let mut row = vec![0.0; r];
        let mut col = vec![0.0; c];
        for i in 0..r {
            for j in 0..c {
                let p = self.values[i * c + j].norm_sqr();
                row[i] += p;
                col[j] += p;
            }
        }
        let total: f64 = row.iter().sum();
        let span = |w: &[f64]| {
            let lo = w.iter().position(|&x| x > threshold * total).unwrap_or(0);
            let hi = w.iter().rposition(|&x| x > threshold * total).map_or(0, |h| h + 1);
            lo..hi.max(lo)
        };
        (span(&row), span(&col))
    }

    pub fn cropped(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Result<Self> {
        if rows.end > self.rows() || cols.end > self.cols() || rows.is_empty() || cols.is_empty() {
            return Err(Error::Grid(format!("crop {rows:?} x {cols:?} outside {}x{}", self.rows(), self.cols())));
        }
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            values.extend_from_slice(&self.values[i * self.cols() + cols.start..i * self.cols() + cols.end]);
        }
        let sg = TimeGrid { t0: self.signal_grid.t0 + rows.start as f64 * self.signal_grid.dt, len: rows.len(), ..self.signal_grid };
        let pg = TimeGrid { t0: self.pump_grid.t0 + cols.start as f64 * self.pump_grid.dt, len: cols.len(), ..self.pump_grid };
        Ok(JointWavefunction { signal_grid: sg, pump_grid: pg, values })
    }

    /// Two-line grid header `nt,nt_prime,dt_s,dt_prime_s,t0_s,t0_prime_s` followed by
    /// a row-major `i,j,re,im` table.
    pub fn to_csv(&self) -> String {
        let (sg, pg) = (self.signal_grid, self.pump_grid);
        let mut s = String::from("nt,nt_prime,dt_s,dt_prime_s,t0_s,t0_prime_s\n");
        let _ = writeln!(s, "{},{},{:.12e},{:.12e},{:.12e},{:.12e}", sg.len, pg.len, sg.dt, pg.dt, sg.t0, pg.t0);
        s.push_str("i,j,re,im\n");
        for i in 0..sg.len {
            for j in 0..pg.len {
                let v = self.at(i, j);
                let _ = writeln!(s, "{i},{j},{:.12e},{:.12e}", v.re, v.im);
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtResult {
    /// Descending, non-negative; their squares sum to the norm of the decomposed state.
    pub coefficients: Vec<f64>,
    pub signal_modes: Vec<Waveform>,
    pub pump_modes: Vec<Waveform>,
    pub rank: usize,
}

impl SchmidtResult {
    pub fn total(&self) -> f64 {
        self.coefficients.iter().map(|a| a * a).sum()
    }

    /// a₁², the probability that the pair occupies the first mode pair.
    pub fn first_mode_probability(&self) -> f64 {
        self.coefficients.first().map_or(0.0, |a| a * a)
    }

    /// a₁² divided by the surviving two-photon probability.
    pub fn conditional_first_mode_probability(&self) -> f64 {
        let t = self.total();
        if t > 0.0 { self.first_mode_probability() / t } else { 0.0 }
    }

    pub fn tail_weight(&self, from: usize) -> f64 {
        self.coefficients.iter().skip(from).map(|a| a * a).sum()
    }

    pub fn coefficients_csv(&self) -> String {
        let mut s = String::from("n,a_n,a_n_sq\n");
        for (n, a) in self.coefficients.iter().enumerate() {
            let _ = writeln!(s, "{},{a:.12e},{:.12e}", n + 1, a * a);
        }
        s
    }
}

/// Relative gap below which two singular values count as degenerate.
const TIE_TOLERANCE: f64 = 1e-10;

/// Schmidt decomposition keeping `rank` mode pairs (0 keeps all of them).
pub fn schmidt_decompose(psi: &JointWavefunction, rank: usize) -> Result<SchmidtResult> {
    if psi.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Data("joint wavefunction contains non-finite values".into()));
    }
    let (r, c) = (psi.rows(), psi.cols());
    let full = r.min(c);
    if rank > full {
        return Err(Error::Domain(format!("rank {rank} exceeds the smaller grid dimension {full}")));
    }
    let rank = if rank == 0 { full } else { rank };
    let (ds, dp) = (psi.signal_grid.dt, psi.pump_grid.dt);
    let w = (ds * dp).sqrt();
    let m = DMatrix::from_fn(r, c, |i, j| psi.at(i, j) * w);
    let svd = m.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::NotConverged("SVD did not return left vectors".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::NotConverged("SVD did not return right vectors".into()))?;
    let sigma = svd.singular_values;

    let centroid = |k: usize| -> f64 {
        let (mut m0, mut m1) = (0.0, 0.0);
        for i in 0..r {
            let p = u[(i, k)].norm_sqr();
            m0 += p;
            m1 += p * psi.signal_grid.time(i);
        }
        if m0 > 0.0 { m1 / m0 } else { 0.0 }
    };
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let scale = sigma.iter().cloned().fold(0.0, f64::max);
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && sigma[order[start]] - sigma[order[end]] <= TIE_TOLERANCE * scale {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| centroid(a).total_cmp(&centroid(b)));
        start = end;
    }

    let mut coefficients = Vec::with_capacity(rank);
    let mut signal_modes = Vec::with_capacity(rank);
    let mut pump_modes = Vec::with_capacity(rank);
    for &k in order.iter().take(rank) {
        let us: Vec<Complex64> = (0..r).map(|i| u[(i, k)]).collect();
        let peak = us.iter().fold(Complex64::new(0.0, 0.0), |m, z| if z.norm_sqr() > m.norm_sqr() { *z } else { m });
        let rot = if peak.norm() > 0.0 { peak.conj() / peak.norm() } else { Complex64::new(1.0, 0.0) };
        let (ss, sp) = (1.0 / ds.sqrt(), 1.0 / dp.sqrt());
        signal_modes.push(Waveform { grid: psi.signal_grid, values: us.iter().map(|z| z * rot * ss).collect() });
        pump_modes.push(Waveform {
            grid: psi.pump_grid,
            values: (0..c).map(|j| v_t[(k, j)] * rot.conj() * sp).collect(),
        });
        coefficients.push(sigma[k]);
    }
    Ok(SchmidtResult { coefficients, signal_modes, pump_modes, rank })
}

/// |⟨reference|candidate⟩|².
pub fn fidelity(reference: &Waveform, candidate: &Waveform) -> Result<f64> {
    Ok(overlap(reference, candidate)?.norm_sqr())
}

/// Overlap magnitude below which a relative phase is not reported.
pub const PHASE_OVERLAP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseOutcome {
    Defined { phase: f64, overlap: f64 },
    Undefined { overlap: f64 },
}

impl PhaseOutcome {
    pub fn phase(&self) -> Option<f64> {
        match self {
            PhaseOutcome::Defined { phase, .. } => Some(*phase),
            PhaseOutcome::Undefined { .. } => None,
        }
    }
}

/// arg⟨ψ_in|ψ_out⟩, with the input first mirrored about `reverse_about` when given.
pub fn phase_diagnostic(input: &Waveform, output: &Waveform, reverse_about: Option<f64>) -> Result<PhaseOutcome> {
    let reference = match reverse_about {
        Some(t) => input.time_reversed_about(t)?,
        None => input.clone(),
    };
    let z = overlap(&reference, output)?;
    let mag = z.norm();
    Ok(if mag > PHASE_OVERLAP_THRESHOLD {
        PhaseOutcome::Defined { phase: z.arg(), overlap: mag }
    } else {
        PhaseOutcome::Undefined { overlap: mag }
    })
}

/// Distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

/// Brute-force check: eigenvalues of the reduced signal density matrix, descending.
pub fn reduced_density_eigenvalues(psi: &JointWavefunction) -> Vec<f64> {
    let (r, c) = (psi.rows(), psi.cols());
    let w = psi.signal_grid.dt * psi.pump_grid.dt;
    let rho = DMatrix::from_fn(r, r, |i, k| {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..c {
            s += psi.at(i, j) * psi.at(k, j).conj();
        }
        s * w
    });
    let mut ev: Vec<f64> = rho.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::gaussian;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn product_state_has_rank_one() {
        let g = TimeGrid::new(0.0, 1e-9, 200).unwrap();
        let s = gaussian(&g, 20e-9, 80e-9).unwrap();
        let p = gaussian(&g, 25e-9, 105e-9).unwrap().scaled(Complex64::new(0.0, 1.0));
        let res = schmidt_decompose(&JointWavefunction::product(&s, &p), 4).unwrap();
        assert!((res.coefficients[0] - 1.0).abs() < 1e-10);
        assert!(res.coefficients[1] < 1e-8);
        assert!((fidelity(&s, &res.signal_modes[0]).unwrap() - 1.0).abs() < 1e-10);
        assert!((fidelity(&p, &res.pump_modes[0]).unwrap() - 1.0).abs() < 1e-10);
        // the phase convention leaves the real Gaussian factor untouched
        let z = overlap(&s, &res.signal_modes[0]).unwrap();
        assert!((z - 1.0).norm() < 1e-9);
    }

    #[test]
    fn two_bin_toy_state() {
        let v = [-1.0, 1.0, 1.0, -1.0].map(|x| Complex64::new(x / 2.0, 0.0)).to_vec();
        let psi = JointWavefunction::new(grid(2), grid(2), v).unwrap();
        let res = schmidt_decompose(&psi, 0).unwrap();
        assert!((res.coefficients[0] - 1.0).abs() < 1e-14);
        assert!(res.coefficients[1].abs() < 1e-14);
    }

    #[test]
    fn reconstructs_the_input() {
        let psi = pseudo_random(7, 5);
        let res = schmidt_decompose(&psi, 0).unwrap();
        let mut back = vec![Complex64::new(0.0, 0.0); 35];
        for n in 0..res.rank {
            for i in 0..7 {
                for j in 0..5 {
                    back[i * 5 + j] += res.coefficients[n] * res.signal_modes[n].values[i] * res.pump_modes[n].values[j];
                }
            }
        }
        let err: f64 = back.iter().zip(&psi.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        assert!((res.total() - psi.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn modes_are_orthonormal() {
        let psi = pseudo_random(12, 9);
        let res = schmidt_decompose(&psi, 0).unwrap();
        for a in 0..res.rank {
            for b in 0..res.rank {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((overlap(&res.signal_modes[a], &res.signal_modes[b]).unwrap() - e).norm() < 1e-10);
                assert!((overlap(&res.pump_modes[a], &res.pump_modes[b]).unwrap() - e).norm() < 1e-10);
            }
        }
        assert!(res.coefficients.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn matches_reduced_density_eigenvalues() {
        let psi = pseudo_random(16, 20);
        let res = schmidt_decompose(&psi, 0).unwrap();
        let ev = reduced_density_eigenvalues(&psi);
        for (a, e) in res.coefficients.iter().zip(&ev) {
            assert!((a * a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn global_phase_leaves_coefficients() {
        let psi = pseudo_random(6, 6);
        let a = schmidt_decompose(&psi, 0).unwrap();
        let b = schmidt_decompose(&psi.scaled(Complex64::from_polar(1.0, 0.7)), 0).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_modes_ordered_by_centroid() {
        // two disjoint equal-weight product blocks, the later one listed first
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        v[3 * 4 + 3] = Complex64::new(0.5f64.sqrt(), 0.0);
        v[0] = Complex64::new(0.5f64.sqrt(), 0.0);
        let psi = JointWavefunction::new(grid(4), grid(4), v).unwrap();
        let res = schmidt_decompose(&psi, 2).unwrap();
        assert!((res.coefficients[0] - res.coefficients[1]).abs() < 1e-14);
        assert!(res.signal_modes[0].peak_time() < res.signal_modes[1].peak_time());
        assert!(res.signal_modes[0].values[0].re > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut psi = pseudo_random(3, 3);
        assert!(matches!(schmidt_decompose(&psi, 4), Err(Error::Domain(_))));
        psi.values[4] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(schmidt_decompose(&psi, 0), Err(Error::Data(_))));
    }

    #[test]
    fn phase_of_rotated_copy() {
        let g = TimeGrid::new(0.0, 1e-9, 100).unwrap();
        let s = gaussian(&g, 10e-9, 50e-9).unwrap();
        let out = s.scaled(Complex64::new(0.0, 1.0));
        let ph = phase_diagnostic(&s, &out, None).unwrap().phase().unwrap();
        assert!((ph - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let far = gaussian(&g, 5e-9, 20e-9).unwrap();
        let shifted = gaussian(&g, 5e-9, 80e-9).unwrap();
        assert!(matches!(phase_diagnostic(&far, &shifted, None).unwrap(), PhaseOutcome::Undefined { .. }));
        assert!((phase_distance(3.1, -3.1) - (2.0 * std::f64::consts::PI - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn crop_and_transpose() {
        let psi = pseudo_random(5, 4);
        let t = psi.transposed();
        assert_eq!(t.at(3, 2), psi.at(2, 3));
        let c = psi.cropped(1..3, 2..4).unwrap();
        assert_eq!(c.at(0, 0), psi.at(1, 2));
        assert!((c.signal_grid.t0 - 1.0).abs() < 1e-15);
    }

    fn pseudo_random(r: usize, c: usize) -> JointWavefunction {
        let mut x = 0x2545_f491_u64;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let values = (0..r * c).map(|_| Complex64::new(next(), next())).collect();
        JointWavefunction::new(grid(r), grid(c), values).unwrap()
    }
}

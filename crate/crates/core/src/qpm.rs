//! Quasi-phase-matched (signal, pump, sum-frequency) mode triplets and the
//! nonlinear coupling rate Υ from the triple-overlap integral.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::wgm::quadrature::CompositeRule;
use crate::wgm::{build_profile, resonance, ModeIndex, ModeProfile, ResonatorSpec, C_LIGHT};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Azimuthal poling pattern: a ±1 square wave in φ with period `period`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpmPattern {
    /// Poling period in radians of azimuth.
    pub period: f64,
    pub duty: f64,
    /// G_1, G_2, ... of D(φ) = Σ G_j e^{i k_j φ}.
    pub coefficients: Vec<Complex64>,
}

impl QpmPattern {
    pub fn new(period: f64, duty: f64, j_max: usize) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Domain(format!("poling period {period} must be positive")));
        }
        Ok(QpmPattern { period, duty, coefficients: fourier_coefficients(duty, j_max)? })
    }

    /// Pattern whose first harmonic closes the azimuthal mismatch `delta_m` = m_f − m_s − m_p.
    pub fn for_mismatch(delta_m: i64, duty: f64) -> Result<Self> {
        if delta_m < 1 {
            return Err(Error::Domain(format!("azimuthal mismatch {delta_m} cannot be closed by a positive period")));
        }
        QpmPattern::new(2.0 * PI / delta_m as f64, duty, 3)
    }

    /// k_j = 2πj/P.
    pub fn harmonic(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.period
    }

    pub fn g1(&self) -> Complex64 {
        self.coefficients.first().copied().unwrap_or_default()
    }
}

/// Fourier coefficients G_1..=G_{j_max} of the ±1 square wave that is +1 over
/// a fraction `duty` of each period.
pub fn fourier_coefficients(duty: f64, j_max: usize) -> Result<Vec<Complex64>> {
    if !(duty > 0.0 && duty < 1.0) {
        return Err(Error::Domain(format!("duty cycle {duty} outside (0, 1)")));
    }
    Ok((1..=j_max)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 * duty;
            (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -theta)) / Complex64::new(0.0, PI * j as f64)
        })
        .collect())
}

/// Result of the coupling-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Upsilon {
    /// |Υ| in rad/s.
    pub magnitude: f64,
    pub phase: f64,
    /// Set when the azimuthal selection rule fails; `magnitude` is then exactly 0.
    pub phase_mismatch: bool,
}

/// Υ from an already evaluated non-azimuthal overlap (m^{-3/2}).
pub fn upsilon_from_overlap(chi2: f64, omegas: [f64; 3], g1: Complex64, overlap: f64) -> Complex64 {
    let pref = 0.5 * chi2 * (HBAR * omegas[0] * omegas[1] * omegas[2] / EPSILON_0).sqrt();
    g1 * pref * overlap
}

/// Refinement controls for [`overlap_integral`].
#[derive(Debug, Clone, Copy)]
pub struct OverlapQuadrature {
    pub radial_panels: usize,
    pub polar_panels: usize,
}

impl Default for OverlapQuadrature {
    fn default() -> Self {
        OverlapQuadrature { radial_panels: 8, polar_panels: 4 }
    }
}

/// 2π ∫∫ R_s R_p R_f Θ_s Θ_p Θ_f r² sinθ dr dθ for normalised profiles
/// (the azimuthal factor already reduced to 2π).
pub fn overlap_integral(s: &ModeProfile, p: &ModeProfile, f: &ModeProfile, quad: OverlapQuadrature) -> f64 {
    let r_hi = s.radius.min(p.radius).min(f.radius);
    let r_lo = s.r_min.max(p.r_min).max(f.r_min).min(r_hi);
    let radial = CompositeRule::new(r_lo, r_hi, quad.radial_panels, 16)
        .integrate(|r| s.radial(r) * p.radial(r) * f.radial(r) * r * r);
    let sectoral = [s, p, f].iter().all(|m| m.index.m.unsigned_abs() as usize == m.index.l);
    let (t_lo, t_hi) = if sectoral {
        let total = (s.index.l + p.index.l + f.index.l) as f64;
        let w = (12.0 / total.sqrt()).min(PI / 2.0);
        (PI / 2.0 - w, PI / 2.0 + w)
    } else {
        (0.0, PI)
    };
    let polar = CompositeRule::new(t_lo, t_hi, quad.polar_panels, 16)
        .integrate(|t| s.polar(t) * p.polar(t) * f.polar(t) * t.sin());
    2.0 * PI * s.a0 * p.a0 * f.a0 * radial * polar
}

/// Overlap with panel doubling until the relative change is below `rtol`.
pub fn converged_overlap(s: &ModeProfile, p: &ModeProfile, f: &ModeProfile, rtol: f64) -> Result<f64> {
    let mut quad = OverlapQuadrature::default();
    let mut prev = overlap_integral(s, p, f, quad);
    for _ in 0..8 {
        quad.radial_panels *= 2;
        quad.polar_panels *= 2;
        let cur = overlap_integral(s, p, f, quad);
        if (cur - prev).abs() <= rtol * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "overlap of l = ({}, {}, {}) not converged: last {prev:e}",
        s.index.l, p.index.l, f.index.l
    )))
}

/// Nonlinear coupling rate of a triplet under `pattern`. Only the first
/// harmonic of the pattern is kept; it must satisfy k_1 + m_s + m_p − m_f = 0.
pub fn compute_upsilon(
    s: &ModeProfile,
    p: &ModeProfile,
    f: &ModeProfile,
    pattern: &QpmPattern,
    spec: &ResonatorSpec,
) -> Result<Upsilon> {
    let k1 = pattern.harmonic(1);
    let mismatch = k1 + (s.index.m + p.index.m - f.index.m) as f64;
    if mismatch.abs() > 1e-9 * k1.abs().max(1.0) {
        return Ok(Upsilon { magnitude: 0.0, phase: 0.0, phase_mismatch: true });
    }
    let overlap = converged_overlap(s, p, f, 1e-8)?;
    let u = upsilon_from_overlap(spec.chi2, [s.omega, p.omega, f.omega], pattern.g1(), overlap);
    Ok(Upsilon { magnitude: u.norm(), phase: u.arg(), phase_mismatch: false })
}

/// A phase-matched set of fundamental modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTriple {
    pub signal: ModeIndex,
    pub pump: ModeIndex,
    pub sf: ModeIndex,
    /// Radius at which the triplet is resonant, metres.
    pub radius: f64,
    pub omega_s: f64,
    pub omega_p: f64,
    pub omega_f: f64,
    pub pattern: QpmPattern,
    /// |Υ|, rad/s.
    pub upsilon: f64,
}

impl ModeTriple {
    pub fn energy_mismatch(&self) -> f64 {
        self.omega_s + self.omega_p - self.omega_f
    }

    /// k_1 + m_s + m_p − m_f, rounded to the nearest integer.
    pub fn azimuthal_residual(&self) -> i64 {
        (self.pattern.harmonic(1).round() as i64) + self.signal.m + self.pump.m - self.sf.m
    }
}

/// Search controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Vacuum wavelength band (metres) that must contain all three modes.
    pub band: (f64, f64),
    /// Coupling Q setting the resonance linewidth used as energy tolerance.
    pub q_coupling: f64,
    /// Radius tuning range ±δR (metres) about the nominal radius; 0 disables tuning.
    pub radius_tuning: f64,
    pub duty: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { band: (700e-9, 2000e-9), q_coupling: 1e8, radius_tuning: 0.2e-6, duty: 0.5 }
    }
}

/// Outcome of [`search_triples`].
#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    /// Admissible triplets sorted by descending |Υ| (ties: lower l_s first).
    Found(Vec<ModeTriple>),
    /// No phase-matched triple in the band.
    NoneInBand { pairs_examined: usize },
}

impl SearchOutcome {
    pub fn triples(&self) -> &[ModeTriple] {
        match self {
            SearchOutcome::Found(t) => t,
            SearchOutcome::NoneInBand { .. } => &[],
        }
    }

    pub fn best(&self) -> Option<&ModeTriple> {
        self.triples().first()
    }
}

fn lambda_of(omega: f64) -> f64 {
    2.0 * PI * C_LIGHT / omega
}

fn in_band(omega: f64, band: (f64, f64)) -> bool {
    let l = lambda_of(omega);
    l >= band.0 && l <= band.1
}

fn omega_at(l: usize, spec: &ResonatorSpec, radius: f64) -> Result<f64> {
    resonance(ModeIndex::fundamental(l), &ResonatorSpec { radius, ..*spec }).map(|r| r.0)
}

/// Fundamental angular numbers whose resonance at `radius` lies in `band`,
/// widened by one on each side.
fn l_range(spec: &ResonatorSpec, radius: f64, band: (f64, f64)) -> Result<(usize, usize)> {
    let n_guess = spec.index_model.index(1.0e-6).unwrap_or(2.2);
    let l_of = |lambda: f64| 2.0 * PI * radius * n_guess / lambda;
    let lo = (l_of(band.1) * 0.8).max(crate::wgm::MIN_L as f64) as usize;
    let hi = (l_of(band.0) * 1.25) as usize + 2;
    let mut first = None;
    let mut last = None;
    for l in lo..=hi {
        match omega_at(l, spec, radius) {
            Ok(w) if in_band(w, band) => {
                first.get_or_insert(l);
                last = Some(l);
            }
            _ => {}
        }
    }
    match (first, last) {
        (Some(a), Some(b)) => Ok((a.saturating_sub(1).max(crate::wgm::MIN_L), b + 1)),
        _ => Err(Error::Range("no fundamental resonance in band".into())),
    }
}

/// Continuous position of `target` among ascending `omegas` (indexed from `l0`).
fn fractional_l(omegas: &[f64], l0: usize, target: f64) -> Option<f64> {
    let idx = omegas.partition_point(|&w| w <= target);
    if idx == 0 || idx >= omegas.len() {
        return None;
    }
    let (w0, w1) = (omegas[idx - 1], omegas[idx]);
    Some((l0 + idx - 1) as f64 + (target - w0) / (w1 - w0))
}

struct Candidate {
    ls: usize,
    lp: usize,
    lf: usize,
}

/// Energy residual ω_s + ω_p − ω_f at `radius`, together with the three frequencies.
fn residual(c: &Candidate, spec: &ResonatorSpec, radius: f64) -> Result<(f64, [f64; 3])> {
    let ws = omega_at(c.ls, spec, radius)?;
    let wp = omega_at(c.lp, spec, radius)?;
    let wf = omega_at(c.lf, spec, radius)?;
    Ok((ws + wp - wf, [ws, wp, wf]))
}

fn tune_radius(c: &Candidate, spec: &ResonatorSpec, mut lo: f64, mut hi: f64) -> Result<Option<(f64, [f64; 3])>> {
    let (mut flo, _) = residual(c, spec, lo)?;
    let (fhi, _) = residual(c, spec, hi)?;
    if flo.signum() == fhi.signum() {
        return Ok(None);
    }
    // relative frequency tolerance well below any cavity linewidth
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (fm, w) = residual(c, spec, mid)?;
        if (hi - lo) < 1e-13 * mid {
            return Ok(Some((mid, w)));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    residual(c, spec, mid).map(|(_, w)| Some((mid, w)))
}

/// Radial and polar factors of fundamental profiles at the nominal radius,
/// tabulated once per angular number on a shared quadrature grid.
struct ProfileCache {
    spec: ResonatorSpec,
    radial: CompositeRule,
    polar: CompositeRule,
    tables: HashMap<usize, (Vec<f64>, Vec<f64>)>,
}

impl ProfileCache {
    fn new(spec: ResonatorSpec, l_min: usize, refine: usize) -> Result<Self> {
        let p_min = build_profile(ModeIndex::fundamental(l_min), &spec)?;
        // sectoral envelope sin^L θ for the smallest possible L = 4 l_min
        let w = (12.0 / ((4 * l_min) as f64).sqrt()).min(PI / 2.0);
        Ok(ProfileCache {
            spec,
            radial: CompositeRule::new(p_min.r_min, spec.radius, 32 * refine, 16),
            polar: CompositeRule::new(PI / 2.0 - w, PI / 2.0 + w, 8 * refine, 16),
            tables: HashMap::new(),
        })
    }

    fn table(&mut self, l: usize) -> Result<&(Vec<f64>, Vec<f64>)> {
        if !self.tables.contains_key(&l) {
            let p = build_profile(ModeIndex::fundamental(l), &self.spec)?;
            let r: Vec<f64> = self.radial.nodes.iter().zip(&self.radial.weights).map(|(&x, &w)| p.a0 * p.radial(x) * (x * x * w).cbrt()).collect();
            let t: Vec<f64> = self.polar.nodes.iter().zip(&self.polar.weights).map(|(&x, &w)| p.polar(x) * (x.sin() * w).cbrt()).collect();
            self.tables.insert(l, (r, t));
        }
        Ok(&self.tables[&l])
    }

    fn overlap(&mut self, ls: usize, lp: usize, lf: usize) -> Result<f64> {
        let dot3 = |a: &[f64], b: &[f64], c: &[f64]| a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum::<f64>();
        let (rs, ts) = self.table(ls)?.clone();
        let (rp, tp) = self.table(lp)?.clone();
        let (rf, tf) = self.table(lf)?;
        Ok(2.0 * PI * dot3(&rs, &rp, rf) * dot3(&ts, &tp, tf))
    }
}

/// Search fundamental (q = 1, l = m) triplets with all three resonances in
/// the band, ω_s + ω_p = ω_f within the narrowest linewidth and a poling
/// period chosen per triplet so that k_1 = m_f − m_s − m_p.
///
/// With `radius_tuning` > 0 each candidate is brought onto exact energy
/// resonance by adjusting the radius within ±δR of nominal; the triplet
/// records the tuned radius. Υ uses profiles at the nominal radius rescaled
/// to the tuned one (the dimensionless profile depends on R only through
/// the dispersion of n).
pub fn search_triples(spec: &ResonatorSpec, options: &SearchOptions) -> Result<SearchOutcome> {
    spec.validate()?;
    if !(options.band.0 < options.band.1) {
        return Err(Error::Range("empty wavelength band".into()));
    }
    let r0 = spec.radius;
    let delta = options.radius_tuning;
    let (l_lo, l_hi) = match l_range(spec, r0, options.band) {
        Ok(r) => r,
        Err(_) => return Ok(SearchOutcome::NoneInBand { pairs_examined: 0 }),
    };
    // SF modes: anything up to twice the largest angular number.
    let lf_hi = 2 * l_hi + 2 * ((l_hi as f64).cbrt() as usize) + 20;
    let radii: Vec<f64> = if delta > 0.0 { vec![r0 - delta, r0 + delta] } else { vec![r0] };
    // resonance tables from l_lo upward, stopping just beyond the short band edge
    let tables: Vec<Vec<f64>> = radii
        .iter()
        .map(|&r| {
            let mut t = Vec::new();
            for l in l_lo..=lf_hi {
                match omega_at(l, spec, r) {
                    Ok(w) if lambda_of(w) >= 0.9 * options.band.0 => t.push(w),
                    Ok(w) => {
                        t.push(w);
                        break;
                    }
                    Err(_) => break,
                }
            }
            t
        })
        .collect();
    let w0: Vec<f64> = (l_lo..=l_hi).map(|l| omega_at(l, spec, r0)).collect::<Result<_>>()?;
    let ok_sp: Vec<usize> = (l_lo..=l_hi).filter(|&l| in_band(w0[l - l_lo], options.band)).collect();
    let mut pairs = 0usize;
    let mut candidates: Vec<Candidate> = Vec::new();
    for (i, &ls) in ok_sp.iter().enumerate() {
        for &lp in &ok_sp[i..] {
            pairs += 1;
            let positions: Vec<f64> = tables
                .iter()
                .filter_map(|t| fractional_l(t, l_lo, t[ls - l_lo] + t[lp - l_lo]))
                .collect();
            if positions.len() != tables.len() {
                continue;
            }
            let (a, b) = if positions.len() == 2 {
                (positions[0].min(positions[1]), positions[0].max(positions[1]))
            } else {
                (positions[0], positions[0])
            };
            let lf_candidates: Vec<usize> = if delta > 0.0 {
                ((a.floor() as i64 - 1)..=(b.ceil() as i64 + 1)).filter(|&l| l > 0).map(|l| l as usize).collect()
            } else {
                vec![positions[0].round() as usize]
            };
            for lf in lf_candidates {
                if lf as i64 - ls as i64 - lp as i64 >= 1 {
                    candidates.push(Candidate { ls, lp, lf });
                }
            }
        }
    }
    let resolved: Vec<Option<(Candidate, f64, [f64; 3])>> = candidates
        .into_par_iter()
        .map(|c| -> Result<Option<(Candidate, f64, [f64; 3])>> {
            let hit = if delta > 0.0 {
                tune_radius(&c, spec, radii[0], radii[1])?
            } else {
                let (_, w) = residual(&c, spec, r0)?;
                Some((r0, w))
            };
            Ok(hit.map(|(r, w)| (c, r, w)))
        })
        .collect::<Result<_>>()?;
    let mut cache = ProfileCache::new(*spec, l_lo, 1)?;
    let mut triples = Vec::new();
    for (c, radius, w) in resolved.into_iter().flatten() {
        let q = options.q_coupling;
        let tol = w.iter().map(|&x| x / q).fold(f64::INFINITY, f64::min);
        if (w[0] + w[1] - w[2]).abs() > tol || !w.iter().all(|&x| in_band(x, options.band)) {
            continue;
        }
        let pattern = QpmPattern::for_mismatch(c.lf as i64 - c.ls as i64 - c.lp as i64, options.duty)?;
        let scale = (r0 / radius).powf(1.5);
        let overlap = cache.overlap(c.ls, c.lp, c.lf)? * scale;
        let upsilon = upsilon_from_overlap(spec.chi2, w, pattern.g1(), overlap).norm();
        triples.push(ModeTriple {
            signal: ModeIndex::fundamental(c.ls),
            pump: ModeIndex::fundamental(c.lp),
            sf: ModeIndex::fundamental(c.lf),
            radius,
            omega_s: w[0],
            omega_p: w[1],
            omega_f: w[2],
            pattern,
            upsilon,
        });
    }
    if triples.is_empty() {
        return Ok(SearchOutcome::NoneInBand { pairs_examined: pairs });
    }
    // grid check on the strongest candidate: doubling the shared grid must not move it
    let top = triples.iter().max_by(|a, b| a.upsilon.total_cmp(&b.upsilon)).expect("non-empty");
    let mut fine = ProfileCache::new(*spec, l_lo, 2)?;
    let coarse_ov = cache.overlap(top.signal.l, top.pump.l, top.sf.l)?;
    let fine_ov = fine.overlap(top.signal.l, top.pump.l, top.sf.l)?;
    if ((fine_ov - coarse_ov) / fine_ov).abs() > 1e-6 {
        return Err(Error::Quadrature(format!("shared overlap grid not converged: {coarse_ov:e} vs {fine_ov:e}")));
    }
    triples.sort_by(|a, b| (a.signal.l, a.pump.l, a.sf.l).cmp(&(b.signal.l, b.pump.l, b.sf.l)));
    triples.sort_by(|a, b| b.upsilon.total_cmp(&a.upsilon));
    Ok(SearchOutcome::Found(triples))
}

/// Re-evaluate a triplet's Υ from profiles built at its own (tuned) radius.
pub fn rescore(triple: &ModeTriple, spec: &ResonatorSpec) -> Result<Upsilon> {
    let local = ResonatorSpec { radius: triple.radius, ..*spec };
    let s = build_profile(triple.signal, &local)?;
    let p = build_profile(triple.pump, &local)?;
    let f = build_profile(triple.sf, &local)?;
    compute_upsilon(&s, &p, &f, &triple.pattern, &local)
}

/// One row of the Υ(R) sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub nominal_radius: f64,
    pub triples_found: usize,
    pub best: Option<ModeTriple>,
    pub error: Option<String>,
}

/// Best Υ per radius. Radii are searched in parallel; failures are kept per row.
pub fn upsilon_sweep(base: &ResonatorSpec, radii: &[f64], options: &SearchOptions) -> Vec<SweepRow> {
    radii
        .par_iter()
        .map(|&r| {
            let spec = ResonatorSpec { radius: r, ..*base };
            if !(15e-6..=1.5e-3).contains(&r) {
                return SweepRow {
                    nominal_radius: r,
                    triples_found: 0,
                    best: None,
                    error: Some(format!("radius {r:e} m outside 15 um - 1.5 mm")),
                };
            }
            match search_triples(&spec, options) {
                Ok(out) => SweepRow {
                    nominal_radius: r,
                    triples_found: out.triples().len(),
                    best: out.best().cloned(),
                    error: match out {
                        SearchOutcome::NoneInBand { .. } => Some("no phase-matched triple in band".into()),
                        _ => None,
                    },
                },
                Err(e) => SweepRow { nominal_radius: r, triples_found: 0, best: None, error: Some(e.to_string()) },
            }
        })
        .collect()
}

/// Least-squares fit log10 Υ = a (log10 R)² + b log10 R + c over the rows
/// that found a triplet (R in metres, Υ in rad/s). Returns [a, b, c].
pub fn fit_log_quadratic(points: &[(f64, f64)]) -> Option<[f64; 3]> {
    if points.len() < 3 {
        return None;
    }
    let a = nalgebra::DMatrix::from_fn(points.len(), 3, |i, j| points[i].0.log10().powi(2 - j as i32));
    let b = nalgebra::DVector::from_iterator(points.len(), points.iter().map(|p| p.1.log10()));
    let sol = a.svd(true, true).solve(&b, 1e-14).ok()?;
    Some([sol[0], sol[1], sol[2]])
}

pub const TRIPLE_CSV_HEADER: &str = "R_m,l_s,l_p,l_f,P_rad,omega_s,omega_p,omega_f,upsilon_rad_s";

pub fn triple_csv_row(t: &ModeTriple) -> String {
    format!(
        "{:.9e},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.9e}",
        t.radius, t.signal.l, t.pump.l, t.sf.l, t.pattern.period, t.omega_s, t.omega_p, t.omega_f, t.upsilon
    )
}

pub fn triples_csv(triples: &[ModeTriple]) -> String {
    let mut out = String::from(TRIPLE_CSV_HEADER);
    out.push('\n');
    for t in triples {
        let _ = writeln!(out, "{}", triple_csv_row(t));
    }
    out
}

//! Whispering-gallery modes of a microdisk treated as a dielectric sphere:
//! TE resonance frequencies in the large-l limit and closed-form mode profiles
//! Φ_lmq = A₀ Y_lm(θ,φ) j_l(k r), normalised over the interior r ≤ R.

pub mod index_model;
pub mod quadrature;
pub mod special;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use index_model::IndexModel;
use quadrature::CompositeRule;
pub use special::{airy_root, spherical_bessel, spherical_harmonic};

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

/// Smallest angular number accepted by the large-l dispersion formula.
pub const MIN_L: usize = 20;

/// WGM quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub l: usize,
    pub m: i64,
    pub q: usize,
}

impl ModeIndex {
    pub fn new(l: usize, m: i64, q: usize) -> Result<Self> {
        if l < 1 || q < 1 || m.unsigned_abs() as usize > l {
            return Err(Error::Domain(format!("invalid mode index (l={l}, m={m}, q={q})")));
        }
        Ok(ModeIndex { l, m, q })
    }

    /// Fundamental mode q = 1, m = l.
    pub fn fundamental(l: usize) -> Self {
        ModeIndex { l, m: l as i64, q: 1 }
    }
}

/// Resonator geometry and material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorSpec {
    /// Disk radius, metres.
    pub radius: f64,
    pub index_model: IndexModel,
    /// Second-order susceptibility χ⁽²⁾, m/V.
    pub chi2: f64,
}

/// χ⁽²⁾ = 2 d₃₃ with d₃₃ = 25 pm/V for lithium niobate.
pub const DEFAULT_CHI2: f64 = 50e-12;

impl ResonatorSpec {
    pub fn lithium_niobate(radius: f64) -> Self {
        ResonatorSpec { radius, index_model: IndexModel::default(), chi2: DEFAULT_CHI2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::Domain(format!("radius {} must be positive", self.radius)));
        }
        if !(self.chi2 > 0.0) {
            return Err(Error::Domain(format!("chi2 {} must be positive", self.chi2)));
        }
        Ok(())
    }
}

/// Dimensionless size parameter k R = l + 1/2 + α_q ((l+1/2)/2)^{1/3} − n/√(n²−1).
pub fn size_parameter(l: usize, q: usize, n: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::Domain(format!("index n = {n} must exceed 1")));
    }
    let nu = l as f64 + 0.5;
    Ok(nu + airy_root(q)? * (nu / 2.0).cbrt() - n / (n * n - 1.0).sqrt())
}

/// ω_lq for a fixed index n (no dispersion iteration).
pub fn resonance_frequency_fixed_index(l: usize, q: usize, radius: f64, n: f64) -> Result<f64> {
    Ok(C_LIGHT / n / radius * size_parameter(l, q, n)?)
}

/// Resonance angular frequency with the index evaluated self-consistently at
/// the resonance wavelength. Returns (ω, n).
pub fn resonance(index: ModeIndex, spec: &ResonatorSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    if index.l < MIN_L {
        return Err(Error::Range(format!("l = {} below large-l limit {MIN_L}", index.l)));
    }
    let mut n = spec.index_model.index(1.55e-6).or_else(|_| spec.index_model.index(1.0e-6))?;
    let mut omega = resonance_frequency_fixed_index(index.l, index.q, spec.radius, n)?;
    for _ in 0..50 {
        n = spec.index_model.index(2.0 * PI * C_LIGHT / omega)?;
        let next = resonance_frequency_fixed_index(index.l, index.q, spec.radius, n)?;
        let done = ((next - omega) / omega).abs() < 1e-10;
        omega = next;
        if done {
            return Ok((omega, n));
        }
    }
    Err(Error::NotConverged(format!("dispersion fixed point for l = {}", index.l)))
}

pub fn resonance_frequency(index: ModeIndex, spec: &ResonatorSpec) -> Result<f64> {
    resonance(index, spec).map(|(w, _)| w)
}

/// Normalised TE mode profile.
#[derive(Debug, Clone)]
pub struct ModeProfile {
    pub index: ModeIndex,
    /// Wavenumber inside the disk, 1/m.
    pub k: f64,
    /// Normalisation constant, m^{-3/2}.
    pub a0: f64,
    pub omega: f64,
    pub n: f64,
    pub radius: f64,
    /// Below this radius the radial factor is negligible (< 1e-15 of its peak).
    pub r_min: f64,
}

impl ModeProfile {
    pub fn radial(&self, r: f64) -> f64 {
        if r > self.radius {
            return 0.0;
        }
        spherical_bessel(self.index.l, self.k * r)
    }

    /// Polar factor Θ(θ) with Y_lm = Θ(θ) e^{imφ}.
    pub fn polar(&self, theta: f64) -> f64 {
        let am = self.index.m.unsigned_abs() as usize;
        let p = special::normalized_legendre(self.index.l, am, theta.cos(), theta.sin().abs());
        if self.index.m < 0 && am % 2 == 1 {
            -p
        } else {
            p
        }
    }

    pub fn evaluate(&self, r: f64, theta: f64, phi: f64) -> Complex64 {
        let amp = self.a0 * self.radial(r) * self.polar(theta);
        Complex64::from_polar(amp, self.index.m as f64 * phi)
    }

    /// ∫_V |Φ|² dV with the angular part integrated analytically.
    pub fn norm(&self, panels: usize) -> f64 {
        self.a0 * self.a0 * radial_norm(self.index.l, self.k, self.r_min, self.radius, panels)
    }

    pub fn renormalized(&self) -> Result<ModeProfile> {
        let (integral, _) = converged_radial_norm(self.index.l, self.k, self.r_min, self.radius)?;
        let mut p = self.clone();
        p.a0 = 1.0 / integral.sqrt();
        Ok(p)
    }
}

/// Lower radius where j_l(k r) has decayed far into its evanescent tail.
pub(crate) fn evanescent_cutoff(l: usize, k: f64) -> f64 {
    let nu = l as f64 + 0.5;
    let x = nu - 16.0 * (nu / 2.0).cbrt();
    if l < 40 {
        0.0
    } else {
        x.max(0.0) / k
    }
}

fn radial_norm(l: usize, k: f64, r_min: f64, radius: f64, panels: usize) -> f64 {
    let rule = CompositeRule::new(r_min, radius, panels, 16);
    rule.integrate(|r| {
        let j = spherical_bessel(l, k * r);
        j * j * r * r
    })
}

fn converged_radial_norm(l: usize, k: f64, r_min: f64, radius: f64) -> Result<(f64, usize)> {
    let mut panels = 4;
    let mut prev = radial_norm(l, k, r_min, radius, panels);
    while panels <= 1024 {
        panels *= 2;
        let cur = radial_norm(l, k, r_min, radius, panels);
        if ((cur - prev) / cur).abs() < 1e-10 {
            return Ok((cur, panels));
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "radial normalisation for l = {l} did not settle with {panels} panels (last {prev:e})"
    )))
}

/// Build the normalised profile of `index` in resonator `spec`.
pub fn build_profile(index: ModeIndex, spec: &ResonatorSpec) -> Result<ModeProfile> {
    let (omega, n) = resonance(index, spec)?;
    let k = n * omega / C_LIGHT;
    let r_min = evanescent_cutoff(index.l, k);
    let (integral, _) = converged_radial_norm(index.l, k, r_min, spec.radius)?;
    Ok(ModeProfile { index, k, a0: 1.0 / integral.sqrt(), omega, n, radius: spec.radius, r_min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_radius_halves_frequency() {
        let a = resonance_frequency_fixed_index(300, 1, 20e-6, 2.14).unwrap();
        let b = resonance_frequency_fixed_index(300, 1, 40e-6, 2.14).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        let spec = ResonatorSpec { radius: 20e-6, index_model: IndexModel::Constant(2.14), chi2: DEFAULT_CHI2 };
        let spec2 = ResonatorSpec { radius: 40e-6, ..spec };
        let w1 = resonance_frequency(ModeIndex::fundamental(300), &spec).unwrap();
        let w2 = resonance_frequency(ModeIndex::fundamental(300), &spec2).unwrap();
        assert!((w1 / w2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_formula_reevaluated_independently() {
        // independent evaluation with the tabulated first Airy zero
        let n: f64 = 2.14;
        let nu = 300.5f64;
        let bracket = nu + 2.338_107_410_459_767 * (nu / 2.0).powf(1.0 / 3.0) - n / (n * n - 1.0).sqrt();
        let expected = C_LIGHT / n / 20e-6 * bracket;
        let got = resonance_frequency_fixed_index(300, 1, 20e-6, n).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-13);
    }

    #[test]
    fn higher_radial_order_is_bluer() {
        let spec = ResonatorSpec::lithium_niobate(20e-6);
        let w1 = resonance_frequency(ModeIndex::new(300, 300, 1).unwrap(), &spec).unwrap();
        let w2 = resonance_frequency(ModeIndex::new(300, 300, 2).unwrap(), &spec).unwrap();
        assert!(w2 > w1);
    }

    #[test]
    fn domain_errors() {
        assert!(size_parameter(300, 1, 1.0).is_err());
        let spec = ResonatorSpec { radius: 20e-6, index_model: IndexModel::Constant(0.8), chi2: DEFAULT_CHI2 };
        assert!(resonance_frequency(ModeIndex::fundamental(300), &spec).is_err());
        assert!(ModeIndex::new(3, 4, 1).is_err());
        assert!(resonance_frequency(ModeIndex::fundamental(10), &ResonatorSpec::lithium_niobate(20e-6)).is_err());
    }

    #[test]
    fn dispersion_fixed_point_is_self_consistent() {
        let spec = ResonatorSpec::lithium_niobate(20e-6);
        let (w, n) = resonance(ModeIndex::fundamental(170), &spec).unwrap();
        let n_check = spec.index_model.index(2.0 * PI * C_LIGHT / w).unwrap();
        assert!((n - n_check).abs() < 1e-9);
    }

    #[test]
    fn profile_is_normalised_and_renormalisation_is_identity() {
        let spec = ResonatorSpec::lithium_niobate(20e-6);
        let p = build_profile(ModeIndex::fundamental(50), &spec).unwrap();
        assert!((p.norm(256) - 1.0).abs() < 1e-6);
        let q = p.renormalized().unwrap();
        assert!((q.a0 - p.a0).abs() < 1e-9 * p.a0);
        let mut unit = p.clone();
        unit.a0 = 1.0;
        assert!((unit.norm(256) - 1.0 / (p.a0 * p.a0)).abs() < 1e-6 / (p.a0 * p.a0));
    }

    #[test]
    fn fundamental_profile_peaks_near_rim_and_equator() {
        let spec = ResonatorSpec::lithium_niobate(20e-6);
        let p = build_profile(ModeIndex::fundamental(50), &spec).unwrap();
        let (mut best, mut at) = (0.0, (0.0, 0.0));
        for i in 0..400 {
            let r = spec.radius * (0.5 + 0.5 * i as f64 / 399.0);
            for j in 0..181 {
                let th = PI * j as f64 / 180.0;
                let v = p.evaluate(r, th, 0.3).norm_sqr();
                if v > best {
                    best = v;
                    at = (r, th);
                }
            }
        }
        assert!(at.0 > 0.8 * spec.radius, "peak radius {}", at.0);
        assert!((at.1 - PI / 2.0).abs() < 0.02);
    }
}

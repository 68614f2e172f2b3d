//! Special functions for whispering-gallery mode profiles: the Airy function
//! on the negative axis, its zeros, spherical Bessel functions of the first
//! kind for large orders, and orthonormal spherical harmonics.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = -0.258_819_403_792_806_8;

/// Largest radial number for which [`airy_root`] is supported.
pub const MAX_AIRY_ROOT: usize = 10;

/// log of the smallest magnitude returned by [`spherical_bessel`]; below it
/// the function returns exactly zero.
pub const BESSEL_UNDERFLOW_LN: f64 = -700.0;

/// Taylor step of the Airy equation y'' = x y from `x0` by `h`.
fn airy_taylor_step(x0: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    // c_k = y^(k)(x0)/k!, (k+2)(k+1) c_{k+2} = x0 c_k + c_{k-1}
    let mut c_prev2 = 0.0; // c_{k-1}
    let mut c_prev = y; // c_k at k = 0
    let mut c_cur = yp; // c_{k+1}
    let mut val = y + yp * h;
    let mut der = yp;
    let mut hp = h; // h^(k+1)
    let mut k = 0usize;
    loop {
        let c_next = (x0 * c_prev + c_prev2) / ((k + 2) as f64 * (k + 1) as f64);
        // c_next is c_{k+2}
        let term_der = (k + 2) as f64 * c_next * hp;
        hp *= h;
        let term_val = c_next * hp;
        val += term_val;
        der += term_der;
        if k > 8 && term_val.abs() < 1e-18 * val.abs().max(1e-300) && term_der.abs() < 1e-18 * der.abs().max(1e-300) {
            break;
        }
        if k > 200 {
            break;
        }
        c_prev2 = c_prev;
        c_prev = c_cur;
        c_cur = c_next;
        k += 1;
    }
    (val, der)
}

/// Airy function Ai(x) and its derivative for x ≤ 2.
///
/// Integrated from the exact values at the origin with local Taylor series
/// (step ≤ 0.25), which stays accurate throughout the oscillatory region.
pub fn airy_ai(x: f64) -> (f64, f64) {
    assert!(x <= 2.0 && x.is_finite(), "airy_ai supports x <= 2");
    let n = ((x.abs() / 0.25).ceil() as usize).max(1);
    let h = x / n as f64;
    let (mut y, mut yp) = (AI0, AIP0);
    for i in 0..n {
        let x0 = i as f64 * h;
        let (ny, nyp) = airy_taylor_step(x0, y, yp, h);
        y = ny;
        yp = nyp;
    }
    (y, yp)
}

/// q-th zero z_q of Ai(−z), for 1 ≤ q ≤ 10.
pub fn airy_root(q: usize) -> Result<f64> {
    static ROOTS: OnceLock<[f64; MAX_AIRY_ROOT]> = OnceLock::new();
    if q == 0 || q > MAX_AIRY_ROOT {
        return Err(Error::Range(format!("airy_root: q = {q} outside 1..={MAX_AIRY_ROOT}")));
    }
    let roots = ROOTS.get_or_init(|| std::array::from_fn(|i| newton_airy_root(i + 1)));
    Ok(roots[q - 1])
}

fn newton_airy_root(q: usize) -> f64 {
    let t = (3.0 * PI * (4.0 * q as f64 - 1.0) / 8.0).powf(2.0 / 3.0);
    let mut z = t * (1.0 + 5.0 / 48.0 / (t * t));
    for _ in 0..50 {
        let (ai, aip) = airy_ai(-z);
        // d/dz Ai(-z) = -Ai'(-z)
        let dz = ai / aip;
        z += dz;
        if dz.abs() < 1e-15 * z {
            break;
        }
    }
    z
}

fn ln_double_factorial_odd(l: usize) -> f64 {
    // ln((2l+1)!!)
    (0..=l).map(|k| ((2 * k + 1) as f64).ln()).sum()
}

/// Spherical Bessel function of the first kind j_l(x), x ≥ 0.
///
/// Upward recurrence from j_0, j_1 when x ≥ l; otherwise Miller's downward
/// recurrence normalised with Σ(2k+1) j_k² = 1. Values whose magnitude falls
/// below exp(`BESSEL_UNDERFLOW_LN`) are returned as zero.
pub fn spherical_bessel(l: usize, x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "spherical_bessel needs finite x >= 0");
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let j0 = x.sin() / x;
    if l == 0 {
        return j0;
    }
    let j1 = if x < 0.1 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0))
    } else {
        x.sin() / (x * x) - x.cos() / x
    };
    if l == 1 {
        return j1;
    }
    if x >= l as f64 {
        let (mut a, mut b) = (j0, j1);
        for k in 1..l {
            let c = (2 * k + 1) as f64 / x * b - a;
            a = b;
            b = c;
        }
        return b;
    }
    // small-argument magnitude estimate x^l/(2l+1)!!
    if (l as f64) * x.ln() - ln_double_factorial_odd(l) < BESSEL_UNDERFLOW_LN - 5.0 {
        return 0.0;
    }
    miller(l, x, j0, j1)
}

fn miller(l: usize, x: f64, j0: f64, j1: f64) -> f64 {
    const BIG: f64 = 1e100;
    let start = l + 20 + (160.0 * (l as f64 + x)).sqrt() as usize;
    let mut f_up = 0.0; // f_{k+1}
    let mut f = 1e-30; // f_k
    let mut sum = 0.0;
    let mut val = 0.0;
    let mut k = start;
    loop {
        sum += (2 * k + 1) as f64 * f * f;
        if k == l {
            val = f;
        }
        if k == 1 {
            break;
        }
        let f_down = (2 * k + 1) as f64 / x * f - f_up;
        f_up = f;
        f = f_down;
        k -= 1;
        if f.abs() > BIG {
            f /= BIG;
            f_up /= BIG;
            sum /= BIG * BIG;
            if k < l {
                val /= BIG;
            }
        }
    }
    // f holds f_1, f_up holds f_2; step once more for f_0
    let f1 = f;
    let f0 = 3.0 / x * f1 - f_up;
    sum += f0 * f0;
    let norm = sum.sqrt();
    let sign = if j0.abs() >= j1.abs() { (f0 * j0).signum() } else { (f1 * j1).signum() };
    sign * val / norm
}

/// Orthonormal spherical harmonic Y_lm(θ, φ) with the Condon–Shortley phase.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::Domain(format!("spherical_harmonic: |m| = {am} > l = {l}")));
    }
    let p = normalized_legendre(l, am, theta.cos(), theta.sin().abs());
    let y = Complex64::from_polar(p, am as f64 * phi);
    Ok(if m >= 0 {
        y
    } else if am % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    })
}

/// Normalised associated Legendre factor of Y_lm for m ≥ 0, so that
/// Y_lm = P̄(cos θ) e^{imφ}.
pub(crate) fn normalized_legendre(l: usize, m: usize, cos_t: f64, sin_t: f64) -> f64 {
    let mut ln_pmm = 0.5 * ((2 * m + 1) as f64 / (4.0 * PI)).ln();
    for k in 1..=m {
        ln_pmm += 0.5 * (((2 * k - 1) as f64) / ((2 * k) as f64)).ln();
    }
    let pmm = if m == 0 {
        ln_pmm.exp()
    } else if sin_t == 0.0 {
        0.0
    } else {
        let ln = ln_pmm + m as f64 * sin_t.ln();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        if ln < -745.0 {
            0.0
        } else {
            sign * ln.exp()
        }
    };
    if l == m {
        return pmm;
    }
    let mut p_prev = pmm;
    let mut p = ((2 * m + 3) as f64).sqrt() * cos_t * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (cos_t * p - b * p_prev);
        p_prev = p;
        p = next;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn airy_maclaurin(x: f64) -> f64 {
        // Ai(x) = c1 f(x) - c2 g(x)
        let c1 = AI0;
        let c2 = -AIP0;
        let (mut f, mut g) = (1.0, x);
        let (mut tf, mut tg) = (1.0, x);
        for k in 1..200 {
            let k = k as f64;
            tf *= x * x * x / ((3.0 * k - 1.0) * (3.0 * k));
            tg *= x * x * x / ((3.0 * k) * (3.0 * k + 1.0));
            f += tf;
            g += tg;
            if tf.abs() < 1e-20 && tg.abs() < 1e-20 {
                break;
            }
        }
        c1 * f - c2 * g
    }

    fn bisect_root(mut lo: f64, mut hi: f64) -> f64 {
        let f = |z: f64| airy_maclaurin(-z);
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn airy_roots_match_series_bisection() {
        let brackets = [(2.0, 2.6), (3.8, 4.3), (5.3, 5.8)];
        for (q, (lo, hi)) in brackets.iter().enumerate() {
            let oracle = bisect_root(*lo, *hi);
            let z = airy_root(q + 1).unwrap();
            assert!((z - oracle).abs() < 1e-9, "q={} z={z} oracle={oracle}", q + 1);
        }
        assert!((airy_root(1).unwrap() - 2.338_107_4).abs() < 1e-7);
        assert!((airy_root(2).unwrap() - 4.087_949_4).abs() < 1e-7);
        assert!((airy_root(3).unwrap() - 5.520_559_8).abs() < 1e-7);
    }

    #[test]
    fn airy_taylor_agrees_with_series() {
        for &x in &[-0.3, -1.0, -2.5, -4.0, 0.5, 1.5] {
            let (ai, _) = airy_ai(x);
            assert!((ai - airy_maclaurin(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn airy_roots_increase_with_small_residual() {
        let mut last = 0.0;
        for q in 1..=MAX_AIRY_ROOT {
            let z = airy_root(q).unwrap();
            assert!(z > last);
            assert!(airy_ai(-z).0.abs() < 1e-10);
            last = z;
        }
        assert!(airy_root(0).is_err());
        assert!(airy_root(11).is_err());
    }

    #[test]
    fn bessel_small_orders() {
        assert!(spherical_bessel(0, PI).abs() < 1e-15);
        let x: f64 = 1e-4;
        assert!((spherical_bessel(1, x) / x - 1.0 / 3.0).abs() < 1e-8);
        for &x in &[0.3f64, 1.7, 4.0, 12.5] {
            let j2 = (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x);
            assert!((spherical_bessel(2, x) - j2).abs() < 1e-12 * j2.abs().max(1e-3));
        }
    }

    #[test]
    fn bessel_two_sided_recurrence() {
        // l = 5, x = 10: upward from j0, j1 versus Miller downward
        let x: f64 = 10.0;
        let j0 = x.sin() / x;
        let j1 = x.sin() / (x * x) - x.cos() / x;
        let up = spherical_bessel(5, x);
        let down = miller(5, x, j0, j1);
        assert!(((up - down) / up).abs() < 1e-10, "{up} vs {down}");
    }

    #[test]
    fn bessel_large_order_continuity() {
        // across the x = l switch between the two recurrences
        let l = 400;
        let below = spherical_bessel(l, l as f64 - 1e-9);
        let above = spherical_bessel(l, l as f64 + 1e-9);
        assert!(((below - above) / above).abs() < 1e-7);
        // Miller at x slightly below l matches upward forced at the same x
        let x: f64 = 395.0;
        let j0 = x.sin() / x;
        let j1 = x.sin() / (x * x) - x.cos() / x;
        let (mut a, mut b) = (j0, j1);
        for k in 1..l {
            let c = (2 * k + 1) as f64 / x * b - a;
            a = b;
            b = c;
        }
        let m = miller(l, x, j0, j1);
        assert!(((b - m) / m).abs() < 1e-8, "{b} vs {m}");
        assert_eq!(spherical_bessel(2000, 1.0), 0.0);
    }

    #[test]
    fn harmonic_special_values() {
        let y00 = spherical_harmonic(0, 0, 0.7, 1.1).unwrap();
        assert!((y00.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15 && y00.im.abs() < 1e-15);
        assert!(spherical_harmonic(1, 0, PI / 2.0, 0.0).unwrap().norm() < 1e-15);
        assert!(spherical_harmonic(2, 3, 0.1, 0.0).is_err());
        // closed-form Y_1^1 = -sqrt(3/8π) sinθ e^{iφ}
        let y11 = spherical_harmonic(1, 1, 0.4, 0.3).unwrap();
        let exact = Complex64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * 0.4f64.sin(), 0.3);
        assert!((y11 - exact).norm() < 1e-14);
        let y1m1 = spherical_harmonic(1, -1, 0.4, 0.3).unwrap();
        assert!((y1m1 + exact.conj()).norm() < 1e-14);
    }
}

use crate::error::{Error, Result};

/// Refractive index as a function of vacuum wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexModel {
    /// Wavelength-independent index.
    Constant(f64),
    /// Congruent lithium niobate, extraordinary polarisation (Zelmon Sellmeier fit).
    LithiumNiobateExtraordinary,
    /// Congruent lithium niobate, ordinary polarisation (Zelmon Sellmeier fit).
    LithiumNiobateOrdinary,
}

impl Default for IndexModel {
    fn default() -> Self {
        IndexModel::LithiumNiobateExtraordinary
    }
}

/// Sellmeier validity band in metres.
pub const SELLMEIER_BAND: (f64, f64) = (0.4e-6, 5.0e-6);

fn sellmeier(coeffs: [(f64, f64); 3], lambda_um: f64) -> f64 {
    let l2 = lambda_um * lambda_um;
    let n2 = 1.0 + coeffs.iter().map(|&(a, b)| a * l2 / (l2 - b)).sum::<f64>();
    n2.sqrt()
}

impl IndexModel {
    /// Index at vacuum wavelength `lambda` (metres).
    pub fn index(&self, lambda: f64) -> Result<f64> {
        let n = match *self {
            IndexModel::Constant(n) => n,
            IndexModel::LithiumNiobateExtraordinary | IndexModel::LithiumNiobateOrdinary => {
                if !(SELLMEIER_BAND.0..=SELLMEIER_BAND.1).contains(&lambda) {
                    return Err(Error::Range(format!(
                        "wavelength {:.1} nm outside Sellmeier band 400-5000 nm",
                        lambda * 1e9
                    )));
                }
                let coeffs = if matches!(self, IndexModel::LithiumNiobateExtraordinary) {
                    [(2.9804, 0.02047), (0.5981, 0.0666), (8.9543, 416.08)]
                } else {
                    [(2.6734, 0.01764), (1.2290, 0.05914), (12.614, 474.60)]
                };
                sellmeier(coeffs, lambda * 1e6)
            }
        };
        if !(n > 1.0) || !n.is_finite() {
            return Err(Error::Domain(format!("refractive index {n} must exceed 1")));
        }
        Ok(n)
    }

    pub fn name(&self) -> String {
        match self {
            IndexModel::Constant(n) => format!("constant:{n}"),
            IndexModel::LithiumNiobateExtraordinary => "ln_extraordinary".into(),
            IndexModel::LithiumNiobateOrdinary => "ln_ordinary".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ln_extraordinary" => Ok(IndexModel::LithiumNiobateExtraordinary),
            "ln_ordinary" => Ok(IndexModel::LithiumNiobateOrdinary),
            other => other
                .strip_prefix("constant:")
                .and_then(|v| v.parse::<f64>().ok())
                .map(IndexModel::Constant)
                .ok_or_else(|| Error::Data(format!("unknown index model '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lithium_niobate_telecom_values() {
        let ne = IndexModel::LithiumNiobateExtraordinary.index(1.55e-6).unwrap();
        let no = IndexModel::LithiumNiobateOrdinary.index(1.55e-6).unwrap();
        assert!((ne - 2.138).abs() < 2e-3, "{ne}");
        assert!((no - 2.211).abs() < 2e-3, "{no}");
        // normal dispersion
        assert!(IndexModel::LithiumNiobateExtraordinary.index(0.775e-6).unwrap() > ne);
    }

    #[test]
    fn rejects_bad_index() {
        assert!(IndexModel::Constant(0.9).index(1e-6).is_err());
        assert!(IndexModel::LithiumNiobateExtraordinary.index(10e-6).is_err());
        assert_eq!(IndexModel::parse("constant:2.14").unwrap(), IndexModel::Constant(2.14));
    }
}

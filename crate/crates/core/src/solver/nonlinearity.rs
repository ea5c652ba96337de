use serde::{Deserialize, Serialize};

use crate::error::{MfsError, Result};

/// The reaction term `f(x, t)` with primitive `F`. Built-in terms do not
/// depend on `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Nonlinearity {
    /// `f = 0`.
    Zero,
    /// `F(t) = |t|^r log(1 + |t|)`.
    PowerLog { r: f64 },
}

impl Nonlinearity {
    pub fn power_log(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 1.0) {
            return Err(MfsError::Config(format!("PowerLog exponent must satisfy r > 1, got {r}")));
        }
        Ok(Nonlinearity::PowerLog { r })
    }

    /// Check the parameters of a deserialized term.
    pub fn validate(&self) -> Result<()> {
        match self {
            Nonlinearity::Zero => Ok(()),
            Nonlinearity::PowerLog { r } => Nonlinearity::power_log(*r).map(|_| ()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Nonlinearity::Zero => "zero".into(),
            Nonlinearity::PowerLog { r } => format!("powerlog(r={r})"),
        }
    }

    /// `F(t)`.
    #[inline]
    pub fn primitive(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::PowerLog { r } => {
                let a = t.abs();
                a.powf(*r) * a.ln_1p()
            }
        }
    }

    /// `f(t) = F'(t)`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::PowerLog { r } => {
                let a = t.abs();
                if a == 0.0 {
                    return 0.0;
                }
                let ar = a.powf(*r);
                t.signum() * (r * ar / a * a.ln_1p() + ar / (1.0 + a))
            }
        }
    }

    /// `f'(t)`.
    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::PowerLog { r } => {
                let a = t.abs().max(1e-300);
                let l = a.ln_1p();
                let am1 = a.powf(r - 1.0);
                r * (r - 1.0) * a.powf(r - 2.0) * l + 2.0 * r * am1 / (1.0 + a) - a * am1 / ((1.0 + a) * (1.0 + a))
            }
        }
    }

    /// `Fbar(t) = t f(t) - m F(t)`.
    #[inline]
    pub fn defect(&self, t: f64, m: f64) -> f64 {
        t * self.value(t) - m * self.primitive(t)
    }

    /// Closed form of `Fbar` for the PowerLog term:
    /// `|t|^{r+1}/(1+|t|) + (r - m)|t|^r log(1+|t|)`.
    pub fn defect_closed_form(&self, t: f64, m: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::PowerLog { r } => {
                let a = t.abs();
                a.powf(r + 1.0) / (1.0 + a) + (r - m) * a.powf(*r) * a.ln_1p()
            }
        }
    }

    /// Growth witness `Psi = F` with its exponents `(ell_Psi, m_Psi) = (r, r + 1)`.
    pub fn psi_exponents(&self) -> Option<(f64, f64)> {
        match self {
            Nonlinearity::Zero => None,
            Nonlinearity::PowerLog { r } => Some((*r, r + 1.0)),
        }
    }

    /// `t psi(t) / Psi(t) * t`, i.e. `t^2 psi(t) / Psi(t) = r + t / ((1+t) log(1+t))`.
    pub fn psi_ratio(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::Zero => f64::NAN,
            Nonlinearity::PowerLog { .. } => t * self.value(t) / self.primitive(t),
        }
    }

    /// Default exponent of the witness `Gamma(t) = |t|^gamma`: the midpoint
    /// of `(N/ell, r/(r - ell))`, or `N/ell + 1` when that window is
    /// empty or unbounded.
    pub fn default_gamma(&self, dim: usize, ell: f64) -> f64 {
        let lo = dim as f64 / ell;
        match self {
            Nonlinearity::PowerLog { r } if *r > ell => {
                let hi = r / (r - ell);
                if hi > lo {
                    0.5 * (lo + hi)
                } else {
                    lo + 1.0
                }
            }
            _ => lo + 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matches_primitive() {
        let nl = Nonlinearity::power_log(3.0).unwrap();
        for &t in &[-2.5f64, -0.1, 0.3, 1.0, 7.0] {
            let h = 1e-6 * t.abs().max(1.0);
            let fd = (nl.primitive(t + h) - nl.primitive(t - h)) / (2.0 * h);
            assert!((fd - nl.value(t)).abs() < 1e-6 * fd.abs().max(1.0));
            let fd2 = (nl.value(t + h) - nl.value(t - h)) / (2.0 * h);
            assert!((fd2 - nl.derivative(t)).abs() < 1e-6 * fd2.abs().max(1.0));
        }
        assert_eq!(nl.value(0.0), 0.0);
    }

    #[test]
    fn defect_identity() {
        let nl = Nonlinearity::power_log(3.0).unwrap();
        for &t in &[0.01, 0.5, 2.0, 100.0] {
            let a = nl.defect(t, 2.5);
            let b = nl.defect_closed_form(t, 2.5);
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn psi_ratio_range() {
        let nl = Nonlinearity::power_log(3.0).unwrap();
        for &t in &[1e-6, 1e-2, 1.0, 1e3, 1e6] {
            let q = nl.psi_ratio(t);
            assert!((3.0..=4.0).contains(&q), "{t}: {q}");
        }
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(Nonlinearity::power_log(1.0).is_err());
        assert!(Nonlinearity::power_log(f64::NAN).is_err());
    }
}

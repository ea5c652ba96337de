//! Generalized N-functions, their conjugates and growth certificates.

mod conjugate;
mod critical;
mod family;
mod field;
mod growth;

pub use conjugate::{conjugate, ConjugateTable, ConjugateValue, DEFAULT_CONJUGATE_DEPTH};
pub use critical::{sobolev_conjugate_inverse, SobolevConjugate};
pub use family::{DensityRule, FamilyKind, LocalPhi, NFunctionFamily};
pub use field::{FieldRule, SymmetricField};
pub use growth::{growth_certificate, GrowthCertificate, SamplePlan};

use crate::error::{MfsError, Result};

/// Which pair of power functions bounds the scaling of a modular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiKind {
    /// Exponents `(ell, m)`.
    Zero,
    /// Conjugate exponents `(ell/(ell-1), m/(m-1))`.
    One,
    /// Fractional Sobolev exponents `(N ell/(N - s ell), N m/(N - s m))`.
    Two { dim: usize, s: f64 },
}

/// The exponents `(alpha, beta)` used by `xi_bounds`.
pub fn xi_exponents(which: XiKind, ell: f64, m: f64) -> Result<(f64, f64)> {
    if !(ell.is_finite() && m.is_finite() && ell > 0.0 && m >= ell) {
        return Err(MfsError::Domain(format!("need 0 < ell <= m < inf, got ell={ell}, m={m}")));
    }
    match which {
        XiKind::Zero => Ok((ell, m)),
        XiKind::One => {
            if ell <= 1.0 {
                return Err(MfsError::Domain(format!("conjugate exponents need ell > 1, got {ell}")));
            }
            Ok((ell / (ell - 1.0), m / (m - 1.0)))
        }
        XiKind::Two { dim, s } => {
            let n = dim as f64;
            if dim == 0 || !(s > 0.0 && s < 1.0) {
                return Err(MfsError::Domain(format!("need N >= 1 and s in (0,1), got N={dim}, s={s}")));
            }
            if ell <= 1.0 || m >= n / s {
                return Err(MfsError::Domain(format!(
                    "critical exponents need ell, m in (1, N/s) = (1, {}), got ell={ell}, m={m}",
                    n / s
                )));
            }
            Ok((n * ell / (n - s * ell), n * m / (n - s * m)))
        }
    }
}

/// `(min{sigma^alpha, sigma^beta}, max{sigma^alpha, sigma^beta})`.
pub fn xi_bounds(which: XiKind, ell: f64, m: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(sigma >= 0.0) {
        return Err(MfsError::Domain(format!("sigma must be >= 0, got {sigma}")));
    }
    let (a, b) = xi_exponents(which, ell, m)?;
    let (x, y) = (sigma.powf(a), sigma.powf(b));
    Ok((x.min(y), x.max(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_zero_at_half() {
        assert_eq!(xi_bounds(XiKind::Zero, 2.0, 3.0, 0.5).unwrap(), (0.125, 0.25));
    }

    #[test]
    fn xi_one_at_four() {
        let (lo, hi) = xi_bounds(XiKind::One, 2.0, 3.0, 4.0).unwrap();
        assert!((lo - 8.0).abs() < 1e-12 && (hi - 16.0).abs() < 1e-12);
    }

    #[test]
    fn every_kind_is_one_at_one() {
        for k in [XiKind::Zero, XiKind::One, XiKind::Two { dim: 2, s: 0.25 }] {
            assert_eq!(xi_bounds(k, 2.0, 3.0, 1.0).unwrap(), (1.0, 1.0));
        }
    }

    #[test]
    fn xi_two_exponents_and_range() {
        let (a, b) = xi_exponents(XiKind::Two { dim: 2, s: 0.5 }, 2.0, 3.0).unwrap();
        assert!((a - 4.0).abs() < 1e-14 && (b - 12.0).abs() < 1e-14);
        assert!(xi_bounds(XiKind::Two { dim: 2, s: 0.5 }, 2.0, 4.0, 2.0).is_err());
        assert!(xi_bounds(XiKind::One, 1.0, 3.0, 2.0).is_err());
        assert!(xi_bounds(XiKind::Zero, 2.0, 3.0, -1.0).is_err());
    }
}

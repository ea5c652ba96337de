//! The Musielak–Sobolev conjugate through its inverse
//! `G(t) = int_0^t PhiHat_x^{-1}(tau) tau^{-(N+s)/N} dtau`.
//!
//! With `tau = t e^{-v}` the integral becomes
//! `int_0^inf PhiHat^{-1}(t e^{-v}) (t e^{-v})^{-s/N} dv`, whose integrand is
//! smooth and decays exponentially in `v` when the integrability condition
//! at zero holds. It is integrated with 8-point Gauss–Legendre panels and
//! an exponential tail fitted to the last panel.

use std::cell::Cell;

use crate::error::{MfsError, Result};
use crate::nfunc::{LocalPhi, NFunctionFamily};
use crate::numeric::{gauss_legendre, invert_increasing};
use crate::Point;

const PANEL: f64 = 2.0;
const MAX_PANELS: usize = 5000;

/// `PhiHat*_{s,x}` and its inverse at a fixed point `x`.
#[derive(Debug, Clone)]
pub struct SobolevConjugate {
    hat: LocalPhi,
    s: f64,
    dim: usize,
    /// Mean growth exponent, used to extrapolate starting guesses.
    slope: f64,
}

impl SobolevConjugate {
    pub fn new(fam: &NFunctionFamily, x: Point, s: f64, dim: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(MfsError::Domain(format!("fractional order must lie in (0,1), got {s}")));
        }
        if dim == 0 {
            return Err(MfsError::Domain("dimension must be positive".into()));
        }
        // Near zero PhiHat^{-1}(tau) <= C tau^{1/m}, so the integrand behaves
        // at worst like tau^{1/m - (N+s)/N}.
        let exponent = 1.0 / fam.m() - (dim as f64 + s) / dim as f64;
        if exponent <= -1.0 {
            return Err(MfsError::CriticalCondition(format!(
                "integrand ~ tau^{exponent:.4} is not integrable at 0 (needs m < N/s = {})",
                dim as f64 / s
            )));
        }
        fam.check_pair(x, x)?;
        Ok(Self { hat: fam.local_hat(x), s, dim, slope: 0.5 * (fam.ell() + fam.m()) })
    }

    /// `(PhiHat*_{s,x})^{-1}(t)`.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        Ok(self.inverses(&[t])?[0])
    }

    /// `(PhiHat*_{s,x})^{-1}` at several arguments. In `w = log tau` the
    /// inverse is the running integral of `PhiHat^{-1}(e^w) e^{(1-s/N) w}`,
    /// so only the smallest argument needs the tail near zero.
    pub fn inverses(&self, ts: &[f64]) -> Result<Vec<f64>> {
        if let Some(t) = ts.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(MfsError::Domain(format!("argument must be finite and >= 0, got {t}")));
        }
        let mut order: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] > 0.0).collect();
        order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
        let mut out = vec![0.0; ts.len()];
        let Some(&first) = order.first() else {
            return Ok(out);
        };
        let f = Integrand::new(self);
        let mut total = self.tail(&f, ts[first])?;
        out[first] = total;
        let mut prev = ts[first];
        for &i in &order[1..] {
            let span = (ts[i] / prev).ln();
            if span > 0.0 {
                let panels = (span / PANEL).ceil().max(1.0) as usize;
                let width = span / panels as f64;
                let base = ts[i];
                for k in 0..panels {
                    total += gauss_legendre(|v| f.eval(base, v), k as f64 * width, (k + 1) as f64 * width);
                }
            }
            out[i] = total;
            prev = ts[i];
        }
        Ok(out)
    }

    /// `int_0^inf PhiHat^{-1}(t e^{-v}) (t e^{-v})^{-s/N} dv`.
    fn tail(&self, f: &Integrand, t: f64) -> Result<f64> {
        let mut total = 0.0;
        let mut v = 0.0;
        let mut prev_end = f.eval(t, 0.0);
        let mut prev_rate = f64::NAN;
        for _ in 0..MAX_PANELS {
            let piece = gauss_legendre(|v| f.eval(t, v), v, v + PANEL);
            total += piece;
            v += PANEL;
            let end = f.eval(t, v);
            let rate = (prev_end / end).ln() / PANEL;
            if rate > 0.0 {
                // Once the decay rate settles the integrand is a pure
                // exponential to working precision and the tail is exact.
                let tail = end / rate;
                let drift = tail * ((rate - prev_rate) / rate).abs();
                if piece <= 1e-18 * total || drift <= 1e-15 * (total + tail) {
                    return Ok(total + tail);
                }
            } else if piece <= 1e-18 * total {
                break;
            }
            prev_end = end;
            prev_rate = rate;
        }
        Err(MfsError::CriticalCondition(format!("integral near 0 did not converge for t={t} (integrand not decaying)")))
    }

    /// `PhiHat*_{s,x}(t)` by bisection on the increasing inverse.
    pub fn forward(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while self.inverse(hi)? < t {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(MfsError::Overflow("Sobolev conjugate exceeds range".into()));
            }
        }
        let mut lo = 0.5 * hi;
        while lo > 1e-300 && self.inverse(lo)? > t {
            lo *= 0.5;
        }
        let f = |a: f64| self.inverse(a).unwrap_or(f64::INFINITY);
        Ok(invert_increasing(f, t, lo, hi, 1e-15))
    }
}

/// The integrand with the last inverse kept as a starting guess for the
/// next node, which is always close in `log tau`.
struct Integrand<'a> {
    sc: &'a SobolevConjugate,
    beta: f64,
    slope: f64,
    last: Cell<(f64, f64)>,
}

impl<'a> Integrand<'a> {
    fn new(sc: &'a SobolevConjugate) -> Self {
        Self { sc, beta: sc.s / sc.dim as f64, slope: sc.slope, last: Cell::new((0.0, 0.0)) }
    }

    fn eval(&self, t: f64, v: f64) -> f64 {
        let tau = t * (-v).exp();
        let (tau0, x0) = self.last.get();
        let guess = if x0 > 0.0 { x0 * (tau / tau0).powf(1.0 / self.slope) } else { 1.0 };
        let x = self.sc.hat.inverse_from(tau, guess);
        self.last.set((tau, x));
        x * tau.powf(-self.beta)
    }
}

/// One-shot evaluation of `(PhiHat*_{s,x})^{-1}(t)`.
pub fn sobolev_conjugate_inverse(fam: &NFunctionFamily, x: Point, s: f64, dim: usize, t: f64) -> Result<f64> {
    SobolevConjugate::new(fam, x, s, dim)?.inverse(t)
}

//! Numerical Young conjugate `sup_{s >= 0} (t s - Phi(s))`.
//!
//! The supremum of the concave map `g(s) = t s - Phi(s)` sits where
//! `s phi(s) = t`. The maximizer is bracketed using monotonicity of the
//! density and refined by bisection on `g'`; at every level the bracket
//! midpoint and the secant root of `g'` are evaluated and the running
//! maximum is kept, so the returned value never decreases with depth.
//!
//! Accuracy bound: for a bracket `[lo, hi]` with `g'(lo) >= 0 >= g'(hi)`,
//! concavity gives `g(s*) - g(lo) <= g'(lo) (hi - lo)` and the symmetric
//! bound at `hi`.

use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::nfunc::{LocalPhi, NFunctionFamily};
use crate::Point;

pub const DEFAULT_CONJUGATE_DEPTH: u32 = 64;

/// A lower approximation of the conjugate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugateValue {
    pub value: f64,
    /// Upper bound on `exact - value`.
    pub accuracy: f64,
    /// Best point found; approximates `(Phi')^{-1}(t)`, the derivative of
    /// the conjugate at `t`.
    pub maximizer: f64,
    /// False when `depth` ran out before the bracket collapsed.
    pub converged: bool,
}

impl LocalPhi {
    pub fn conjugate(&self, t: f64, depth: u32) -> ConjugateValue {
        let t = t.abs();
        if t == 0.0 {
            return ConjugateValue { value: 0.0, accuracy: 0.0, maximizer: 0.0, converged: true };
        }
        let g = |s: f64| t * s - self.phi(s);
        let slope = |s: f64| t - self.density(s);

        let mut hi = 1.0f64;
        let mut lo;
        if slope(hi) > 0.0 {
            lo = hi;
            let mut guard = 0;
            while slope(hi) > 0.0 && guard < 2000 {
                lo = hi;
                hi *= 2.0;
                guard += 1;
            }
        } else {
            let mut cand = 0.5;
            while cand > 1e-300 && slope(cand) <= 0.0 {
                hi = cand;
                cand *= 0.5;
            }
            lo = if cand > 1e-300 { cand } else { 0.0 };
        }

        let mut best = (0.0f64, 0.0f64);
        let consider = |s: f64, best: &mut (f64, f64)| {
            let v = g(s);
            if v > best.0 {
                *best = (v, s);
            }
        };
        consider(lo, &mut best);
        consider(hi, &mut best);

        let mut d_lo = slope(lo);
        let mut d_hi = slope(hi);
        let mut collapsed = false;
        for _ in 0..depth {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                collapsed = true;
                break;
            }
            let d_mid = slope(mid);
            consider(mid, &mut best);
            if d_mid > 0.0 {
                lo = mid;
                d_lo = d_mid;
            } else {
                hi = mid;
                d_hi = d_mid;
            }
            if d_lo - d_hi > 0.0 {
                let secant = lo + (hi - lo) * d_lo / (d_lo - d_hi);
                if secant > lo && secant < hi {
                    consider(secant, &mut best);
                }
            }
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * hi {
            collapsed = true;
        }
        let bracket_bound = d_lo.max(0.0).min((-d_hi).max(0.0)) * width;
        let rounding = 4.0 * f64::EPSILON * (t * hi + self.phi(hi));
        ConjugateValue {
            value: best.0,
            accuracy: bracket_bound + rounding,
            maximizer: best.1,
            converged: collapsed || bracket_bound <= 1e-15 * best.0.max(1.0),
        }
    }
}

impl LocalPhi {
    /// Conjugate by safeguarded Newton on `s phi(s) = t`. Faster than
    /// [`LocalPhi::conjugate`] and used inside modular sums. Returns
    /// `(value, maximizer)`.
    pub fn conjugate_newton(&self, t: f64) -> (f64, f64) {
        let t = t.abs();
        if t == 0.0 {
            return (0.0, 0.0);
        }
        let mut hi = 1.0f64;
        let mut lo = 0.0f64;
        if self.density(hi) < t {
            while self.density(hi) < t && hi < 1e300 {
                lo = hi;
                hi *= 2.0;
            }
        } else {
            let mut cand = 0.5;
            while cand > 1e-300 && self.density(cand) >= t {
                hi = cand;
                cand *= 0.5;
            }
            if cand > 1e-300 {
                lo = cand;
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = self.density(s) - t;
            if r == 0.0 {
                break;
            }
            if r < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = self.density_slope(s);
            let newton = if slope > 0.0 { s - r / slope } else { f64::NAN };
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let done = (next - s).abs() <= 4.0 * f64::EPSILON * s || hi - lo <= 4.0 * f64::EPSILON * hi;
            s = next;
            if done {
                break;
            }
        }
        ((t * s - self.phi(s)).max(0.0), s)
    }
}

/// Young conjugate of `Phi_{x,y}` at `t >= 0`.
pub fn conjugate(fam: &NFunctionFamily, x: Point, y: Point, t: f64, depth: u32) -> Result<ConjugateValue> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(MfsError::Domain(format!("conjugate requires finite t >= 0, got {t}")));
    }
    if depth == 0 {
        return Err(MfsError::Domain("conjugate depth must be at least 1".into()));
    }
    fam.check_pair(x, y)?;
    Ok(fam.local(x, y).conjugate(t, depth))
}

/// Conjugate values tabulated on a sorted `t`-grid for a set of `(x, y)`
/// samples. Read-only once built.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugateTable {
    pub samples: Vec<(Point, Point)>,
    pub t_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub accuracy: Vec<Vec<f64>>,
    pub depth: u32,
}

impl ConjugateTable {
    pub fn build(fam: &NFunctionFamily, samples: &[(Point, Point)], t_grid: &[f64], depth: u32) -> Result<Self> {
        if t_grid.windows(2).any(|w| !(w[0] < w[1])) || t_grid.first().is_some_and(|t| *t < 0.0) {
            return Err(MfsError::Domain("t-grid must be sorted, strictly increasing and nonnegative".into()));
        }
        let mut values = Vec::with_capacity(samples.len());
        let mut accuracy = Vec::with_capacity(samples.len());
        for &(x, y) in samples {
            let mut row = Vec::with_capacity(t_grid.len());
            let mut acc = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                let c = conjugate(fam, x, y, t, depth)?;
                row.push(c.value);
                acc.push(c.accuracy);
            }
            values.push(row);
            accuracy.push(acc);
        }
        Ok(Self { samples: samples.to_vec(), t_grid: t_grid.to_vec(), values, accuracy, depth })
    }

    /// Largest violation of nonnegativity, monotonicity and discrete
    /// convexity along the grid, net of the reported accuracies. Values
    /// `<= 0` mean the shape checks pass.
    pub fn shape_violation(&self) -> f64 {
        let t = &self.t_grid;
        let mut worst = f64::NEG_INFINITY;
        for (row, acc) in self.values.iter().zip(&self.accuracy) {
            for k in 0..row.len() {
                worst = worst.max(-row[k] - acc[k]);
                if k > 0 {
                    worst = worst.max(row[k - 1] - row[k] - acc[k]);
                }
                if k > 0 && k + 1 < row.len() {
                    let (a, b, c) = (t[k - 1], t[k], t[k + 1]);
                    let interp = row[k - 1] + (row[k + 1] - row[k - 1]) * (b - a) / (c - a);
                    let slack = acc[k - 1] + acc[k] + acc[k + 1] + 1e-12 * row[k + 1].abs();
                    worst = worst.max(row[k] - interp - slack);
                }
            }
        }
        worst
    }

    /// CSV with columns `t,value,accuracy` for one sample.
    pub fn to_csv(&self, sample: usize) -> String {
        let mut out = String::from("t,value,accuracy\n");
        for (k, t) in self.t_grid.iter().enumerate() {
            out.push_str(&format!("{:e},{:e},{:e}\n", t, self.values[sample][k], self.accuracy[sample][k]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunc::SymmetricField;

    const X: Point = [0.2, 0.2];

    fn aniso(p: f64, a: f64) -> NFunctionFamily {
        NFunctionFamily::anisotropic(p, SymmetricField::Constant(a)).unwrap()
    }

    #[test]
    fn quadratic_is_self_conjugate() {
        let c = conjugate(&aniso(2.0, 0.5), X, X, 1.0, DEFAULT_CONJUGATE_DEPTH).unwrap();
        assert!((c.value - 0.5).abs() <= c.accuracy + 1e-15);
        assert!(c.accuracy < 1e-12);
        assert!(c.converged);
    }

    #[test]
    fn cubic_conjugate_matches_legendre_oracle() {
        // Phi(t) = t^3/3 has conjugate t^{3/2}/(3/2).
        let fam = aniso(3.0, 1.0 / 3.0);
        for &t in &[1.0, 0.01, 7.5, 1e4] {
            let c = conjugate(&fam, X, X, t, DEFAULT_CONJUGATE_DEPTH).unwrap();
            let exact = t.powf(1.5) / 1.5;
            assert!(c.value <= exact * (1.0 + 1e-14));
            assert!(exact - c.value <= c.accuracy + 1e-14 * exact, "t={t}");
        }
        let at_one = conjugate(&fam, X, X, 1.0, DEFAULT_CONJUGATE_DEPTH).unwrap();
        assert!((at_one.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_argument_gives_zero() {
        let fam = NFunctionFamily::log_perturbed(SymmetricField::Constant(2.0)).unwrap();
        assert_eq!(conjugate(&fam, X, X, 0.0, 8).unwrap().value, 0.0);
    }

    #[test]
    fn value_is_nondecreasing_in_depth() {
        let fam = NFunctionFamily::double_phase(2.0, 3.0, SymmetricField::Constant(1.0)).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for depth in 1..40 {
            let c = conjugate(&fam, X, X, 3.7, depth).unwrap();
            assert!(c.value >= prev);
            prev = c.value;
        }
    }

    #[test]
    fn shallow_depth_reports_unconverged() {
        let fam = NFunctionFamily::double_phase(2.0, 3.0, SymmetricField::Constant(1.0)).unwrap();
        let c = conjugate(&fam, X, X, 3.7, 2).unwrap();
        assert!(!c.converged);
        assert!(c.accuracy > 1e-6);
    }

    #[test]
    fn newton_variant_agrees_with_bracketing() {
        let fam = NFunctionFamily::log_perturbed(SymmetricField::Constant(2.0)).unwrap();
        let local = fam.local(X, X);
        for &t in &[1e-5, 0.3, 1.0, 42.0, 1e5] {
            let slow = local.conjugate(t, DEFAULT_CONJUGATE_DEPTH);
            let (fast, s) = local.conjugate_newton(t);
            assert!((fast - slow.value).abs() <= slow.accuracy + 1e-13 * slow.value, "t={t}");
            assert!((local.density(s) - t).abs() <= 1e-10 * t);
        }
    }

    #[test]
    fn invalid_arguments() {
        let fam = aniso(2.0, 1.0);
        assert!(conjugate(&fam, X, X, -1.0, 10).is_err());
        assert!(conjugate(&fam, X, X, 1.0, 0).is_err());
    }

    #[test]
    fn table_is_convex_and_monotone() {
        let fam = NFunctionFamily::log_perturbed(SymmetricField::Constant(2.3)).unwrap();
        let grid = crate::numeric::log_grid(1e-3, 1e3, 16);
        let table = ConjugateTable::build(&fam, &[(X, [0.5, 0.5])], &grid, DEFAULT_CONJUGATE_DEPTH).unwrap();
        assert!(table.shape_violation() <= 0.0);
        let csv = table.to_csv(0);
        assert!(csv.starts_with("t,value,accuracy\n"));
        assert_eq!(csv.lines().count(), grid.len() + 1);
    }
}

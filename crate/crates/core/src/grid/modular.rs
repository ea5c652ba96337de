use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::grid::{DiscreteSpace, GridFunction};
use crate::numeric::{log_uniform, par_sum, par_sum2, CompensatedSum};

/// Default tolerance on `|modular(u / lambda) - 1|`.
pub const LUXEMBURG_TOL: f64 = 1e-10;

/// Which modular a Luxemburg norm is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModularKind {
    /// `J_{s,Phi}(u) = int int Phi_{x,y}(|D_s u|) dmu`.
    Gagliardo,
    /// `int PhiHat_x(|u|) dx`.
    Hat,
    /// `int conj(PhiHat_x)(|u|) dx` with the numerical conjugate.
    ConjugateHat,
}

impl DiscreteSpace {
    /// `J_{s,Phi}(u)`.
    pub fn gagliardo(&self, u: &GridFunction) -> f64 {
        self.gagliardo_scaled(u, 1.0).0
    }

    /// `(J(c u), c d/dc J(c u))`, the second being `sum 2 t phi(t) t w` at `t = c|D_s u|`.
    pub fn gagliardo_scaled(&self, u: &GridFunction, c: f64) -> (f64, f64) {
        let uv = u.values();
        let phis = self.pair_phi();
        par_sum2(self.quad().pairs(), |k, p| {
            let t = (c * p.quotient(uv)).abs();
            let (v, d) = phis[k].phi_and_density(t);
            (2.0 * v * p.w, 2.0 * d * t * p.w)
        })
    }

    /// `sum_i PhiHat_{x_i}(|u_i|) h^N`.
    pub fn hat(&self, u: &GridFunction) -> f64 {
        self.hat_scaled(u, 1.0).0
    }

    pub fn hat_scaled(&self, u: &GridFunction, c: f64) -> (f64, f64) {
        let cell = self.domain().cell_measure();
        let mut a = CompensatedSum::new();
        let mut b = CompensatedSum::new();
        for (phi, x) in self.hat_phi().iter().zip(u.values()) {
            let t = (c * x).abs();
            let (v, d) = phi.phi_and_density(t);
            a.add(v);
            b.add(d * t);
        }
        (a.value() * cell, b.value() * cell)
    }

    /// `sum_i conj(PhiHat_{x_i})(|u_i|) h^N`.
    pub fn conjugate_hat(&self, u: &GridFunction) -> f64 {
        self.conjugate_hat_scaled(u, 1.0).0
    }

    pub fn conjugate_hat_scaled(&self, u: &GridFunction, c: f64) -> (f64, f64) {
        let cell = self.domain().cell_measure();
        let phis = self.hat_phi();
        let (a, b) = par_sum2(u.values(), |k, x| {
            let t = (c * x).abs();
            let (v, s) = phis[k].conjugate_newton(t);
            (v, s * t)
        });
        (a * cell, b * cell)
    }

    pub fn modular(&self, kind: ModularKind, u: &GridFunction) -> f64 {
        self.modular_scaled(kind, u, 1.0).0
    }

    pub fn modular_scaled(&self, kind: ModularKind, u: &GridFunction, c: f64) -> (f64, f64) {
        match kind {
            ModularKind::Gagliardo => self.gagliardo_scaled(u, c),
            ModularKind::Hat => self.hat_scaled(u, c),
            ModularKind::ConjugateHat => self.conjugate_hat_scaled(u, c),
        }
    }

    /// `J(u)` restricted to the pairs touching interior node `k`, for `u`
    /// supported on that node only: `sum 2 Phi(c |u_k| / r^s) w`.
    pub fn gagliardo_single_node(&self, k: usize, value: f64) -> (f64, f64) {
        let pairs = self.quad().pairs();
        let phis = self.pair_phi();
        let mut a = CompensatedSum::new();
        let mut b = CompensatedSum::new();
        for &idx in self.quad().pairs_of(k) {
            let p = &pairs[idx as usize];
            let t = value.abs() * p.inv_rs;
            let (v, d) = phis[idx as usize].phi_and_density(t);
            a.add(2.0 * v * p.w);
            b.add(2.0 * d * t * p.w);
        }
        (a.value(), b.value())
    }

    pub fn luxemburg(&self, kind: ModularKind, u: &GridFunction, tol: f64) -> Result<f64> {
        self.check(u)?;
        if u.is_zero() {
            return Ok(0.0);
        }
        luxemburg_with(|c| self.modular_scaled(kind, u, c), tol)
    }

    /// `[u]_{s,Phi}` with the default tolerance.
    pub fn norm(&self, u: &GridFunction) -> Result<f64> {
        self.luxemburg(ModularKind::Gagliardo, u, LUXEMBURG_TOL)
    }
}

pub fn modular_gagliardo(u: &GridFunction, space: &DiscreteSpace) -> f64 {
    space.gagliardo(u)
}

pub fn modular_hat(u: &GridFunction, space: &DiscreteSpace) -> f64 {
    space.hat(u)
}

pub fn luxemburg(u: &GridFunction, kind: ModularKind, space: &DiscreteSpace, tol: f64) -> Result<f64> {
    space.luxemburg(kind, u, tol)
}

/// Solve `M(c) = 1` for `lambda = 1/c`, where `c -> (M(c), c M'(c))` is a
/// nonnegative increasing modular along the ray `c u`.
///
/// The bracket is found by doubling or halving from `lambda = 1`; inside
/// it Newton steps on `log M` against `log c` are taken, falling back to
/// geometric bisection whenever a step leaves the bracket.
pub fn luxemburg_with<F: Fn(f64) -> (f64, f64)>(modular: F, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(MfsError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut c = 1.0f64;
    let mut m = modular(c).0;
    let mut p: f64;
    if (m - 1.0).abs() <= tol {
        return Ok(1.0);
    }
    let (mut c_lo, mut c_hi);
    if m > 1.0 {
        c_hi = c;
        let mut k = 0;
        loop {
            c *= 0.5;
            (m, p) = modular(c);
            k += 1;
            if m <= 1.0 {
                break;
            }
            if k >= 200 {
                return Err(MfsError::Overflow("no Luxemburg bracket after 200 doublings".into()));
            }
        }
        c_lo = c;
    } else {
        c_lo = c;
        let mut k = 0;
        loop {
            c *= 2.0;
            (m, p) = modular(c);
            k += 1;
            if m >= 1.0 {
                break;
            }
            if k >= 200 || !m.is_finite() {
                return Err(MfsError::Overflow("no Luxemburg bracket after 200 halvings".into()));
            }
        }
        c_hi = c;
    }
    for _ in 0..400 {
        if (m - 1.0).abs() <= tol {
            return Ok(1.0 / c);
        }
        if m < 1.0 {
            c_lo = c;
        } else {
            c_hi = c;
        }
        if c_hi - c_lo <= 4.0 * f64::EPSILON * c_hi {
            return Ok(1.0 / c);
        }
        let newton = if m > 0.0 && p > 0.0 { c * (-m.ln() * m / p).exp() } else { f64::NAN };
        c = if newton > c_lo && newton < c_hi { newton } else { (c_lo * c_hi).sqrt() };
        (m, p) = modular(c);
    }
    Err(MfsError::NonConvergence("Luxemburg iteration did not reach tolerance".into()))
}

/// Result of [`poincare_lambda1_estimate`].
#[derive(Debug, Clone, Serialize)]
pub struct PoincareEstimate {
    /// Empirical lower bound on the best discrete constant.
    pub lambda1: f64,
    pub trials: usize,
    /// Description of the maximizing sample.
    pub witness_kind: String,
    pub witness_amplitude: f64,
    pub witness_index: usize,
}

/// The `k`-th sample of the Poincaré search: constants, bumps, Gaussian
/// fields and oscillatory fields in turn, at log-uniform amplitudes.
pub fn poincare_sample<R: Rng + ?Sized>(
    space: &DiscreteSpace,
    k: usize,
    rng: &mut R,
) -> (GridFunction, &'static str, f64) {
    let d = space.domain();
    let amp = log_uniform(rng, 1e-2, 1e2);
    let (lo, hi) = d.bounding_box();
    let (u, kind) = match k % 4 {
        0 => (GridFunction::constant(d, 1.0), "constant"),
        1 => {
            let c = [lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(), lo[1] + (hi[1] - lo[1]) * rng.random::<f64>()];
            let w = d.diameter() * (0.05 + 0.3 * rng.random::<f64>());
            (GridFunction::bump(d, c, w), "bump")
        }
        2 => (GridFunction::gaussian(d, rng), "gaussian"),
        _ => {
            let fx = 1.0 + (rng.random::<f64>() * 4.0).floor();
            let fy = 1.0 + (rng.random::<f64>() * 4.0).floor();
            let w = [hi[0] - lo[0], (hi[1] - lo[1]).max(1e-300)];
            let u = GridFunction::from_fn(d, |p| {
                let a = (std::f64::consts::PI * fx * (p[0] - lo[0]) / w[0]).sin();
                let b = if d.dim() == 2 { (std::f64::consts::PI * fy * (p[1] - lo[1]) / w[1]).sin() } else { 1.0 };
                a * b
            });
            (u, "oscillatory")
        }
    };
    let m = u.max_abs();
    let u = if m > 0.0 { u.scaled(amp / m) } else { u };
    (u, kind, amp)
}

/// `max modular_hat(u) / modular_gagliardo(u)` over `trials` samples.
/// The sample sequence depends only on `seed`, so the estimate is
/// nondecreasing in `trials`.
pub fn poincare_lambda1_estimate(space: &DiscreteSpace, trials: usize, seed: u64) -> Result<PoincareEstimate> {
    if trials == 0 {
        return Err(MfsError::Domain("at least one trial is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = PoincareEstimate {
        lambda1: f64::NEG_INFINITY,
        trials,
        witness_kind: String::new(),
        witness_amplitude: 0.0,
        witness_index: 0,
    };
    for k in 0..trials {
        let (u, kind, amp) = poincare_sample(space, k, &mut rng);
        let j = space.gagliardo(&u);
        if u.is_zero() || !(j > 0.0) {
            continue;
        }
        let ratio = space.hat(&u) / j;
        if ratio > best.lambda1 {
            best.lambda1 = ratio;
            best.witness_kind = kind.to_string();
            best.witness_amplitude = amp;
            best.witness_index = k;
        }
    }
    if !best.lambda1.is_finite() {
        return Err(MfsError::Domain("every Poincaré sample was zero".into()));
    }
    Ok(best)
}

/// Total of `f` over interior nodes times `h^N`, compensated.
pub fn integrate_nodes<F: Fn(usize, f64) -> f64 + Sync>(space: &DiscreteSpace, u: &GridFunction, f: F) -> f64 {
    par_sum(u.values(), |k, v| f(k, *v)) * space.domain().cell_measure()
}

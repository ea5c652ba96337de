use rand::Rng;
use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::nfunc::NFunctionFamily;
use crate::numeric::log_grid;
use crate::Point;

/// Where to sample `t` and `(x, y)` when certifying growth exponents.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub pairs: Vec<(Point, Point)>,
}

impl SamplePlan {
    /// `t` over `[1e-6, 1e6]` at 64 points per decade and 32 random pairs
    /// drawn from the box `[lo, hi]` (second coordinate ignored when `dim == 1`).
    pub fn standard<R: Rng + ?Sized>(lo: Point, hi: Point, dim: usize, rng: &mut R) -> Self {
        let draw = |rng: &mut R| -> Point {
            let x = lo[0] + (hi[0] - lo[0]) * rng.random::<f64>();
            let y = if dim >= 2 { lo[1] + (hi[1] - lo[1]) * rng.random::<f64>() } else { 0.0 };
            [x, y]
        };
        let pairs = (0..32).map(|_| (draw(rng), draw(rng))).collect();
        Self { t_min: 1e-6, t_max: 1e6, per_decade: 64, pairs }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthCertificate {
    pub declared_ell: f64,
    pub declared_m: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `(t, pair index)` where the extremes occur.
    pub argmin: (f64, usize),
    pub argmax: (f64, usize),
    /// `max Phi(2t) / (2^m Phi(t))`; at most 1 when the doubling bound holds.
    pub delta2_ratio: f64,
    pub samples: usize,
    pub growth_pass: bool,
    pub delta2_pass: bool,
}

impl GrowthCertificate {
    pub fn pass(&self) -> bool {
        self.growth_pass && self.delta2_pass
    }
}

/// Sample `t^2 phi(t) / Phi(t)` and check it against the declared `[ell, m]`,
/// together with the doubling bound `Phi(2t) <= 2^m Phi(t)`.
pub fn growth_certificate(fam: &NFunctionFamily, plan: &SamplePlan) -> Result<GrowthCertificate> {
    let ts = log_grid(plan.t_min, plan.t_max, plan.per_decade);
    let (ell, m) = (fam.ell(), fam.m());
    let two_m = 2f64.powf(m);
    let mut cert = GrowthCertificate {
        declared_ell: ell,
        declared_m: m,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        argmin: (0.0, 0),
        argmax: (0.0, 0),
        delta2_ratio: 0.0,
        samples: 0,
        growth_pass: false,
        delta2_pass: false,
    };
    for (k, &(x, y)) in plan.pairs.iter().enumerate() {
        fam.check_pair(x, y)?;
        let local = fam.local(x, y);
        for &t in &ts {
            let (v, d) = local.phi_and_density(t);
            if !(v > 0.0) {
                return Err(MfsError::Config(format!("family invalid: Phi({t}) = {v} at x={x:?}, y={y:?}")));
            }
            let ratio = t * d / v;
            if ratio < cert.min_ratio {
                cert.min_ratio = ratio;
                cert.argmin = (t, k);
            }
            if ratio > cert.max_ratio {
                cert.max_ratio = ratio;
                cert.argmax = (t, k);
            }
            cert.delta2_ratio = cert.delta2_ratio.max(local.phi(2.0 * t) / (two_m * v));
            cert.samples += 1;
        }
    }
    let tol = 1e-9;
    cert.growth_pass = cert.min_ratio >= ell * (1.0 - tol) && cert.max_ratio <= m * (1.0 + tol);
    cert.delta2_pass = cert.delta2_ratio <= 1.0 + tol;
    Ok(cert)
}

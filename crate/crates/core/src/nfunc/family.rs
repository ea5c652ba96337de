use std::fmt;
use std::sync::Arc;

use crate::error::{MfsError, Result};
use crate::nfunc::field::SymmetricField;
use crate::numeric::gauss_legendre;
use crate::Point;

/// Rule `(x, y, t) -> t * phi_{x,y}(t)` for custom families, `t >= 0`.
pub type DensityRule = Arc<dyn Fn(Point, Point, f64) -> f64 + Send + Sync>;

/// The supported families of generalized N-functions.
#[derive(Clone)]
pub enum FamilyKind {
    /// `t^p / p + a(x,y) t^q / q`.
    DoublePhase { p: f64, q: f64, a: SymmetricField },
    /// `a(x,y) t^p`.
    AnisotropicP { p: f64, a: SymmetricField },
    /// `t^{p(x,y)} / p(x,y)`.
    VariableExponent { p: SymmetricField },
    /// `t^{p(x,y)} log(1 + t)`.
    LogPerturbed { p: SymmetricField },
    /// Density supplied by the caller; the primitive is integrated numerically.
    Custom { density: DensityRule },
}

impl fmt::Debug for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::DoublePhase { p, q, a } => write!(f, "DoublePhase {{ p: {p}, q: {q}, a: {a:?} }}"),
            FamilyKind::AnisotropicP { p, a } => write!(f, "AnisotropicP {{ p: {p}, a: {a:?} }}"),
            FamilyKind::VariableExponent { p } => write!(f, "VariableExponent {{ p: {p:?} }}"),
            FamilyKind::LogPerturbed { p } => write!(f, "LogPerturbed {{ p: {p:?} }}"),
            FamilyKind::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// A generalized N-function `Phi_{x,y}(t) = int_0^|t| tau phi(x,y,tau) dtau`
/// together with its growth exponents `1 < ell <= m`.
#[derive(Clone, Debug)]
pub struct NFunctionFamily {
    kind: FamilyKind,
    ell: f64,
    m: f64,
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 1.0) {
        return Err(MfsError::Config(format!("{name} must satisfy 1 < {name} < inf, got {v}")));
    }
    Ok(())
}

impl NFunctionFamily {
    pub fn double_phase(p: f64, q: f64, a: SymmetricField) -> Result<Self> {
        check_exponent("p", p)?;
        check_exponent("q", q)?;
        if p >= q {
            return Err(MfsError::Config(format!("double phase requires 1 < p < q, got p={p}, q={q}")));
        }
        let (lo, hi) = a.bounds();
        if lo < 0.0 || !hi.is_finite() {
            return Err(MfsError::Config(format!(
                "double phase coefficient a must be nonnegative and bounded, got range [{lo}, {hi}]"
            )));
        }
        Ok(Self { kind: FamilyKind::DoublePhase { p, q, a }, ell: p, m: q })
    }

    pub fn anisotropic(p: f64, a: SymmetricField) -> Result<Self> {
        check_exponent("p", p)?;
        let (lo, hi) = a.bounds();
        if lo <= 0.0 || !hi.is_finite() {
            return Err(MfsError::Config(format!(
                "anisotropic coefficient a must be bounded away from 0 and bounded, got range [{lo}, {hi}]"
            )));
        }
        Ok(Self { kind: FamilyKind::AnisotropicP { p, a }, ell: p, m: p })
    }

    pub fn variable_exponent(p: SymmetricField) -> Result<Self> {
        let (lo, hi) = p.bounds();
        check_exponent("p-", lo)?;
        check_exponent("p+", hi)?;
        Ok(Self { kind: FamilyKind::VariableExponent { p }, ell: lo, m: hi })
    }

    pub fn log_perturbed(p: SymmetricField) -> Result<Self> {
        let (lo, hi) = p.bounds();
        check_exponent("p-", lo)?;
        check_exponent("p+", hi)?;
        Ok(Self { kind: FamilyKind::LogPerturbed { p }, ell: lo, m: hi + 1.0 })
    }

    /// Custom family; `ell` and `m` are declared by the caller and only ever
    /// verified (see `growth_certificate`), never inferred.
    pub fn custom(density: DensityRule, ell: f64, m: f64) -> Result<Self> {
        check_exponent("ell", ell)?;
        if !(m.is_finite() && m >= ell) {
            return Err(MfsError::Config(format!("custom family requires ell <= m < inf, got ell={ell}, m={m}")));
        }
        Ok(Self { kind: FamilyKind::Custom { density }, ell, m })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::DoublePhase { .. } => "doublephase",
            FamilyKind::AnisotropicP { .. } => "anisotropic",
            FamilyKind::VariableExponent { .. } => "pxy",
            FamilyKind::LogPerturbed { .. } => "logpert",
            FamilyKind::Custom { .. } => "custom",
        }
    }

    /// `phi_{x,y}` is increasing on `(0, inf)`, the hypothesis under which
    /// the derivative is uniformly monotone.
    pub fn has_increasing_phi(&self) -> bool {
        match &self.kind {
            FamilyKind::DoublePhase { p, .. } => *p >= 2.0,
            FamilyKind::AnisotropicP { p, .. } => *p >= 2.0,
            FamilyKind::VariableExponent { p } | FamilyKind::LogPerturbed { p } => p.bounds().0 >= 2.0,
            FamilyKind::Custom { .. } => false,
        }
    }

    /// Resolve the one-dimensional N-function at a fixed pair `(x, y)`.
    #[inline]
    pub fn local(&self, x: Point, y: Point) -> LocalPhi {
        match &self.kind {
            FamilyKind::DoublePhase { p, q, a } => {
                LocalPhi::Power { c1: 1.0 / p, e1: *p, c2: a.eval(x, y) / q, e2: *q }
            }
            FamilyKind::AnisotropicP { p, a } => LocalPhi::Power { c1: a.eval(x, y), e1: *p, c2: 0.0, e2: *p },
            FamilyKind::VariableExponent { p } => {
                let e = p.eval(x, y);
                LocalPhi::Power { c1: 1.0 / e, e1: e, c2: 0.0, e2: e }
            }
            FamilyKind::LogPerturbed { p } => LocalPhi::LogPower { p: p.eval(x, y) },
            FamilyKind::Custom { density } => LocalPhi::Custom { density: density.clone(), x, y },
        }
    }

    /// `Phi-hat_x = Phi_{x,x}`.
    #[inline]
    pub fn local_hat(&self, x: Point) -> LocalPhi {
        self.local(x, x)
    }

    #[inline]
    pub fn phi(&self, x: Point, y: Point, t: f64) -> f64 {
        self.local(x, y).phi(t)
    }

    #[inline]
    pub fn density(&self, x: Point, y: Point, t: f64) -> f64 {
        self.local(x, y).density(t)
    }

    /// Check the coefficient fields at `(x, y)`: symmetry and declared range.
    pub fn check_pair(&self, x: Point, y: Point) -> Result<()> {
        match &self.kind {
            FamilyKind::DoublePhase { a, .. } | FamilyKind::AnisotropicP { a, .. } => {
                a.check_at("a", x, y)?;
            }
            FamilyKind::VariableExponent { p } | FamilyKind::LogPerturbed { p } => {
                p.check_at("p", x, y)?;
            }
            FamilyKind::Custom { density } => {
                let d = density(x, y, 1.0);
                let e = density(y, x, 1.0);
                if (d - e).abs() > 1e-12 * d.abs().max(1.0) {
                    return Err(MfsError::Config(format!("custom density is not symmetric at x={x:?}, y={y:?}")));
                }
            }
        }
        Ok(())
    }

    /// Check symmetry, field bounds and the boundedness condition
    /// `C1 <= Phi_{x,y}(1) <= C2` over all pairs of `points`. Returns `(C1, C2)`.
    pub fn validate_on(&self, points: &[Point]) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (i, &x) in points.iter().enumerate() {
            for &y in &points[i..] {
                self.check_pair(x, y)?;
                let v = self.phi(x, y, 1.0);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(MfsError::Config(format!("boundedness condition fails: Phi(1) ranges over [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }

    /// `Phi_{x,y}(|t|)` with argument checks.
    pub fn eval_phi(&self, x: Point, y: Point, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(MfsError::Domain(format!("t must be finite, got {t}")));
        }
        self.check_pair(x, y)?;
        Ok(self.phi(x, y, t))
    }

    /// `t phi_{x,y}(t)` for `t >= 0`, with value 0 at `t = 0`.
    pub fn eval_density(&self, x: Point, y: Point, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(MfsError::Domain(format!("density requires finite t >= 0, got {t}")));
        }
        self.check_pair(x, y)?;
        Ok(self.density(x, y, t))
    }
}

/// The N-function frozen at one pair `(x, y)`.
#[derive(Clone)]
pub enum LocalPhi {
    /// `c1 t^e1 + c2 t^e2`.
    Power {
        c1: f64,
        e1: f64,
        c2: f64,
        e2: f64,
    },
    /// `t^p log(1 + t)`.
    LogPower {
        p: f64,
    },
    Custom {
        density: DensityRule,
        x: Point,
        y: Point,
    },
}

impl fmt::Debug for LocalPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalPhi::Power { c1, e1, c2, e2 } => write!(f, "Power({c1} t^{e1} + {c2} t^{e2})"),
            LocalPhi::LogPower { p } => write!(f, "LogPower(t^{p} log(1+t))"),
            LocalPhi::Custom { x, y, .. } => write!(f, "Custom(at {x:?}, {y:?})"),
        }
    }
}

#[inline]
fn pow(t: f64, e: f64) -> f64 {
    if e == 2.0 {
        t * t
    } else {
        t.powf(e)
    }
}

impl LocalPhi {
    /// `Phi(|t|)`.
    #[inline]
    pub fn phi(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        match self {
            LocalPhi::Power { c1, e1, c2, e2 } => {
                let mut v = c1 * pow(t, *e1);
                if *c2 != 0.0 {
                    v += c2 * pow(t, *e2);
                }
                v
            }
            LocalPhi::LogPower { p } => pow(t, *p) * t.ln_1p(),
            LocalPhi::Custom { density, x, y } => {
                let g = |tau: f64| density(*x, *y, tau);
                let mut acc = 0.0;
                let mut b = t;
                for _ in 0..60 {
                    let a = 0.5 * b;
                    acc += gauss_legendre(g, a, b);
                    b = a;
                }
                acc + 0.5 * b * g(b)
            }
        }
    }

    /// `t phi(t) = Phi'(t)` for `t >= 0`; callers pass magnitudes.
    #[inline]
    pub fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            LocalPhi::Power { c1, e1, c2, e2 } => {
                let mut v = c1 * e1 * pow(t, e1 - 1.0);
                if *c2 != 0.0 {
                    v += c2 * e2 * pow(t, e2 - 1.0);
                }
                v
            }
            LocalPhi::LogPower { p } => {
                let tp = pow(t, *p);
                p * tp / t * t.ln_1p() + tp / (1.0 + t)
            }
            LocalPhi::Custom { density, x, y } => density(*x, *y, t),
        }
    }

    /// `(Phi(t), t phi(t))` in one call.
    #[inline]
    pub fn phi_and_density(&self, t: f64) -> (f64, f64) {
        let t = t.abs();
        if t == 0.0 {
            return (0.0, 0.0);
        }
        match self {
            LocalPhi::Power { c1, e1, c2, e2 } => {
                let a = pow(t, *e1);
                let (mut v, mut d) = (c1 * a, c1 * e1 * a / t);
                if *c2 != 0.0 {
                    let b = pow(t, *e2);
                    v += c2 * b;
                    d += c2 * e2 * b / t;
                }
                (v, d)
            }
            LocalPhi::LogPower { p } => {
                let tp = pow(t, *p);
                let l = t.ln_1p();
                (tp * l, p * tp / t * l + tp / (1.0 + t))
            }
            LocalPhi::Custom { .. } => (self.phi(t), self.density(t)),
        }
    }

    /// Derivative of `t -> t phi(t)` for `t > 0`. At `t = 0` the one-sided
    /// limit is returned, clamped to a finite value when it diverges.
    pub fn density_slope(&self, t: f64) -> f64 {
        let t = t.abs().max(1e-300);
        match self {
            LocalPhi::Power { c1, e1, c2, e2 } => {
                let tt = t.max(1e-12);
                let mut v = c1 * e1 * (e1 - 1.0) * pow(tt, e1 - 2.0);
                if *c2 != 0.0 {
                    v += c2 * e2 * (e2 - 1.0) * pow(tt, e2 - 2.0);
                }
                v
            }
            LocalPhi::LogPower { p } => {
                let tt = t.max(1e-12);
                let l = tt.ln_1p();
                let a = p * (p - 1.0) * pow(tt, p - 2.0) * l;
                let b = p * pow(tt, p - 1.0) / (1.0 + tt);
                let c = (p * pow(tt, p - 1.0) * (1.0 + tt) - pow(tt, *p)) / ((1.0 + tt) * (1.0 + tt));
                a + b + c
            }
            LocalPhi::Custom { .. } => {
                let h = 1e-6 * t.max(1e-6);
                (self.density(t + h) - self.density((t - h).max(0.0))) / (t + h - (t - h).max(0.0))
            }
        }
    }

    /// Inverse of the increasing homeomorphism `Phi: [0, inf) -> [0, inf)`.
    pub fn inverse(&self, tau: f64) -> f64 {
        self.inverse_from(tau, 1.0)
    }

    /// [`LocalPhi::inverse`] started from `guess > 0`.
    pub fn inverse_from(&self, tau: f64, guess: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        if let LocalPhi::Power { c1, e1, c2, .. } = self {
            if *c2 == 0.0 {
                return (tau / c1).powf(1.0 / e1);
            }
        }
        // Newton on `z -> log Phi(e^z)`, whose slope lies in `[ell, m]`,
        // safeguarded by a bracket; a final linear Newton step polishes.
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut x = if guess > 0.0 && guess.is_finite() { guess } else { 1.0 };
        for _ in 0..400 {
            let (v, d) = self.phi_and_density(x);
            if (v - tau).abs() <= 2.0 * f64::EPSILON * tau {
                return x;
            }
            if v < tau {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            let k = x * d / v;
            let mut next = if v > 0.0 && k.is_finite() && k > 0.0 {
                x * ((tau / v).ln() / k).clamp(-40.0, 40.0).exp()
            } else if v < tau {
                2.0 * x
            } else {
                0.5 * x
            };
            if !(next > lo && next < hi) {
                next = if hi.is_finite() {
                    if lo > 0.0 {
                        (lo * hi).sqrt()
                    } else {
                        0.5 * hi
                    }
                } else {
                    2.0 * lo
                };
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x || (hi.is_finite() && hi - lo <= 2.0 * f64::EPSILON * hi) {
                let (v, d) = self.phi_and_density(next);
                let polished = if d > 0.0 { next - (v - tau) / d } else { next };
                return if polished > 0.0 && (polished - next).abs() <= 1e-12 * next { polished } else { next };
            }
            x = next;
        }
        x
    }
}

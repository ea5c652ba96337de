//! Batch property-verification suites producing machine-readable reports.
//!
//! Every check records a signed violation per sample (positive means the
//! inequality fails by that relative amount after the documented slack has
//! been subtracted) and keeps the worst one with its inputs.

mod fields;
mod pointwise;

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::grid::{DiscreteSpace, DomainSpec, GridDomain, GridFunction};
use crate::nfunc::{growth_certificate, NFunctionFamily, SamplePlan, DEFAULT_CONJUGATE_DEPTH};
use crate::numeric::log_uniform;
use crate::solver::{condition_audit, AuditConfig, Nonlinearity};
use crate::Point;

pub use fields::{
    brezis_lieb, coercive_bounded, monotone, norm_sandwich_conjugate_hat, norm_sandwich_gagliardo, norm_sandwich_hat,
    uniform_monotone, RefinementLevel, BREZIS_LIEB_CELLS,
};
pub use pointwise::{critical_pointwise, est_conjugate, mn1_pointwise, mn2_pointwise, young};

/// Every suite id accepted by [`run_suite`].
pub const SUITES: [&str; 11] = [
    "mn1",
    "mn2",
    "mn-critical",
    "young",
    "est-conjugate",
    "brezis-lieb",
    "monotone",
    "uniform-monotone",
    "coercive-bounded",
    "growth",
    "condition-audit",
];

/// The battery run by `--suite all`.
pub const BATTERY: [&str; 9] = [
    "mn1",
    "mn2",
    "mn-critical",
    "young",
    "est-conjugate",
    "brezis-lieb",
    "monotone",
    "uniform-monotone",
    "coercive-bounded",
];

/// Relative slack for inequalities that are exact in real arithmetic.
pub const EXACT_TOL: f64 = 1e-10;
/// Bound on the relative conjugate accuracy at the default depth.
pub const CONJUGATE_ACCURACY_TOL: f64 = 1e-6;
/// Slack for term-by-term monotonicity, relative to the natural scale.
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// One sampled inequality inside a suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: BTreeMap<String, f64>,
    pub pass: bool,
}

impl CheckReport {
    /// A check with a single precomputed violation.
    pub fn single(name: &str, violation: f64, tolerance: f64, witness: &[(&'static str, f64)]) -> Self {
        let mut w = Worst::new(name);
        w.record(violation, || witness.to_vec());
        w.finish(tolerance)
    }
}

/// Running maximum of a violation with the inputs that produced it.
pub(crate) struct Worst {
    name: String,
    samples: usize,
    worst: f64,
    witness: Vec<(&'static str, f64)>,
}

impl Worst {
    pub(crate) fn new(name: &str) -> Self {
        Self { name: name.to_string(), samples: 0, worst: f64::NEG_INFINITY, witness: Vec::new() }
    }

    pub(crate) fn record<W: FnOnce() -> Vec<(&'static str, f64)>>(&mut self, violation: f64, witness: W) {
        self.samples += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.worst {
            self.worst = v;
            self.witness = witness();
        }
    }

    pub(crate) fn finish(self, tolerance: f64) -> CheckReport {
        CheckReport {
            name: self.name,
            samples: self.samples,
            worst_violation: self.worst + 0.0,
            tolerance,
            witness: self.witness.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            pass: self.worst <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub suite: String,
    pub family: String,
    pub seed: u64,
    pub samples: usize,
    /// Worst signed violation; when the checks use different tolerances
    /// this is the largest excess over its own tolerance and `tolerance` is 0.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub witness: BTreeMap<String, f64>,
    pub checks: Vec<CheckReport>,
    pub notes: Vec<String>,
}

impl PropertyReport {
    pub fn from_checks(suite: &str, ctx: &VerifyContext, checks: Vec<CheckReport>, notes: Vec<String>) -> Self {
        let samples = checks.iter().map(|c| c.samples).sum();
        let uniform = checks.windows(2).all(|w| w[0].tolerance == w[1].tolerance);
        let excess = |c: &CheckReport| if uniform { c.worst_violation } else { c.worst_violation - c.tolerance };
        let worst = checks.iter().max_by(|a, b| excess(a).total_cmp(&excess(b)));
        let (worst_violation, witness) = match worst {
            Some(c) => (excess(c), c.witness.clone()),
            None => (f64::NEG_INFINITY, BTreeMap::new()),
        };
        let tolerance = match checks.first() {
            Some(c) if uniform => c.tolerance,
            _ => 0.0,
        };
        let verdict =
            if checks.iter().all(|c| c.pass) && worst_violation <= tolerance { Verdict::Pass } else { Verdict::Fail };
        Self {
            suite: suite.to_string(),
            family: ctx.family.name().to_string(),
            seed: ctx.seed,
            samples,
            worst_violation,
            tolerance,
            verdict,
            witness,
            checks,
            notes,
        }
    }

    pub fn not_applicable(suite: &str, ctx: &VerifyContext, reason: String) -> Self {
        Self {
            suite: suite.to_string(),
            family: ctx.family.name().to_string(),
            seed: ctx.seed,
            samples: 0,
            worst_violation: f64::NEG_INFINITY,
            tolerance: 0.0,
            verdict: Verdict::NotApplicable,
            witness: BTreeMap::new(),
            checks: Vec::new(),
            notes: vec![reason],
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Everything a suite depends on; suites are pure functions of it.
#[derive(Debug, Clone)]
pub struct VerifyContext {
    pub family: NFunctionFamily,
    pub domain: DomainSpec,
    pub s: f64,
    pub seed: u64,
    /// Pointwise samples per check.
    pub samples: usize,
    /// Random grid functions per field check.
    pub fields: usize,
    pub depth: u32,
    /// Reaction term for the condition audit; defaults to PowerLog with `r = m + 1/2`.
    pub nonlinearity: Option<Nonlinearity>,
}

impl VerifyContext {
    pub fn new(family: NFunctionFamily, domain: DomainSpec, s: f64, seed: u64) -> Self {
        Self {
            family,
            domain,
            s,
            seed,
            samples: 10_000,
            fields: 200,
            depth: DEFAULT_CONJUGATE_DEPTH,
            nonlinearity: None,
        }
    }

    pub fn space(&self) -> Result<DiscreteSpace> {
        DiscreteSpace::new(self.domain.build()?, self.s, self.family.clone())
    }

    /// Independent random stream for one suite.
    pub(crate) fn rng(&self, suite: &str) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        let tag = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        rand_chacha::ChaCha8Rng::seed_from_u64(self.seed ^ tag)
    }
}

/// `t` log-uniform over twelve decades.
pub(crate) fn sample_t<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    log_uniform(rng, 1e-6, 1e6)
}

/// `sigma` log-uniform over six decades.
pub(crate) fn sample_sigma<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    log_uniform(rng, 1e-3, 1e3)
}

pub(crate) fn sample_point<R: Rng + ?Sized>(domain: &GridDomain, rng: &mut R) -> Point {
    domain.interior_point(rng.random_range(0..domain.n_interior()))
}

/// The `k`-th random grid function: Gaussian nodal fields, bumps and
/// checkerboards in turn, rescaled to a log-uniform sup norm in `[1e-3, 1e3]`.
pub fn random_field<R: Rng + ?Sized>(domain: &GridDomain, k: usize, rng: &mut R) -> GridFunction {
    let (lo, hi) = domain.bounding_box();
    let u = match k % 3 {
        0 => GridFunction::gaussian(domain, rng),
        1 => {
            let c = [lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(), lo[1] + (hi[1] - lo[1]) * rng.random::<f64>()];
            GridFunction::bump(domain, c, domain.diameter() * (0.05 + 0.3 * rng.random::<f64>()))
        }
        _ => {
            let h = domain.h();
            let period = 1.0 + (rng.random::<f64>() * 3.0).floor();
            GridFunction::from_fn(domain, |p| {
                let i = ((p[0] - lo[0]) / (h * period)).floor() as i64;
                let j = ((p[1] - lo[1]) / (h * period)).floor() as i64;
                if (i + j) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
        }
    };
    let m = u.max_abs();
    if m > 0.0 {
        u.scaled(log_uniform(rng, 1e-3, 1e3) / m)
    } else {
        u
    }
}

fn growth(ctx: &VerifyContext) -> Result<PropertyReport> {
    let d = ctx.domain.build()?;
    let (lo, hi) = d.bounding_box();
    let mut rng = ctx.rng("growth");
    let cert = growth_certificate(&ctx.family, &SamplePlan::standard(lo, hi, d.dim(), &mut rng))?;
    let (ell, m) = (cert.declared_ell, cert.declared_m);
    let checks = vec![
        CheckReport::single(
            "ratio-lower",
            (ell - cert.min_ratio) / ell,
            1e-9,
            &[("t", cert.argmin.0), ("ratio", cert.min_ratio)],
        ),
        CheckReport::single(
            "ratio-upper",
            (cert.max_ratio - m) / m,
            1e-9,
            &[("t", cert.argmax.0), ("ratio", cert.max_ratio)],
        ),
        CheckReport::single("doubling", cert.delta2_ratio - 1.0, 1e-9, &[("ratio", cert.delta2_ratio)]),
    ];
    let mut r = PropertyReport::from_checks("growth", ctx, checks, Vec::new());
    for c in &mut r.checks {
        c.samples = cert.samples;
    }
    r.samples = cert.samples;
    Ok(r)
}

fn audit(ctx: &VerifyContext) -> Result<PropertyReport> {
    let space = ctx.space()?;
    let nl = match ctx.nonlinearity {
        Some(nl) => nl,
        None => Nonlinearity::power_log(ctx.family.m() + 0.5)?,
    };
    let cfg = AuditConfig { seed: ctx.seed, ..AuditConfig::default() };
    let report = condition_audit(&nl, &space, &cfg);
    let checks = report
        .checks
        .iter()
        .map(|c| {
            let mut w = vec![("margin", c.margin)];
            if let Some(t) = c.witness {
                w.push(("t", t));
            }
            let mut cr = CheckReport::single(c.name, -c.margin, 0.0, &w);
            cr.pass = c.pass;
            cr
        })
        .collect();
    let mut notes = vec![format!("nonlinearity {}", report.nonlinearity)];
    notes.extend(report.checks.iter().map(|c| format!("{}: {}", c.name, c.detail)));
    notes.extend(report.warnings.iter().cloned());
    Ok(PropertyReport::from_checks("condition-audit", ctx, checks, notes))
}

/// Run one suite by id.
pub fn run_suite(name: &str, ctx: &VerifyContext) -> Result<PropertyReport> {
    let suite = |checks: Result<Vec<CheckReport>>| -> Result<PropertyReport> {
        Ok(PropertyReport::from_checks(name, ctx, checks?, Vec::new()))
    };
    match name {
        "mn1" => {
            let mut checks = mn1_pointwise(ctx)?;
            checks.push(norm_sandwich_hat(ctx)?);
            checks.push(norm_sandwich_conjugate_hat(ctx)?);
            suite(Ok(checks))
        }
        "mn2" => {
            let mut checks = mn2_pointwise(ctx)?;
            checks.push(norm_sandwich_gagliardo(ctx)?);
            suite(Ok(checks))
        }
        "mn-critical" => {
            let (n, s) = (ctx.domain.dim as f64, ctx.s);
            let (ell, m) = (ctx.family.ell(), ctx.family.m());
            if !(ell > 1.0 && m < n / s) {
                return Ok(PropertyReport::not_applicable(
                    name,
                    ctx,
                    format!("needs ell, m in (1, N/s) = (1, {}); got ell={ell}, m={m}", n / s),
                ));
            }
            suite(critical_pointwise(ctx).map(|c| vec![c]))
        }
        "young" => suite(young(ctx)),
        "est-conjugate" => suite(est_conjugate(ctx)),
        "brezis-lieb" => {
            let (check, levels) = brezis_lieb(ctx)?;
            let notes = levels.iter().map(|(cells, e)| format!("cells={cells}: |J(u+w)-J(w)-J(u)| = {e:e}")).collect();
            Ok(PropertyReport::from_checks(name, ctx, check, notes))
        }
        "monotone" => suite(monotone(ctx).map(|c| vec![c])),
        "uniform-monotone" => {
            if !ctx.family.has_increasing_phi() {
                return Ok(PropertyReport::not_applicable(
                    name,
                    ctx,
                    format!("family {} does not have increasing phi", ctx.family.name()),
                ));
            }
            suite(uniform_monotone(ctx))
        }
        "coercive-bounded" => suite(coercive_bounded(ctx)),
        "growth" => growth(ctx),
        "condition-audit" => audit(ctx),
        other => Err(MfsError::Usage(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", ")))),
    }
}

/// Expand `all` to the battery; otherwise validate a single id.
pub fn resolve_suites(name: &str) -> Result<Vec<&'static str>> {
    if name == "all" {
        return Ok(BATTERY.to_vec());
    }
    SUITES
        .iter()
        .find(|s| **s == name)
        .map(|s| vec![*s])
        .ok_or_else(|| MfsError::Usage(format!("unknown suite '{name}'; expected all or one of {}", SUITES.join(", "))))
}

/// Summary table with one row per report.
pub fn summary_csv(reports: &[PropertyReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| MfsError::Io(e.to_string());
    w.write_record(["suite", "family", "samples", "worst_violation", "tolerance", "verdict"]).map_err(io)?;
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        };
        w.write_record([
            r.suite.clone(),
            r.family.clone(),
            r.samples.to_string(),
            format!("{:e}", r.worst_violation),
            format!("{:e}", r.tolerance),
            verdict.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| MfsError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| MfsError::Io(e.to_string()))
}

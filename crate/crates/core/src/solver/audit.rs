use serde::{Deserialize, Serialize};

use crate::grid::{poincare_lambda1_estimate, DiscreteSpace};
use crate::nfunc::FamilyKind;
use crate::numeric::log_grid;
use crate::solver::Nonlinearity;

/// Sampling parameters of [`condition_audit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    /// Threshold `R`; the smallest sampled radius that works when absent.
    pub radius: Option<f64>,
    /// Exponent of `Gamma(t) = |t|^gamma`; a default inside the admissible window when absent.
    pub gamma: Option<f64>,
    /// Constant `C` of the growth and domination bounds.
    pub constant: f64,
    /// Largest `t` of the near-zero window for `(f4)`.
    pub zero_window: f64,
    pub lambda_trials: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            t_max: 1e6,
            per_decade: 32,
            radius: None,
            gamma: None,
            constant: 1.0,
            zero_window: 1e-4,
            lambda_trials: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Smallest signed margin; negative means violated.
    pub margin: f64,
    /// `|t|` where the margin is attained.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub nonlinearity: String,
    pub family: String,
    pub ell: f64,
    pub m: f64,
    pub dim: usize,
    pub s: f64,
    pub gamma: f64,
    pub radius: Option<f64>,
    pub lambda1_hat: f64,
    pub checks: Vec<ConditionCheck>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl AuditReport {
    pub fn check(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn f1(nl: &Nonlinearity, m: f64, ts: &[f64], c: f64) -> ConditionCheck {
    let Some((lp, mp)) = nl.psi_exponents() else {
        return ConditionCheck {
            name: "f1",
            pass: false,
            margin: f64::NEG_INFINITY,
            witness: None,
            detail: "no growth witness Psi for this nonlinearity".into(),
        };
    };
    let mut margin = lp - m;
    let mut witness = None;
    let mut worst_ratio = (f64::INFINITY, f64::NEG_INFINITY);
    for &t in ts {
        let ratio = nl.psi_ratio(t);
        worst_ratio = (worst_ratio.0.min(ratio), worst_ratio.1.max(ratio));
        // Psi = F, so t psi(t) = f(t).
        let bound = c * (1.0 + nl.value(t));
        let growth = (bound - nl.value(t).abs()) / bound;
        let local = growth.min(ratio - lp).min(mp - ratio);
        if local < margin {
            margin = local;
            witness = Some(t);
        }
    }
    ConditionCheck {
        name: "f1",
        pass: margin > 0.0 || (margin >= -1e-12 && lp > m),
        margin,
        witness,
        detail: format!(
            "m = {m}, ell_Psi = {lp}, m_Psi = {mp}; sampled t^2 psi / Psi in [{}, {}]",
            worst_ratio.0, worst_ratio.1
        ),
    }
}

fn f2(
    nl: &Nonlinearity,
    ell: f64,
    m: f64,
    dim: usize,
    gamma: f64,
    ts: &[f64],
    cfg: &AuditConfig,
) -> (ConditionCheck, Option<f64>) {
    let lower = dim as f64 / ell;
    // (relative domination margin, Fbar) at each sample.
    let rows: Vec<(f64, f64, f64)> = ts
        .iter()
        .map(|&t| {
            let fbar = nl.defect(t, m);
            let gam = (nl.primitive(t) / t.powf(ell)).powf(gamma);
            let lhs = cfg.constant * fbar;
            let scale = lhs.abs() + gam;
            let dom = if scale > 0.0 { (lhs - gam) / scale } else { 0.0 };
            (t, dom, fbar)
        })
        .collect();
    let radius = match cfg.radius {
        Some(r) => Some(r),
        None => {
            let mut start = rows.len();
            for i in (0..rows.len()).rev() {
                if rows[i].1 >= 0.0 && rows[i].2 >= 0.0 {
                    start = i;
                } else {
                    break;
                }
            }
            rows.get(start).map(|r| r.0)
        }
    };
    let mut margin = gamma - lower;
    let mut witness = None;
    let mut negative_fbar = None;
    let window: Vec<&(f64, f64, f64)> = match radius {
        Some(r) => rows.iter().filter(|row| row.0 >= r).collect(),
        None => rows.iter().collect(),
    };
    for &&(t, dom, fbar) in &window {
        if dom < margin {
            margin = dom;
            witness = Some(t);
        }
        if fbar < 0.0 && negative_fbar.is_none_or(|(_, v)| fbar < v) {
            negative_fbar = Some((t, fbar));
        }
    }
    let mut detail = format!("gamma = {gamma} (needs > N/ell = {lower}), C = {}", cfg.constant);
    match radius {
        Some(r) => detail.push_str(&format!(", R = {r}")),
        None => detail.push_str(", no sampled R works"),
    }
    if let Some((t, v)) = negative_fbar {
        detail.push_str(&format!(", negative Fbar witness: Fbar({t}) = {v}"));
        witness = Some(t);
        margin = margin.min(v);
    }
    let pass = radius.is_some() && !window.is_empty() && negative_fbar.is_none() && margin >= 0.0 && gamma > lower;
    (ConditionCheck { name: "f2", pass, margin, witness, detail }, radius)
}

fn f3(nl: &Nonlinearity, m: f64, cfg: &AuditConfig) -> ConditionCheck {
    let ts = log_grid(1e2_f64.min(cfg.t_max), cfg.t_max, cfg.per_decade.max(1));
    let ratios: Vec<f64> = ts.iter().map(|t| nl.value(*t) / t.powf(m - 1.0)).collect();
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for i in 1..ratios.len() {
        let inc = (ratios[i] - ratios[i - 1]) / ratios[i - 1].abs().max(f64::MIN_POSITIVE);
        if inc < margin {
            margin = inc;
            witness = Some(ts[i]);
        }
    }
    let first = ratios.first().copied().unwrap_or(f64::NAN);
    let last = ratios.last().copied().unwrap_or(f64::NAN);
    ConditionCheck {
        name: "f3",
        pass: ratios.len() > 1 && margin > 0.0 && last > first && first > 0.0,
        margin,
        witness,
        detail: format!("f/|t|^(m-1) grows from {first} at t = {} to {last} at t = {}", ts[0], cfg.t_max),
    }
}

fn f4(nl: &Nonlinearity, space: &DiscreteSpace, lambda1: f64, cfg: &AuditConfig) -> ConditionCheck {
    let lo = (cfg.zero_window * 1e-4).max(f64::MIN_POSITIVE);
    let ts = log_grid(lo, cfg.zero_window, cfg.per_decade.max(1));
    let mut sup: f64 = 0.0;
    let mut witness = None;
    for phi in space.hat_phi() {
        for &t in &ts {
            let r = nl.value(t) / phi.density(t);
            if r > sup {
                sup = r;
                witness = Some(t);
            }
        }
    }
    let limit = 1.0 / lambda1;
    let margin = (limit - sup) / limit;
    ConditionCheck {
        name: "f4",
        pass: lambda1.is_finite() && lambda1 > 0.0 && sup < limit,
        margin,
        witness,
        detail: format!(
            "sup of f/(t phi_hat) on t in [{lo}, {}] is {sup}; 1/lambda1_hat = {limit} (lambda1_hat is an empirical lower bound on lambda1)",
            cfg.zero_window
        ),
    }
}

fn range_warnings(nl: &Nonlinearity, space: &DiscreteSpace) -> Vec<String> {
    let fam = space.family();
    let dim = space.domain().dim();
    let nf = dim as f64;
    let (ell, m, s) = (fam.ell(), fam.m(), space.s());
    let mut out = Vec::new();
    if dim == 1 {
        out.push("one-dimensional run".into());
    }
    let family_bound = match fam.kind() {
        FamilyKind::DoublePhase { q, .. } => Some(("q < N", *q < nf)),
        FamilyKind::VariableExponent { p } => Some(("p+ < N", p.bounds().1 < nf)),
        FamilyKind::LogPerturbed { p } => Some(("p+ < N - 1", p.bounds().1 < nf - 1.0)),
        _ => None,
    };
    if let Some((what, false)) = family_bound {
        out.push(format!("family parameters violate the example range {what} with N = {dim}"));
    }
    if let Nonlinearity::PowerLog { r } = nl {
        let lower = match fam.kind() {
            FamilyKind::LogPerturbed { p } => p.bounds().1 + 1.0,
            _ => m,
        };
        let critical = if s * ell < nf { nf * ell / (nf - s * ell) } else { f64::INFINITY };
        if !(*r > lower && *r < critical - 1.0) {
            out.push(format!(
                "r = {r} lies outside the example range ({lower}, ell*_s - 1 = {}); the subcritical growth of Psi is not guaranteed",
                critical - 1.0
            ));
        }
    }
    out
}

/// Sample the growth conditions on `f` against the family of `space`.
/// Always completes; each condition gets its own verdict.
pub fn condition_audit(nl: &Nonlinearity, space: &DiscreteSpace, cfg: &AuditConfig) -> AuditReport {
    let fam = space.family();
    let (ell, m) = (fam.ell(), fam.m());
    let dim = space.domain().dim();
    let gamma = cfg.gamma.unwrap_or_else(|| nl.default_gamma(dim, ell));
    let ts = log_grid(cfg.t_min, cfg.t_max, cfg.per_decade.max(1));
    let mut warnings = range_warnings(nl, space);
    let lambda1 = match poincare_lambda1_estimate(space, cfg.lambda_trials.max(1), cfg.seed) {
        Ok(p) => p.lambda1,
        Err(e) => {
            warnings.push(format!("Poincaré estimate failed: {e}"));
            f64::NAN
        }
    };
    let c1 = f1(nl, m, &ts, cfg.constant);
    let (c2, radius) = f2(nl, ell, m, dim, gamma, &ts, cfg);
    let c3 = f3(nl, m, cfg);
    let c4 = f4(nl, space, lambda1, cfg);
    let checks = vec![c1, c2, c3, c4];
    AuditReport {
        nonlinearity: nl.name(),
        family: fam.name().to_string(),
        ell,
        m,
        dim,
        s: space.s(),
        gamma,
        radius,
        lambda1_hat: lambda1,
        pass: checks.iter().all(|c| c.pass),
        checks,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;
    use crate::nfunc::{NFunctionFamily, SymmetricField};

    fn space(q: f64) -> DiscreteSpace {
        let d = GridDomain::rectangle(2, [0.0, 0.0], [1.0, 1.0], 6, 0.34).unwrap();
        let fam = NFunctionFamily::double_phase(2.0, q, SymmetricField::Constant(1.0)).unwrap();
        DiscreteSpace::new(d, 0.25, fam).unwrap()
    }

    #[test]
    fn superlinear_term_passes() {
        let nl = Nonlinearity::power_log(3.0).unwrap();
        let r = condition_audit(&nl, &space(2.5), &AuditConfig::default());
        assert!(r.pass, "{r:#?}");
        assert!(r.radius.is_some());
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn small_exponent_fails_with_negative_defect() {
        let nl = Nonlinearity::power_log(2.2).unwrap();
        let r = condition_audit(&nl, &space(2.5), &AuditConfig::default());
        assert!(!r.pass);
        let f2 = r.check("f2").unwrap();
        assert!(!f2.pass && f2.detail.contains("negative Fbar"));
        assert!(!r.check("f1").unwrap().pass);
    }

    #[test]
    fn zero_term_fails() {
        let r = condition_audit(&Nonlinearity::Zero, &space(2.5), &AuditConfig::default());
        assert!(!r.pass);
    }
}

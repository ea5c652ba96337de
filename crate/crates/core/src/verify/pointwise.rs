use crate::error::Result;
use crate::grid::GridDomain;
use crate::nfunc::{xi_bounds, LocalPhi, SobolevConjugate, XiKind};
use crate::numeric::relative_violation;
use crate::verify::{
    sample_point, sample_sigma, sample_t, CheckReport, VerifyContext, Worst, CONJUGATE_ACCURACY_TOL, EXACT_TOL,
};

const FLOOR: f64 = f64::MIN_POSITIVE;

/// Worst of the two sides of `lo <= v <= hi`.
fn sandwich(lo: f64, v: f64, hi: f64) -> f64 {
    relative_violation(lo, v, FLOOR).max(relative_violation(v, hi, FLOOR))
}

fn xi_check(
    name: &str,
    local: impl Fn(&GridDomain, &mut rand_chacha::ChaCha8Rng) -> LocalPhi,
    ctx: &VerifyContext,
) -> Result<CheckReport> {
    let d = ctx.domain.build()?;
    let mut rng = ctx.rng(name);
    let (ell, m) = (ctx.family.ell(), ctx.family.m());
    let mut w = Worst::new(name);
    for _ in 0..ctx.samples {
        let phi = local(&d, &mut rng);
        let (t, sigma) = (sample_t(&mut rng), sample_sigma(&mut rng));
        let (lo, hi) = xi_bounds(XiKind::Zero, ell, m, sigma)?;
        let (v1, v2) = (phi.phi(t), phi.phi(sigma * t));
        w.record(sandwich(lo * v1, v2, hi * v1), || {
            vec![("t", t), ("sigma", sigma), ("phi_t", v1), ("phi_sigma_t", v2)]
        });
    }
    Ok(w.finish(EXACT_TOL))
}

/// `xi_0^-(sigma) PhiHat(t) <= PhiHat(sigma t) <= xi_0^+(sigma) PhiHat(t)` and
/// the `xi_1` version for the numerical conjugate, with the reported
/// conjugate accuracies added on the favourable side.
pub fn mn1_pointwise(ctx: &VerifyContext) -> Result<Vec<CheckReport>> {
    let hat = xi_check("hat-xi0", |d, rng| ctx.family.local_hat(sample_point(d, rng)), ctx)?;
    let d = ctx.domain.build()?;
    let mut rng = ctx.rng("conjugate-hat-xi1");
    let (ell, m) = (ctx.family.ell(), ctx.family.m());
    let mut w = Worst::new("conjugate-hat-xi1");
    for _ in 0..ctx.samples {
        let x = sample_point(&d, &mut rng);
        let phi = ctx.family.local_hat(x);
        let (t, sigma) = (sample_t(&mut rng), sample_sigma(&mut rng));
        let (lo, hi) = xi_bounds(XiKind::One, ell, m, sigma)?;
        let c1 = phi.conjugate(t, ctx.depth);
        let c2 = phi.conjugate(sigma * t, ctx.depth);
        let v = relative_violation(lo * c1.value, c2.value + c2.accuracy, FLOOR).max(relative_violation(
            c2.value,
            hi * (c1.value + c1.accuracy),
            FLOOR,
        ));
        w.record(v, || {
            vec![
                ("x0", x[0]),
                ("x1", x[1]),
                ("t", t),
                ("sigma", sigma),
                ("conj_t", c1.value),
                ("conj_sigma_t", c2.value),
            ]
        });
    }
    Ok(vec![hat, w.finish(EXACT_TOL)])
}

/// `xi_0^-(sigma) Phi_{x,y}(t) <= Phi_{x,y}(sigma t) <= xi_0^+(sigma) Phi_{x,y}(t)`.
pub fn mn2_pointwise(ctx: &VerifyContext) -> Result<Vec<CheckReport>> {
    let pair = xi_check(
        "pair-xi0",
        |d, rng| {
            let x = sample_point(d, rng);
            let y = sample_point(d, rng);
            ctx.family.local(x, y)
        },
        ctx,
    )?;
    Ok(vec![pair])
}

/// Inverse form of the `xi_2` bounds for the Sobolev conjugate:
/// `G(xi_2^-(sigma) a) <= sigma G(a) <= G(xi_2^+(sigma) a)` with `G = (PhiHat*)^{-1}`.
pub fn critical_pointwise(ctx: &VerifyContext) -> Result<CheckReport> {
    let d = ctx.domain.build()?;
    let mut rng = ctx.rng("critical-xi2");
    let (ell, m, dim, s) = (ctx.family.ell(), ctx.family.m(), ctx.domain.dim, ctx.s);
    let mut w = Worst::new("critical-xi2");
    for _ in 0..ctx.samples {
        let x = sample_point(&d, &mut rng);
        let g = SobolevConjugate::new(&ctx.family, x, s, dim)?;
        let (a, sigma) = (sample_t(&mut rng), sample_sigma(&mut rng));
        let (lo, hi) = xi_bounds(XiKind::Two { dim, s }, ell, m, sigma)?;
        let mid = sigma * g.inverse(a)?;
        let (gl, gh) = (g.inverse(lo * a)?, g.inverse(hi * a)?);
        w.record(sandwich(gl, mid, gh), || {
            vec![("x0", x[0]), ("x1", x[1]), ("a", a), ("sigma", sigma), ("sigma_g", mid)]
        });
    }
    Ok(w.finish(EXACT_TOL))
}

/// `s t <= Phi(s) + conj(t)`; half of the `s` are taken at the computed
/// maximizer, where the inequality is tight.
pub fn young(ctx: &VerifyContext) -> Result<Vec<CheckReport>> {
    let d = ctx.domain.build()?;
    let mut rng = ctx.rng("young");
    let mut w = Worst::new("young");
    let mut acc = Worst::new("conjugate-accuracy");
    for k in 0..ctx.samples {
        let (x, y) = (sample_point(&d, &mut rng), sample_point(&d, &mut rng));
        let phi = ctx.family.local(x, y);
        let t = sample_t(&mut rng);
        let c = phi.conjugate(t, ctx.depth);
        let s = if k % 2 == 0 { c.maximizer } else { sample_t(&mut rng) };
        let (lhs, rhs) = (s * t, phi.phi(s) + c.value + c.accuracy);
        w.record(relative_violation(lhs, rhs, FLOOR), || {
            vec![("s", s), ("t", t), ("conj", c.value), ("accuracy", c.accuracy)]
        });
        acc.record(c.accuracy / c.value.max(1.0), || vec![("t", t), ("conj", c.value), ("accuracy", c.accuracy)]);
    }
    Ok(vec![w.finish(EXACT_TOL), acc.finish(CONJUGATE_ACCURACY_TOL)])
}

/// `conj(t phi(t)) <= Phi(2t)` with the reported accuracy as slack.
pub fn est_conjugate(ctx: &VerifyContext) -> Result<Vec<CheckReport>> {
    let d = ctx.domain.build()?;
    let mut rng = ctx.rng("est-conjugate");
    let mut w = Worst::new("est-conjugate");
    let mut acc = Worst::new("conjugate-accuracy");
    for _ in 0..ctx.samples {
        let (x, y) = (sample_point(&d, &mut rng), sample_point(&d, &mut rng));
        let phi = ctx.family.local(x, y);
        let t = sample_t(&mut rng);
        let arg = phi.density(t);
        let c = phi.conjugate(arg, ctx.depth);
        let bound = phi.phi(2.0 * t);
        w.record(relative_violation(c.value - c.accuracy, bound, FLOOR), || {
            vec![("t", t), ("t_phi_t", arg), ("conj", c.value), ("phi_2t", bound), ("accuracy", c.accuracy)]
        });
        acc.record(c.accuracy / c.value.max(1.0), || vec![("t", t), ("conj", c.value), ("accuracy", c.accuracy)]);
    }
    Ok(vec![w.finish(EXACT_TOL), acc.finish(CONJUGATE_ACCURACY_TOL)])
}

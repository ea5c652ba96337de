use crate::error::Result;
use crate::grid::{DiscreteSpace, GridFunction, ModularKind, LUXEMBURG_TOL};
use crate::nfunc::{xi_bounds, xi_exponents, XiKind};
use crate::numeric::relative_violation;
use crate::operator::{derivative_pairing, monotonicity_gap};
use crate::verify::{random_field, sample_point, sample_t, CheckReport, VerifyContext, Worst, EXACT_TOL, MONOTONE_TOL};

const FLOOR: f64 = f64::MIN_POSITIVE;

/// `(cells, e_n)` at one refinement.
pub type RefinementLevel = (usize, f64);

/// Mesh sizes (cells across) of the Brezis–Lieb refinement.
pub const BREZIS_LIEB_CELLS: [usize; 3] = [6, 12, 24];

/// Luxemburg norm with a bound on its relative error: the residual of the
/// bisection divided by the log-slope of the modular at `1/lambda`.
fn norm_with_error(space: &DiscreteSpace, kind: ModularKind, u: &GridFunction) -> Result<(f64, f64)> {
    let lam = space.luxemburg(kind, u, LUXEMBURG_TOL)?;
    let (at, slope) = space.modular_scaled(kind, u, 1.0 / lam);
    Ok((lam, ((at - 1.0).abs() + 1e-12) / slope.max(FLOOR)))
}

fn norm_sandwich(ctx: &VerifyContext, kind: ModularKind, xi: XiKind, name: &str) -> Result<CheckReport> {
    let space = ctx.space()?;
    let mut rng = ctx.rng(name);
    let (ell, m) = (ctx.family.ell(), ctx.family.m());
    let (a, b) = xi_exponents(xi, ell, m)?;
    let mut w = Worst::new(name);
    for k in 0..ctx.fields {
        let u = random_field(space.domain(), k, &mut rng);
        let (lam, err) = norm_with_error(&space, kind, &u)?;
        let value = space.modular(kind, &u);
        let (lo, hi) = xi_bounds(xi, ell, m, lam)?;
        let slack = 2.0 * a.max(b) * err;
        let v = relative_violation(lo, value, FLOOR).max(relative_violation(value, hi, FLOOR)) - slack;
        w.record(v, || {
            vec![("field", k as f64), ("lambda", lam), ("modular", value), ("xi_lower", lo), ("xi_upper", hi)]
        });
    }
    Ok(w.finish(EXACT_TOL))
}

/// `xi_0^-(|u|) <= int PhiHat(|u|) <= xi_0^+(|u|)` with the Luxemburg norm of the hat modular.
pub fn norm_sandwich_hat(ctx: &VerifyContext) -> Result<CheckReport> {
    norm_sandwich(ctx, ModularKind::Hat, XiKind::Zero, "hat-norm")
}

/// The `xi_1` sandwich for the conjugate hat modular.
pub fn norm_sandwich_conjugate_hat(ctx: &VerifyContext) -> Result<CheckReport> {
    norm_sandwich(ctx, ModularKind::ConjugateHat, XiKind::One, "conjugate-hat-norm")
}

/// `xi_0^-([u]) <= J(u) <= xi_0^+([u])`.
pub fn norm_sandwich_gagliardo(ctx: &VerifyContext) -> Result<CheckReport> {
    norm_sandwich(ctx, ModularKind::Gagliardo, XiKind::Zero, "gagliardo-norm")
}

fn field_pair<R: rand::Rng + ?Sized>(space: &DiscreteSpace, k: usize, rng: &mut R) -> (GridFunction, GridFunction) {
    let u = random_field(space.domain(), k, rng);
    let v = if k % 4 == 3 {
        u.axpy(1e-3, &random_field(space.domain(), k + 1, rng))
    } else {
        random_field(space.domain(), k + 1, rng)
    };
    (u, v)
}

/// Every summand of `<J'(u) - J'(v), u - v>` is nonnegative up to `-1e-12` of the scale.
pub fn monotone(ctx: &VerifyContext) -> Result<CheckReport> {
    let space = ctx.space()?;
    let mut rng = ctx.rng("monotone");
    let mut w = Worst::new("termwise");
    for k in 0..ctx.fields {
        let (u, v) = field_pair(&space, k, &mut rng);
        let g = monotonicity_gap(&space, &u, &v)?;
        w.record(-g.min_term / g.scale.max(FLOOR), || {
            vec![("pair", k as f64), ("min_term", g.min_term), ("scale", g.scale)]
        });
    }
    Ok(w.finish(MONOTONE_TOL))
}

/// `(a(xi) - a(eta))(xi - eta) >= 4^{1-m} ell Phi(|xi - eta|)` pointwise with
/// `a(t) = phi(|t|) t`, and its integrated form
/// `<J'(u) - J'(v), u - v> >= 4^{1-m} ell J(u - v)`.
pub fn uniform_monotone(ctx: &VerifyContext) -> Result<Vec<CheckReport>> {
    let (ell, m) = (ctx.family.ell(), ctx.family.m());
    let c = 4f64.powf(1.0 - m) * ell;
    let d = ctx.domain.build()?;
    let mut rng = ctx.rng("uniform-monotone");
    let mut point = Worst::new("pointwise");
    for _ in 0..ctx.samples {
        let phi = ctx.family.local(sample_point(&d, &mut rng), sample_point(&d, &mut rng));
        let sign = |rng: &mut rand_chacha::ChaCha8Rng| if rand::Rng::random::<bool>(rng) { 1.0 } else { -1.0 };
        let xi = sign(&mut rng) * sample_t(&mut rng);
        let eta = sign(&mut rng) * sample_t(&mut rng);
        let a = |t: f64| phi.density(t.abs()) * t.signum();
        let lhs = (a(xi) - a(eta)) * (xi - eta);
        let rhs = c * phi.phi((xi - eta).abs());
        point
            .record(relative_violation(rhs, lhs, FLOOR), || vec![("xi", xi), ("eta", eta), ("lhs", lhs), ("rhs", rhs)]);
    }
    let space = ctx.space()?;
    let mut global = Worst::new("integrated");
    for k in 0..ctx.fields {
        let (u, v) = field_pair(&space, k, &mut rng);
        let gap = monotonicity_gap(&space, &u, &v)?.gap;
        let rhs = c * space.gagliardo(&(&u - &v));
        global.record(relative_violation(rhs, gap, FLOOR), || vec![("pair", k as f64), ("gap", gap), ("rhs", rhs)]);
    }
    Ok(vec![point.finish(EXACT_TOL), global.finish(EXACT_TOL)])
}

/// The inequalities behind boundedness and coercivity of `J'`:
/// `<J'(u), u> >= ell J(u) >= ell xi_0^-([u])` and
/// `|<J'(u), v>| <= 2^m (xi_0^+([u]) + 1) [v]`.
pub fn coercive_bounded(ctx: &VerifyContext) -> Result<Vec<CheckReport>> {
    let space = ctx.space()?;
    let mut rng = ctx.rng("coercive-bounded");
    let (ell, m) = (ctx.family.ell(), ctx.family.m());
    let mut structure = Worst::new("pairing-vs-modular");
    let mut coercive = Worst::new("coercive");
    let mut bounded = Worst::new("bounded");
    for k in 0..ctx.fields {
        let (u, v) = field_pair(&space, k, &mut rng);
        let (lu, eu) = norm_with_error(&space, ModularKind::Gagliardo, &u)?;
        let (lv, ev) = norm_with_error(&space, ModularKind::Gagliardo, &v)?;
        let puu = derivative_pairing(&space, &u, &u)?;
        let puv = derivative_pairing(&space, &u, &v)?;
        let ju = space.gagliardo(&u);
        let (lo, hi) = xi_bounds(XiKind::Zero, ell, m, lu)?;
        structure.record(relative_violation(ell * ju, puu, FLOOR), || {
            vec![("field", k as f64), ("pairing", puu), ("modular", ju)]
        });
        coercive.record(relative_violation(ell * lo, puu, FLOOR) - 2.0 * m * eu, || {
            vec![("field", k as f64), ("norm", lu), ("pairing", puu)]
        });
        let bound = 2f64.powf(m) * (hi + 1.0) * lv;
        bounded.record(relative_violation(puv.abs(), bound, FLOOR) - 2.0 * m * eu - 2.0 * ev, || {
            vec![("field", k as f64), ("norm_u", lu), ("norm_v", lv), ("pairing", puv), ("bound", bound)]
        });
    }
    Ok(vec![structure.finish(EXACT_TOL), coercive.finish(EXACT_TOL), bounded.finish(EXACT_TOL)])
}

/// `e_n = |J(u + w_n) - J(w_n) - J(u)|` on three refinements, where `u`
/// is a fixed smooth bump at the centroid and `w_n` a unit bump of width
/// `h` at the fixed point `lo + (0.3, 0.4)(hi - lo)` of the bounding box,
/// so `w_n -> 0` pointwise. Passes when `e_n` decreases and the last value
/// is at most a tenth of the first.
pub fn brezis_lieb(ctx: &VerifyContext) -> Result<(Vec<CheckReport>, Vec<RefinementLevel>)> {
    let mut levels = Vec::with_capacity(BREZIS_LIEB_CELLS.len());
    for &cells in &BREZIS_LIEB_CELLS {
        let domain = ctx.domain.with_cells(cells).build()?;
        let space = DiscreteSpace::new(domain, ctx.s, ctx.family.clone())?;
        let d = space.domain();
        let u = GridFunction::bump(d, d.centroid(), 0.2 * d.diameter());
        let (lo, hi) = d.bounding_box();
        let x0 = [lo[0] + 0.3 * (hi[0] - lo[0]), lo[1] + 0.4 * (hi[1] - lo[1])];
        let w = GridFunction::bump(d, x0, d.h());
        let e = (space.gagliardo(&(&u + &w)) - space.gagliardo(&w) - space.gagliardo(&u)).abs();
        levels.push((cells, e));
    }
    let e0 = levels[0].1.max(FLOOR);
    let mut mono = Worst::new("monotone-decrease");
    for pair in levels.windows(2) {
        mono.record((pair[1].1 - pair[0].1) / e0, || {
            vec![("cells", pair[1].0 as f64), ("previous", pair[0].1), ("value", pair[1].1)]
        });
    }
    let last = levels[levels.len() - 1];
    let fin =
        CheckReport::single("final-ratio", last.1 / e0 - 0.1, 0.0, &[("initial", levels[0].1), ("final", last.1)]);
    Ok((vec![mono.finish(0.0), fin], levels))
}

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::grid::{DiscreteSpace, GridFunction};
use crate::operator::{derivative_pairing, gradient, hessian, ProbeSet};
use crate::solver::SolverConfig;

const PROBE_STREAM: u64 = 0x94d0_49bb_1331_11eb;

#[derive(Debug, Clone, Serialize)]
pub struct RestartSummary {
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Result of minimizing `J(u) - sum source u h^N`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexReport {
    pub family: String,
    pub energy: f64,
    pub residual: f64,
    pub u_norm: f64,
    pub restarts: Vec<RestartSummary>,
    /// Largest Luxemburg distance between restart minimizers.
    pub max_pairwise_distance: f64,
    pub unique: bool,
    /// Energy decrease achieved by one more line-searched gradient step.
    pub fixed_point_decrease: f64,
    /// `|<J'(u) - source, u>|`.
    pub optimality_gap: f64,
    pub converged: bool,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub solution: GridFunction,
}

struct Objective<'a> {
    space: &'a DiscreteSpace,
    source: &'a GridFunction,
    cell: f64,
}

impl Objective<'_> {
    fn energy(&self, u: &GridFunction) -> f64 {
        self.space.gagliardo(u) - u.dot_h(self.source, self.cell)
    }

    fn gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        Ok(&gradient(self.space, u)? - self.source)
    }
}

/// Damped Newton with an Armijo line search on the energy; a Levenberg
/// shift is added when the Hessian step is not a descent direction.
fn minimize(
    obj: &Objective,
    start: GridFunction,
    probes: &ProbeSet,
    cfg: &SolverConfig,
) -> Result<(GridFunction, usize, f64)> {
    let n = start.len();
    let mut u = start;
    let mut e = obj.energy(&u);
    let mut g = obj.gradient(&u)?;
    let mut iters = 0;
    let target = 1e-4 * cfg.uniqueness_tol.min(cfg.residual_tol);
    while iters < cfg.max_iterations {
        if probes.dual_estimate(obj.space, &g) <= target {
            break;
        }
        iters += 1;
        let h = hessian(obj.space, &u)?;
        let rhs = DVector::from_iterator(n, g.values().iter().map(|x| -x));
        let mut shift = 0.0;
        let mut dir = None;
        for _ in 0..20 {
            let hs = if shift > 0.0 { &h + DMatrix::identity(n, n) * shift } else { h.clone() };
            if let Some(d) = hs.lu().solve(&rhs) {
                let d = GridFunction::from_vec(d.as_slice().to_vec());
                if d.dot_h(&g, obj.cell) < 0.0 {
                    dir = Some(d);
                    break;
                }
            }
            shift = if shift == 0.0 { 1e-8 * h.diagonal().amax().max(1.0) } else { shift * 10.0 };
        }
        let d = dir.unwrap_or_else(|| -&g);
        let slope = d.dot_h(&g, obj.cell);
        let mut t = 1.0;
        let mut moved = false;
        while t >= cfg.step_floor {
            let trial = u.axpy(t, &d);
            let et = obj.energy(&trial);
            if et <= e + cfg.armijo * t * slope {
                moved = et < e || t == 1.0;
                u = trial;
                e = et;
                break;
            }
            t *= 0.5;
        }
        g = obj.gradient(&u)?;
        if !moved {
            break;
        }
    }
    let res = probes.dual_estimate(obj.space, &g);
    Ok((u, iters, res))
}

/// Minimize `J(u) - sum source u h^N` from `cfg.restarts` random starts and
/// check that all minimizers coincide in the Luxemburg norm.
pub fn convex_solve(space: &DiscreteSpace, source: &GridFunction, cfg: &SolverConfig) -> Result<ConvexReport> {
    cfg.validate()?;
    space.check(source)?;
    let mut diagnostics = Vec::new();
    if !space.family().has_increasing_phi() {
        diagnostics.push(format!(
            "family {} does not have increasing phi; strict convexity is not guaranteed",
            space.family().name()
        ));
    }
    let cell = space.domain().cell_measure();
    let obj = Objective { space, source, cell };
    let probes = ProbeSet::new(space, cfg.probes, cfg.seed ^ PROBE_STREAM)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sols = Vec::with_capacity(cfg.restarts);
    let mut restarts = Vec::with_capacity(cfg.restarts);
    for _ in 0..cfg.restarts {
        let (u, iterations, residual) = if source.is_zero() {
            (space.zeros(), 0, 0.0)
        } else {
            let start = GridFunction::gaussian(space.domain(), &mut rng);
            minimize(&obj, start, &probes, cfg)?
        };
        restarts.push(RestartSummary { energy: obj.energy(&u), residual, iterations });
        sols.push(u);
    }
    let mut max_dist = 0.0f64;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            max_dist = max_dist.max(space.norm(&(&sols[i] - &sols[j]))?);
        }
    }
    let unique = max_dist <= cfg.uniqueness_tol;
    if !unique {
        diagnostics.push(format!(
            "restarts disagree: Luxemburg distance {max_dist:e} exceeds {:e}; the family may not be strictly convex",
            cfg.uniqueness_tol
        ));
    }
    let best = (0..sols.len())
        .min_by(|a, b| restarts[*a].energy.total_cmp(&restarts[*b].energy))
        .ok_or_else(|| MfsError::Config("no restarts".into()))?;
    let u = sols.swap_remove(best);
    let e = obj.energy(&u);
    let g = obj.gradient(&u)?;
    let residual = probes.dual_estimate(space, &g);

    let gg = g.dot_h(&g, cell);
    let mut t = 1.0;
    let mut decrease = 0.0;
    while t >= cfg.step_floor && gg > 0.0 {
        let et = obj.energy(&u.axpy(-t, &g));
        if et <= e - cfg.armijo * t * gg {
            decrease = e - et;
            break;
        }
        t *= 0.5;
    }
    let optimality_gap = (derivative_pairing(space, &u, &u)? - u.dot_h(source, cell)).abs();
    let converged = unique && residual <= cfg.residual_tol;
    Ok(ConvexReport {
        family: space.family().name().to_string(),
        energy: e,
        residual,
        u_norm: space.norm(&u)?,
        restarts,
        max_pairwise_distance: max_dist,
        unique,
        fixed_point_decrease: decrease,
        optimality_gap,
        converged,
        diagnostics,
        solution: u,
    })
}

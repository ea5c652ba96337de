//! The energy `I(u) = J(u) - int F(x, u)`, its mountain-pass critical
//! points, pure-source minimization and the audit of the growth conditions
//! on `f`.

mod audit;
mod convex;
mod mountain;
mod nonlinearity;

pub use audit::{condition_audit, AuditConfig, AuditReport, ConditionCheck};
pub use convex::{convex_solve, ConvexReport, RestartSummary};
pub use mountain::{mountain_pass, two_mesh, SolutionReport, TwoMeshReport, WeakIdentity};
pub use nonlinearity::Nonlinearity;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MfsError, Result};
use crate::grid::{integrate_nodes, poincare_sample, DiscreteSpace, GridFunction};
use crate::operator::{gradient, hessian};

/// Run parameters shared by the mountain-pass and convex solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Number of points `K` on the discrete path, endpoints included.
    pub path_points: usize,
    /// Sufficient-decrease fraction of the backtracking line search.
    pub armijo: f64,
    /// Smallest step tried before a line search gives up.
    pub step_floor: f64,
    pub residual_tol: f64,
    pub cerami_tol: f64,
    pub max_iterations: usize,
    /// Newton steps per polishing attempt.
    pub newton_iterations: usize,
    /// Path iterations between Newton polishing attempts.
    pub polish_every: usize,
    /// Random directions in the dual-norm probe set.
    pub probes: usize,
    /// Random fields per radius in the geometry probe.
    pub geometry_samples: usize,
    /// Random starts of the convex solver.
    pub restarts: usize,
    /// Largest accepted Luxemburg distance between convex restarts.
    pub uniqueness_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            path_points: 17,
            armijo: 1e-4,
            step_floor: 1e-14,
            residual_tol: 1e-5,
            cerami_tol: 1e-4,
            max_iterations: 2000,
            newton_iterations: 40,
            polish_every: 20,
            probes: crate::operator::DEFAULT_RANDOM_PROBES,
            geometry_samples: 16,
            restarts: 3,
            uniqueness_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.path_points < 3 {
            return Err(MfsError::Config(format!("path needs K >= 3 points, got {}", self.path_points)));
        }
        let positive = [
            ("armijo", self.armijo),
            ("step_floor", self.step_floor),
            ("residual_tol", self.residual_tol),
            ("cerami_tol", self.cerami_tol),
            ("uniqueness_tol", self.uniqueness_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(MfsError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.armijo >= 1.0 {
            return Err(MfsError::Config(format!("armijo must be below 1, got {}", self.armijo)));
        }
        if self.geometry_samples == 0 || self.restarts == 0 || self.polish_every == 0 {
            return Err(MfsError::Config("geometry_samples, restarts and polish_every must be positive".into()));
        }
        Ok(())
    }
}

/// A discrete space together with the reaction term.
#[derive(Debug, Clone)]
pub struct Problem {
    space: DiscreteSpace,
    nonlinearity: Nonlinearity,
}

impl Problem {
    pub fn new(space: DiscreteSpace, nonlinearity: Nonlinearity) -> Self {
        Self { space, nonlinearity }
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// `J(u) - sum_i F(u_i) h^N`.
    pub fn energy(&self, u: &GridFunction) -> f64 {
        let nl = self.nonlinearity;
        self.space.gagliardo(u) - integrate_nodes(&self.space, u, |_, t| nl.primitive(t))
    }

    /// Nodal gradient of the energy, scaled like [`gradient`].
    pub fn energy_gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        let mut g = gradient(&self.space, u)?;
        for (gk, uk) in g.values_mut().iter_mut().zip(u.values()) {
            *gk -= self.nonlinearity.value(*uk);
        }
        Ok(g)
    }

    /// Hessian of the energy, scaled like [`hessian`].
    pub fn hessian(&self, u: &GridFunction) -> Result<DMatrix<f64>> {
        let mut h = hessian(&self.space, u)?;
        for (k, uk) in u.values().iter().enumerate() {
            h[(k, k)] -= self.nonlinearity.derivative(*uk);
        }
        Ok(h)
    }
}

pub fn energy(problem: &Problem, u: &GridFunction) -> f64 {
    problem.energy(u)
}

pub fn energy_gradient(problem: &Problem, u: &GridFunction) -> Result<GridFunction> {
    problem.energy_gradient(u)
}

/// Radius and level of the small sphere, and the far endpoint `e`.
#[derive(Debug, Clone, Serialize)]
pub struct Geometry {
    pub rho: f64,
    pub alpha: f64,
    /// Smallest sampled energy on the sphere of radius `rho`.
    pub min_energy: f64,
    pub halvings: usize,
    /// Smallest energy over a fresh sample at radius `rho`.
    pub validation_min: f64,
    /// `e = e_scale * u0`.
    pub e_scale: f64,
    pub e_energy: f64,
    pub e_norm: f64,
    pub u0: &'static str,
    #[serde(skip)]
    pub e: GridFunction,
}

pub const U0_DESCRIPTION: &str = "gaussian bump at the centroid, width 0.2*diameter, unit Luxemburg norm";

const MAX_HALVINGS: usize = 40;
const MAX_DOUBLINGS: usize = 64;
const VALIDATION_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// The bump `u0` used for the far endpoint.
pub fn unit_bump(space: &DiscreteSpace) -> Result<GridFunction> {
    let d = space.domain();
    let u = GridFunction::bump(d, d.centroid(), 0.2 * d.diameter());
    let n = space.norm(&u)?;
    Ok(u.scaled(1.0 / n))
}

fn unit_directions(space: &DiscreteSpace, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (v, _, _) = poincare_sample(space, k, &mut rng);
        let n = space.norm(&v)?;
        out.push(v.scaled(1.0 / n));
    }
    Ok(out)
}

fn min_energy_at(problem: &Problem, dirs: &[GridFunction], rho: f64) -> f64 {
    dirs.iter().map(|v| problem.energy(&v.scaled(rho))).fold(f64::INFINITY, f64::min)
}

/// Find `rho` by halving from 1 until every sampled field of norm `rho` has
/// positive energy, set `alpha` to half the smallest such energy, then
/// double `t` until `I(t u0) < 0` with `t > rho`.
pub fn geometry_probe(problem: &Problem, cfg: &SolverConfig) -> Result<Geometry> {
    let space = problem.space();
    let u0 = unit_bump(space)?;
    let mut dirs = unit_directions(space, cfg.geometry_samples, cfg.seed)?;
    dirs.push(u0.clone());
    let mut rho = 1.0;
    let mut found = None;
    for halvings in 0..=MAX_HALVINGS {
        let m = min_energy_at(problem, &dirs, rho);
        if m > 0.0 {
            found = Some((halvings, m));
            break;
        }
        rho *= 0.5;
    }
    let Some((halvings, min_energy)) = found else {
        return Err(MfsError::Geometry(format!(
            "no radius with positive sampled energy after {MAX_HALVINGS} halvings; check (f4) against the discrete Poincaré constant"
        )));
    };
    let fresh = unit_directions(space, cfg.geometry_samples, cfg.seed ^ VALIDATION_STREAM)?;
    let validation_min = min_energy_at(problem, &fresh, rho);

    let mut t = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let e = u0.scaled(t);
        let e_energy = problem.energy(&e);
        if e_energy < 0.0 && t > rho {
            return Ok(Geometry {
                rho,
                alpha: 0.5 * min_energy,
                min_energy,
                halvings,
                validation_min,
                e_scale: t,
                e_energy,
                e_norm: t,
                u0: U0_DESCRIPTION,
                e,
            });
        }
        t *= 2.0;
    }
    Err(MfsError::Geometry(format!(
        "no e with negative energy along t*u0 for t up to 2^{MAX_DOUBLINGS}; the path degenerates"
    )))
}

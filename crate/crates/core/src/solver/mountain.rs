use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::grid::{integrate_nodes, GridFunction};
use crate::operator::{derivative_pairing, kernel_matrix, ProbeSet};
use crate::solver::{geometry_probe, Geometry, Problem, SolverConfig};

const PROBE_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

/// `l J(u) <= <J'(u), u>` and `<J'(u), u> = sum f(u) u h^N` up to the residual.
#[derive(Debug, Clone, Serialize)]
pub struct WeakIdentity {
    pub ell_j: f64,
    pub pairing: f64,
    pub nodal: f64,
    /// `residual * ||u||`.
    pub budget: f64,
    pub holds: bool,
}

/// Certificate of a mountain-pass run.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub family: String,
    pub nonlinearity: String,
    pub converged: bool,
    /// `I(u*)`.
    pub level: f64,
    pub geometry: Geometry,
    pub residual: f64,
    pub cerami: f64,
    pub u_norm: f64,
    pub u_max: f64,
    pub nontrivial: bool,
    pub level_dominates: bool,
    /// Highest path energy when the run stopped.
    pub path_max: f64,
    pub path_iterations: usize,
    pub newton_iterations: usize,
    /// `"path"` or `"newton"`.
    pub stopped_by: String,
    /// Negative eigenvalues of the energy Hessian at `u*`.
    pub morse_index: usize,
    pub weak_identity: WeakIdentity,
    pub diagnostics: Vec<String>,
    #[serde(skip)]
    pub solution: GridFunction,
}

#[derive(Debug, Clone)]
struct Candidate {
    u: GridFunction,
    energy: f64,
    residual: f64,
    norm: f64,
    cerami: f64,
}

impl Candidate {
    /// The residual is the probe-set estimate, raised to `|<I'(u), u>| / ||u||`
    /// once it is within tolerance; the norm is only computed then.
    fn new(
        problem: &Problem,
        probes: &ProbeSet,
        u: GridFunction,
        g: &GridFunction,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        let residual = probes.dual_estimate(problem.space(), g);
        let mut c = Self { energy: problem.energy(&u), residual, norm: f64::NAN, cerami: f64::INFINITY, u };
        if residual <= cfg.residual_tol {
            c.complete(problem, g)?;
        }
        Ok(c)
    }

    fn complete(&mut self, problem: &Problem, g: &GridFunction) -> Result<()> {
        if self.norm.is_nan() {
            let space = problem.space();
            self.norm = space.norm(&self.u)?;
            if self.norm > 0.0 {
                let own = g.dot_h(&self.u, space.domain().cell_measure()).abs() / self.norm;
                self.residual = self.residual.max(own);
            }
            self.cerami = (1.0 + self.norm) * self.residual;
        }
        Ok(())
    }

    fn meets(&self, cfg: &SolverConfig) -> bool {
        self.residual <= cfg.residual_tol && self.cerami <= cfg.cerami_tol
    }
}

fn l2(v: &GridFunction) -> f64 {
    v.values().iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The inner product of the discrete fractional Laplacian `L`, used both
/// to precondition gradients and to measure path length.
struct Metric {
    l: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    cell: f64,
}

impl Metric {
    fn new(problem: &Problem) -> Result<Self> {
        let space = problem.space();
        let l = kernel_matrix(space);
        let chol = Cholesky::new(l.clone())
            .ok_or_else(|| MfsError::Geometry("the kernel matrix is not positive definite".into()))?;
        Ok(Self { l, chol, cell: space.domain().cell_measure() })
    }

    /// `L^{-1} g`.
    fn precondition(&self, g: &GridFunction) -> GridFunction {
        let x = self.chol.solve(&DVector::from_column_slice(g.values()));
        GridFunction::from_vec(x.as_slice().to_vec())
    }

    fn norm(&self, v: &GridFunction) -> f64 {
        let x = DVector::from_column_slice(v.values());
        (x.dot(&(&self.l * &x)) * self.cell).max(0.0).sqrt()
    }

    fn distance(&self, a: &GridFunction, b: &GridFunction) -> f64 {
        self.norm(&(a - b))
    }
}

/// Backtracking search minimizing `f` along `d` from `u`, where `f(u) = f0`
/// and `slope` is the directional derivative. Returns the accepted point,
/// its value and the step.
fn line_search<F: Fn(&GridFunction) -> f64>(
    f: F,
    u: &GridFunction,
    f0: f64,
    d: &GridFunction,
    slope: f64,
    t0: f64,
    cfg: &SolverConfig,
) -> Option<(GridFunction, f64, f64)> {
    let mut t = t0;
    while t >= cfg.step_floor {
        let trial = u.axpy(t, d);
        let ft = f(&trial);
        if ft <= f0 + cfg.armijo * t * slope {
            return Some((trial, ft, t));
        }
        t *= 0.5;
    }
    None
}

/// Redistribute the interior points at equal arclength, endpoints fixed.
fn reparametrize(path: &mut [GridFunction], metric: &Metric) {
    let k = path.len();
    let mut s = vec![0.0; k];
    for i in 1..k {
        s[i] = s[i - 1] + metric.distance(&path[i], &path[i - 1]);
    }
    let total = s[k - 1];
    if !(total > 0.0) {
        return;
    }
    let old = path.to_vec();
    let mut j = 0;
    for (i, p) in path.iter_mut().enumerate().take(k - 1).skip(1) {
        let target = total * i as f64 / (k - 1) as f64;
        while j + 2 < k && s[j + 1] < target {
            j += 1;
        }
        let seg = s[j + 1] - s[j];
        let w = if seg > 0.0 { ((target - s[j]) / seg).clamp(0.0, 1.0) } else { 0.0 };
        *p = old[j].axpy(w, &(&old[j + 1] - &old[j]));
    }
}

/// Damped Newton on the nodal gradient; the step is accepted when the
/// Euclidean gradient norm decreases.
fn newton_polish(
    problem: &Problem,
    probes: &ProbeSet,
    start: &GridFunction,
    cfg: &SolverConfig,
) -> Result<(Option<Candidate>, usize)> {
    let space = problem.space();
    let mut u = start.clone();
    let mut g = problem.energy_gradient(&u)?;
    let mut gn = l2(&g);
    let mut iters = 0;
    while iters < cfg.newton_iterations {
        if probes.dual_estimate(space, &g) <= 1e-3 * cfg.residual_tol {
            break;
        }
        iters += 1;
        let h = problem.hessian(&u)?;
        let rhs = DVector::from_iterator(u.len(), g.values().iter().map(|x| -x));
        let Some(d) = h.lu().solve(&rhs) else {
            return Ok((None, iters));
        };
        let d = GridFunction::from_vec(d.as_slice().to_vec());
        let mut t = 1.0;
        let mut moved = false;
        while t >= 1e-8 {
            let trial = u.axpy(t, &d);
            let gt = problem.energy_gradient(&trial)?;
            let gtn = l2(&gt);
            if gtn.is_finite() && gtn < (1.0 - 1e-4 * t) * gn {
                u = trial;
                g = gt;
                gn = gtn;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((Some(Candidate::new(problem, probes, u, &g, cfg)?), iters))
}

fn morse_index(problem: &Problem, u: &GridFunction) -> Result<usize> {
    let h = problem.hessian(u)?;
    let sym = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(eig.iter().filter(|v| **v < -1e-10 * scale).count())
}

/// Path deformation from the segment `0 -> e`: descend the path maximizer
/// with a backtracking line search, redistribute by arclength, and
/// periodically polish the maximizer with Newton's method.
pub fn mountain_pass(problem: &Problem, cfg: &SolverConfig) -> Result<SolutionReport> {
    cfg.validate()?;
    let space = problem.space();
    let geometry = geometry_probe(problem, cfg)?;
    let metric = Metric::new(problem)?;
    let probes = ProbeSet::new(space, cfg.probes, cfg.seed ^ PROBE_STREAM)?;
    let k = cfg.path_points;
    let mut path: Vec<GridFunction> = (0..k).map(|i| geometry.e.scaled(i as f64 / (k - 1) as f64)).collect();
    let mut energies: Vec<f64> = path.iter().map(|u| problem.energy(u)).collect();

    let mut steps = vec![1.0f64; k];
    let mut climb = 1.0f64;
    let mut best: Option<Candidate> = None;
    let mut path_iterations = 0;
    let mut newton_iterations = 0;
    let mut diagnostics = Vec::new();
    let mut finish: Option<(Candidate, &'static str)> = None;
    let mut path_max = f64::NAN;

    for it in 0..=cfg.max_iterations {
        let imax = (1..k - 1).max_by(|a, b| energies[*a].total_cmp(&energies[*b])).unwrap_or(1);
        path_max = energies[imax];
        if !(path_max > 0.0) {
            return Err(MfsError::Geometry(format!(
                "path collapsed: maximal energy {path_max:e} is not positive at iteration {it}"
            )));
        }
        let g = problem.energy_gradient(&path[imax])?;
        let cand = Candidate::new(problem, &probes, path[imax].clone(), &g, cfg)?;
        if cand.meets(cfg) && cand.energy >= geometry.alpha {
            finish = Some((cand, "path"));
            break;
        }
        if it > 0 && it % cfg.polish_every == 0 {
            let (polished, iters) = newton_polish(problem, &probes, &cand.u, cfg)?;
            newton_iterations += iters;
            if let Some(p) = polished {
                let admissible = p.energy >= geometry.alpha && p.energy <= path_max * (1.0 + 1e-9) && !p.u.is_zero();
                if p.meets(cfg) && admissible && morse_index(problem, &p.u)? == 1 {
                    finish = Some((p, "newton"));
                    break;
                }
            }
        }
        if best.as_ref().is_none_or(|b| cand.residual < b.residual) {
            best = Some(cand);
        }
        if it == cfg.max_iterations {
            break;
        }

        // Lower every other interior point along the preconditioned gradient.
        for i in (1..k - 1).filter(|i| *i != imax) {
            let gi = problem.energy_gradient(&path[i])?;
            let d = -&metric.precondition(&gi);
            let cap = 0.5 * (metric.distance(&path[i - 1], &path[i]) + metric.distance(&path[i], &path[i + 1]));
            let t0 = (2.0 * steps[i]).min(cap / metric.norm(&d).max(f64::MIN_POSITIVE));
            let slope = gi.dot_h(&d, metric.cell);
            if let Some((u, e, t)) = line_search(|v| problem.energy(v), &path[i], energies[i], &d, slope, t0, cfg) {
                path[i] = u;
                energies[i] = e;
                steps[i] = t;
            }
        }
        // The maximizer descends across the path and climbs along it.
        let mut tau = &path[imax + 1] - &path[imax - 1];
        tau = tau.scaled(1.0 / metric.norm(&tau).max(f64::MIN_POSITIVE));
        let spacing =
            0.5 * (metric.distance(&path[imax - 1], &path[imax]) + metric.distance(&path[imax], &path[imax + 1]));
        let big_g = metric.precondition(&g);
        let along = g.dot_h(&tau, metric.cell);
        let d = -&big_g.axpy(-along, &tau);
        let slope = g.dot_h(&d, metric.cell);
        let t0 = (2.0 * steps[imax]).min(spacing / metric.norm(&d).max(f64::MIN_POSITIVE));
        let (mut u, mut e) = (path[imax].clone(), energies[imax]);
        if slope < 0.0 {
            if let Some((un, en, t)) = line_search(|v| problem.energy(v), &u, e, &d, slope, t0, cfg) {
                u = un;
                e = en;
                steps[imax] = t;
            }
        }
        let g1 = problem.energy_gradient(&u)?;
        let s1 = g1.dot_h(&tau, metric.cell);
        if s1 != 0.0 {
            let dir = tau.scaled(s1.signum());
            let t0 = (2.0 * climb).min(0.5 * spacing);
            if let Some((un, en, t)) = line_search(|v| -problem.energy(v), &u, -e, &dir, -s1.abs(), t0, cfg) {
                u = un;
                e = -en;
                climb = t;
            }
        }
        path[imax] = u;
        energies[imax] = e;
        reparametrize(&mut path[..=imax], &metric);
        reparametrize(&mut path[imax..], &metric);
        for i in (1..k - 1).filter(|i| *i != imax) {
            energies[i] = problem.energy(&path[i]);
        }
        path_iterations += 1;
    }

    let (cand, stopped_by) = match finish {
        Some((c, how)) => (c, how),
        None => {
            diagnostics.push(format!(
                "iteration cap {} reached; reporting the iterate with the smallest residual",
                cfg.max_iterations
            ));
            (best.expect("at least one iterate"), "iteration-cap")
        }
    };
    let mut cand = cand;
    let g = problem.energy_gradient(&cand.u)?;
    cand.complete(problem, &g)?;

    let u = cand.u;
    let level = cand.energy;
    let nontrivial = !u.is_zero() && cand.norm > 0.0 && level > 0.0;
    let level_dominates = level >= geometry.alpha;
    if !level_dominates {
        diagnostics.push(format!("level {level:e} is below alpha {:e}", geometry.alpha));
    }
    let nl = *problem.nonlinearity();
    let pairing = derivative_pairing(space, &u, &u)?;
    let nodal = integrate_nodes(space, &u, |_, t| nl.value(t) * t);
    let ell_j = space.family().ell() * space.gagliardo(&u);
    let budget = cand.residual * cand.norm;
    let scale = pairing.abs().max(nodal.abs()).max(1.0);
    let weak_identity = WeakIdentity {
        ell_j,
        pairing,
        nodal,
        budget,
        holds: ell_j <= pairing * (1.0 + 1e-12) + 1e-12 && (pairing - nodal).abs() <= budget + 1e-9 * scale,
    };
    let morse_index = morse_index(problem, &u)?;
    let converged = stopped_by != "iteration-cap" && cand.residual <= cfg.residual_tol && cand.cerami <= cfg.cerami_tol;
    Ok(SolutionReport {
        family: space.family().name().to_string(),
        nonlinearity: nl.name(),
        converged: converged && nontrivial && level_dominates,
        level,
        residual: cand.residual,
        cerami: cand.cerami,
        u_norm: cand.norm,
        u_max: u.max_abs(),
        nontrivial,
        level_dominates,
        path_max,
        path_iterations,
        newton_iterations,
        stopped_by: stopped_by.to_string(),
        morse_index,
        weak_identity,
        diagnostics,
        geometry,
        solution: u,
    })
}

/// Mountain-pass levels on a mesh and on its refinement.
#[derive(Debug, Clone, Serialize)]
pub struct TwoMeshReport {
    pub coarse_cells: usize,
    pub fine_cells: usize,
    pub coarse_level: f64,
    pub fine_level: f64,
    pub abs_difference: f64,
    pub rel_difference: f64,
    pub both_converged: bool,
}

/// Solve on `cells` and `2 * cells` cells per side with problems produced by `build`.
pub fn two_mesh<B: Fn(usize) -> Result<Problem>>(build: B, cells: usize, cfg: &SolverConfig) -> Result<TwoMeshReport> {
    let coarse = mountain_pass(&build(cells)?, cfg)?;
    let fine = mountain_pass(&build(2 * cells)?, cfg)?;
    let d = (fine.level - coarse.level).abs();
    Ok(TwoMeshReport {
        coarse_cells: cells,
        fine_cells: 2 * cells,
        coarse_level: coarse.level,
        fine_level: fine.level,
        abs_difference: d,
        rel_difference: d / coarse.level.abs().max(f64::MIN_POSITIVE),
        both_converged: coarse.converged && fine.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DiscreteSpace, GridDomain};
    use crate::nfunc::{NFunctionFamily, SymmetricField};
    use crate::solver::Nonlinearity;

    fn problem(cells: usize) -> Problem {
        let d = GridDomain::rectangle(2, [0.0, 0.0], [1.0, 1.0], cells, 0.34).unwrap();
        let fam = NFunctionFamily::double_phase(2.0, 2.5, SymmetricField::Constant(1.0)).unwrap();
        Problem::new(DiscreteSpace::new(d, 0.25, fam).unwrap(), Nonlinearity::power_log(3.0).unwrap())
    }

    #[test]
    fn reparametrize_equalizes_spacing() {
        let p = problem(3);
        let metric = Metric::new(&p).unwrap();
        let e = GridFunction::constant(p.space().domain(), 1.0);
        let ts = [0.0, 0.1, 0.15, 0.2, 1.0];
        let mut path: Vec<GridFunction> = ts.iter().map(|t| e.scaled(*t)).collect();
        reparametrize(&mut path, &metric);
        for (i, p) in path.iter().enumerate() {
            assert!((p.values()[0] - i as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_mountain_pass_certifies() {
        let p = problem(6);
        let r = mountain_pass(&p, &SolverConfig::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.level >= r.geometry.alpha && r.geometry.alpha > 0.0);
        assert!(r.residual <= 1e-5 && r.cerami <= 1e-4);
        assert!(r.weak_identity.holds, "{:?}", r.weak_identity);
        assert_eq!(r.morse_index, 1);
    }
}

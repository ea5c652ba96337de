//! The discrete fractional Φ-Laplacian `J'_{s,Phi}` and its diagnostics.
//!
//! Normalization: the double integral visits every unordered pair twice,
//! so with pairs stored once the pairing is
//! `<J'(u), v> = sum_pairs 2 phi(|D_s u|) D_s u D_s v w`. The nodal gradient
//! `g` is scaled so that `<J'(u), v> = sum_k g_k v_k h^N`.

mod probe;

pub use probe::{ProbeSet, DEFAULT_RANDOM_PROBES};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::grid::{DiscreteSpace, GridFunction, EXTERIOR};
use crate::numeric::par_sum;

/// `<J'_{s,Phi}(u), v>`.
pub fn derivative_pairing(space: &DiscreteSpace, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    space.check(u)?;
    space.check(v)?;
    let (uv, vv) = (u.values(), v.values());
    let phis = space.pair_phi();
    Ok(par_sum(space.quad().pairs(), |k, p| {
        let d = p.quotient(uv);
        if d == 0.0 {
            return 0.0;
        }
        2.0 * phis[k].density(d.abs()) * d.signum() * p.quotient(vv) * p.w
    }))
}

/// Per-pair coefficient `2 phi(|D|) D w / r^s`, so that the pair adds `c`
/// to node `a` and `-c` to node `b` of `h^N g`.
fn pair_forces(space: &DiscreteSpace, u: &GridFunction) -> Vec<f64> {
    let uv = u.values();
    let phis = space.pair_phi();
    space
        .quad()
        .pairs()
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let d = p.quotient(uv);
            if d == 0.0 {
                0.0
            } else {
                2.0 * phis[k].density(d.abs()) * d.signum() * p.inv_rs * p.w
            }
        })
        .collect()
}

/// Nodal gradient `g` with `<J'(u), v> = sum_k g_k v_k h^N`.
pub fn gradient(space: &DiscreteSpace, u: &GridFunction) -> Result<GridFunction> {
    space.check(u)?;
    let forces = pair_forces(space, u);
    let mut g = vec![0.0; space.n()];
    for (p, c) in space.quad().pairs().iter().zip(&forces) {
        if p.a != EXTERIOR {
            g[p.a as usize] += c;
        }
        if p.b != EXTERIOR {
            g[p.b as usize] -= c;
        }
    }
    let inv = 1.0 / space.domain().cell_measure();
    for x in &mut g {
        *x *= inv;
    }
    Ok(GridFunction::from_vec(g))
}

/// Pointwise action at one node plus a bound on the part of the integral
/// beyond the extended mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseAction {
    pub value: f64,
    pub tail_bound: f64,
    /// Radius of the ball around the node covered by the mesh.
    pub radius: f64,
}

/// `2 sum_{j != k} phi(|D_s u|) D_s u(x_k, x_j) h^N / |x_k - x_j|^{N+s}` over
/// interior and collar nodes, for interior node `k`.
///
/// The far field `|x_k - y| > R` (where `u = 0`) contributes at most
/// `2 m C2 |S^{N-1}| sum_{e in {ell, m}} |u_k|^{e-1} R^{-s e} / (s e)`,
/// using `t phi(t) <= m Phi(t)/t` and `Phi(t) <= C2 max(t^ell, t^m)`.
pub fn apply_pointwise(space: &DiscreteSpace, u: &GridFunction, k: usize) -> Result<PointwiseAction> {
    space.check(u)?;
    if k >= space.n() {
        return Err(MfsError::Domain(format!("node {k} is not an interior node")));
    }
    let uv = u.values();
    let pairs = space.quad().pairs();
    let phis = space.pair_phi();
    let mut acc = crate::numeric::CompensatedSum::new();
    for &idx in space.quad().pairs_of(k) {
        let p = &pairs[idx as usize];
        let mut d = p.quotient(uv);
        if p.a as usize != k {
            d = -d;
        }
        if d != 0.0 {
            acc.add(2.0 * phis[idx as usize].density(d.abs()) * d.signum() * p.w * p.inv_rs);
        }
    }
    let dom = space.domain();
    let value = acc.value() / dom.cell_measure();

    let x = dom.interior_point(k);
    let (lo, hi) = dom.extended_box();
    let mut radius = (x[0] - lo[0]).min(hi[0] - x[0]);
    if dom.dim() == 2 {
        radius = radius.min(x[1] - lo[1]).min(hi[1] - x[1]);
    }
    let fam = space.family();
    let (ell, m) = (fam.ell(), fam.m());
    let c2 = space.phi_one_bounds().1;
    let s = space.s();
    let a = uv[k].abs();
    let mut tail = 0.0;
    if a > 0.0 {
        for e in [ell, m] {
            tail += a.powf(e - 1.0) * radius.powf(-s * e) / (s * e);
        }
        tail *= 2.0 * m * c2 * dom.sphere_measure();
    }
    Ok(PointwiseAction { value, tail_bound: tail, radius })
}

/// `<J'(u) - J'(v), u - v>` with its smallest pair term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub gap: f64,
    /// Smallest single pair contribution; nonnegative in exact arithmetic.
    pub min_term: f64,
    /// `sum 2 (t phi(t) t)` at `|D u|` and `|D v|`, a natural size for the terms.
    pub scale: f64,
}

pub fn monotonicity_gap(space: &DiscreteSpace, u: &GridFunction, v: &GridFunction) -> Result<GapReport> {
    space.check(u)?;
    space.check(v)?;
    let (uv, vv) = (u.values(), v.values());
    let phis = space.pair_phi();
    let pairs = space.quad().pairs();
    let terms: Vec<(f64, f64)> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let (du, dv) = (p.quotient(uv), p.quotient(vv));
            let fu = phis[k].density(du.abs()) * du.signum();
            let fv = phis[k].density(dv.abs()) * dv.signum();
            (2.0 * (fu - fv) * (du - dv) * p.w, 2.0 * (fu * du + fv * dv) * p.w)
        })
        .collect();
    let gap = par_sum(&terms, |_, t| t.0);
    let scale = par_sum(&terms, |_, t| t.1);
    let min_term = terms.iter().fold(f64::INFINITY, |m, t| m.min(t.0));
    Ok(GapReport { gap, min_term, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplusEntry {
    pub index: usize,
    /// `<J'(u_n), u_n - u>`.
    pub a: f64,
    /// `J(u_n - u)`.
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplusReport {
    pub entries: Vec<SplusEntry>,
}

impl SplusReport {
    /// The finite-sequence form of the implication: every entry with
    /// `a_n <= tol_a` also has `b_n <= tol_b`.
    pub fn implication_holds(&self, tol_a: f64, tol_b: f64) -> bool {
        self.entries.iter().all(|e| e.a.max(0.0) > tol_a || e.b <= tol_b)
    }
}

/// `(a_n, b_n)` along a supplied sequence converging (or not) to `u`.
pub fn splus_diagnostic(space: &DiscreteSpace, sequence: &[GridFunction], u: &GridFunction) -> Result<SplusReport> {
    if sequence.is_empty() {
        return Err(MfsError::Domain("the (S+) diagnostic needs a nonempty sequence".into()));
    }
    space.check(u)?;
    let mut entries = Vec::with_capacity(sequence.len());
    for (index, un) in sequence.iter().enumerate() {
        let diff = un - u;
        let a = derivative_pairing(space, un, &diff)?;
        let b = space.gagliardo(&diff);
        entries.push(SplusEntry { index, a, b });
    }
    Ok(SplusReport { entries })
}

/// `(1/h^N) d^2 J / du_i du_j` as a dense matrix.
pub fn hessian(space: &DiscreteSpace, u: &GridFunction) -> Result<DMatrix<f64>> {
    space.check(u)?;
    let uv = u.values();
    let phis = space.pair_phi();
    Ok(assemble(space, |k, p| phis[k].density_slope(p.quotient(uv).abs())))
}

/// The Hessian for `Phi = t^2 / 2`: the discrete fractional Laplacian,
/// symmetric positive definite thanks to the exterior pairs.
pub fn kernel_matrix(space: &DiscreteSpace) -> DMatrix<f64> {
    assemble(space, |_, _| 1.0)
}

fn assemble<F: Fn(usize, &crate::grid::KernelPair) -> f64>(space: &DiscreteSpace, slope: F) -> DMatrix<f64> {
    let n = space.n();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (k, p) in space.quad().pairs().iter().enumerate() {
        let c = 2.0 * slope(k, p) * p.inv_rs * p.inv_rs * p.w;
        let (a, b) = (p.a, p.b);
        if a != EXTERIOR {
            h[(a as usize, a as usize)] += c;
        }
        if b != EXTERIOR {
            h[(b as usize, b as usize)] += c;
        }
        if a != EXTERIOR && b != EXTERIOR {
            h[(a as usize, b as usize)] -= c;
            h[(b as usize, a as usize)] -= c;
        }
    }
    h / space.domain().cell_measure()
}

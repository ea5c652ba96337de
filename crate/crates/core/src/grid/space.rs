use crate::error::{MfsError, Result};
use crate::grid::{GridDomain, GridFunction};
use crate::nfunc::{LocalPhi, NFunctionFamily};

/// Marker for "this end of the pair is an exterior node".
pub const EXTERIOR: u32 = u32::MAX;

/// One unordered node pair `i < j` of the extended mesh with at least one
/// end in `Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPair {
    /// Extended-node indices.
    pub i: u32,
    pub j: u32,
    /// Interior indices of `i` and `j`, or [`EXTERIOR`].
    pub a: u32,
    pub b: u32,
    /// `|x_i - x_j|^{-s}`.
    pub inv_rs: f64,
    /// `h^{2N} / |x_i - x_j|^N`.
    pub w: f64,
}

impl KernelPair {
    #[inline]
    fn value(idx: u32, u: &[f64]) -> f64 {
        if idx == EXTERIOR {
            0.0
        } else {
            u[idx as usize]
        }
    }

    /// `D_s u(x_i, x_j)`.
    #[inline]
    pub fn quotient(&self, u: &[f64]) -> f64 {
        (Self::value(self.a, u) - Self::value(self.b, u)) * self.inv_rs
    }
}

/// Midpoint-rule discretization of `dmu = dx dy / |x - y|^N` over node
/// pairs. The diagonal is excluded. Each unordered pair is stored once; the
/// double integral counts it twice.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    s: f64,
    pairs: Vec<KernelPair>,
    by_interior: Vec<Vec<u32>>,
}

impl KernelQuadrature {
    pub fn new(domain: &GridDomain, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(MfsError::Config(format!("fractional order s must lie in (0,1), got {s}")));
        }
        let n = domain.n_nodes();
        let dim = domain.dim() as i32;
        let h2n = domain.cell_measure().powi(2);
        let mut pairs = Vec::new();
        let mut by_interior = vec![Vec::new(); domain.n_interior()];
        for i in 0..n {
            let a = domain.interior_index(i);
            for j in (i + 1)..n {
                let b = domain.interior_index(j);
                if a.is_none() && b.is_none() {
                    continue;
                }
                let r = domain.distance(i, j);
                let idx = pairs.len() as u32;
                if let Some(a) = a {
                    by_interior[a].push(idx);
                }
                if let Some(b) = b {
                    by_interior[b].push(idx);
                }
                pairs.push(KernelPair {
                    i: i as u32,
                    j: j as u32,
                    a: a.map_or(EXTERIOR, |v| v as u32),
                    b: b.map_or(EXTERIOR, |v| v as u32),
                    inv_rs: r.powf(-s),
                    w: h2n / r.powi(dim),
                });
            }
        }
        Ok(Self { s, pairs, by_interior })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn pairs(&self) -> &[KernelPair] {
        &self.pairs
    }

    /// Indices of the pairs touching interior node `k`.
    pub fn pairs_of(&self, k: usize) -> &[u32] {
        &self.by_interior[k]
    }
}

/// Everything needed to evaluate modulars and operators: the mesh, the
/// kernel quadrature and the family frozen at every pair and node.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    domain: GridDomain,
    quad: KernelQuadrature,
    fam: NFunctionFamily,
    pair_phi: Vec<LocalPhi>,
    hat_phi: Vec<LocalPhi>,
    phi_one: (f64, f64),
}

impl DiscreteSpace {
    /// Build the quadrature and check the family on every pair: symmetry,
    /// field ranges and `0 < C1 <= Phi_{x,y}(1) <= C2`.
    pub fn new(domain: GridDomain, s: f64, fam: NFunctionFamily) -> Result<Self> {
        let quad = KernelQuadrature::new(&domain, s)?;
        let mut pair_phi = Vec::with_capacity(quad.pairs.len());
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for p in &quad.pairs {
            let (x, y) = (domain.node(p.i as usize), domain.node(p.j as usize));
            fam.check_pair(x, y)?;
            let local = fam.local(x, y);
            let v = local.phi(1.0);
            lo = lo.min(v);
            hi = hi.max(v);
            pair_phi.push(local);
        }
        let mut hat_phi = Vec::with_capacity(domain.n_interior());
        for k in 0..domain.n_interior() {
            let x = domain.interior_point(k);
            fam.check_pair(x, x)?;
            let local = fam.local_hat(x);
            let v = local.phi(1.0);
            lo = lo.min(v);
            hi = hi.max(v);
            hat_phi.push(local);
        }
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(MfsError::Config(format!("boundedness condition fails: Phi(1) ranges over [{lo}, {hi}]")));
        }
        Ok(Self { domain, quad, fam, pair_phi, hat_phi, phi_one: (lo, hi) })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn quad(&self) -> &KernelQuadrature {
        &self.quad
    }

    pub fn family(&self) -> &NFunctionFamily {
        &self.fam
    }

    pub fn s(&self) -> f64 {
        self.quad.s
    }

    pub fn pair_phi(&self) -> &[LocalPhi] {
        &self.pair_phi
    }

    pub fn hat_phi(&self) -> &[LocalPhi] {
        &self.hat_phi
    }

    /// Sampled `(C1, C2)` of the boundedness condition.
    pub fn phi_one_bounds(&self) -> (f64, f64) {
        self.phi_one
    }

    pub fn n(&self) -> usize {
        self.domain.n_interior()
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction::zeros(self.n())
    }

    pub fn check(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.n() {
            return Err(MfsError::Config(format!(
                "grid function has {} values, domain has {} interior nodes",
                u.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// `(u(x_i) - u(x_j)) / |x_i - x_j|^s` for extended nodes `i != j`.
pub fn ds_quotient(domain: &GridDomain, u: &GridFunction, i: usize, j: usize, s: f64) -> Result<f64> {
    if i == j {
        return Err(MfsError::Domain("difference quotient needs two distinct nodes".into()));
    }
    if i >= domain.n_nodes() || j >= domain.n_nodes() {
        return Err(MfsError::Domain(format!("node index out of range ({i}, {j})")));
    }
    let val = |k: usize| domain.interior_index(k).map_or(0.0, |a| u.values()[a]);
    Ok((val(i) - val(j)) / domain.distance(i, j).powf(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunc::SymmetricField;

    fn domain() -> GridDomain {
        GridDomain::rectangle(2, [0.0, 0.0], [1.0, 1.0], 6, 0.34).unwrap()
    }

    #[test]
    fn pair_count_and_weights() {
        let d = domain();
        let q = KernelQuadrature::new(&d, 0.5).unwrap();
        let (n, e) = (d.n_nodes(), d.n_nodes() - d.n_interior());
        assert_eq!(q.pairs().len(), n * (n - 1) / 2 - e * (e - 1) / 2);
        for p in q.pairs() {
            assert!(p.i < p.j && p.w > 0.0);
            assert!(p.a != EXTERIOR || p.b != EXTERIOR);
        }
        for k in 0..d.n_interior() {
            assert_eq!(q.pairs_of(k).len(), n - 1);
        }
    }

    #[test]
    fn quotient_examples() {
        let d = domain();
        let s = 0.5;
        let c = GridFunction::constant(&d, 3.0);
        let (i, j) = (d.interior_node(0), d.interior_node(7));
        assert_eq!(ds_quotient(&d, &c, i, j, s).unwrap(), 0.0);

        let mut e = d.zeros_like();
        e.values_mut()[0] = 1.0;
        let left = i - 1;
        assert!(d.interior_index(left).is_none());
        let v = ds_quotient(&d, &e, i, left, s).unwrap();
        assert!((v - 1.0 / d.h().sqrt()).abs() < 1e-12);

        let u = GridFunction::from_fn(&d, |p| p[0] * p[1] + 0.3);
        let a = ds_quotient(&d, &u, i, j, s).unwrap();
        let b = ds_quotient(&d, &u, j, i, s).unwrap();
        assert_eq!(a, -b);
        assert!(ds_quotient(&d, &u, i, i, s).is_err());
    }

    #[test]
    fn space_rejects_asymmetric_family() {
        let f = SymmetricField::Custom { rule: std::sync::Arc::new(|x, _| 1.0 + x[0]), lower: 0.5, upper: 3.0 };
        let fam = NFunctionFamily::anisotropic(2.0, f).unwrap();
        assert!(matches!(DiscreteSpace::new(domain(), 0.5, fam), Err(MfsError::Config(_))));
    }

    impl GridDomain {
        fn zeros_like(&self) -> GridFunction {
            GridFunction::zeros(self.n_interior())
        }
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{luxemburg_with, DiscreteSpace, GridFunction, LUXEMBURG_TOL};

/// Directions of unit Luxemburg norm used to estimate dual norms from
/// below: every coordinate direction plus a fixed number of random fields.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    /// Norm of each coordinate direction `e_k`.
    coordinate_norms: Vec<f64>,
    random: Vec<GridFunction>,
}

pub const DEFAULT_RANDOM_PROBES: usize = 32;

impl ProbeSet {
    pub fn new(space: &DiscreteSpace, random: usize, seed: u64) -> Result<Self> {
        let coordinate_norms = (0..space.n())
            .map(|k| luxemburg_with(|c| space.gagliardo_single_node(k, c), LUXEMBURG_TOL))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fields = Vec::with_capacity(random);
        for _ in 0..random {
            let v = GridFunction::gaussian(space.domain(), &mut rng);
            let n = space.norm(&v)?;
            fields.push(v.scaled(1.0 / n));
        }
        Ok(Self { coordinate_norms, random: fields })
    }

    pub fn len(&self) -> usize {
        self.coordinate_norms.len() + self.random.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn random_directions(&self) -> &[GridFunction] {
        &self.random
    }

    /// `max_v |sum_k g_k v_k h^N|` over the probe set, for a nodal gradient `g`.
    pub fn dual_estimate(&self, space: &DiscreteSpace, g: &GridFunction) -> f64 {
        let cell = space.domain().cell_measure();
        let mut best = 0.0f64;
        for (gk, nk) in g.values().iter().zip(&self.coordinate_norms) {
            best = best.max((gk * cell / nk).abs());
        }
        for v in &self.random {
            best = best.max(g.dot_h(v, cell).abs());
        }
        best
    }
}

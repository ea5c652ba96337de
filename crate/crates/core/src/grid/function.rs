use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{MfsError, Result};
use crate::grid::GridDomain;
use crate::Point;

/// Nodal values on the interior nodes of a [`GridDomain`]; the extension
/// by zero outside `Omega` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn from_values(domain: &GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_interior() {
            return Err(MfsError::Config(format!(
                "grid function has {} values but the domain has {} interior nodes",
                values.len(),
                domain.n_interior()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(MfsError::Domain(format!("grid function value at node {k} is not finite")));
        }
        Ok(Self { values })
    }

    /// Wrap raw values without checks; the caller guarantees the layout.
    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn from_fn<F: Fn(Point) -> f64>(domain: &GridDomain, f: F) -> Self {
        Self { values: (0..domain.n_interior()).map(|k| f(domain.interior_point(k))).collect() }
    }

    pub fn constant(domain: &GridDomain, c: f64) -> Self {
        Self { values: vec![c; domain.n_interior()] }
    }

    /// Independent standard normal values.
    pub fn gaussian<R: Rng + ?Sized>(domain: &GridDomain, rng: &mut R) -> Self {
        Self { values: (0..domain.n_interior()).map(|_| rng.sample(StandardNormal)).collect() }
    }

    /// `exp(-|x - c|^2 / (2 w^2))`.
    pub fn bump(domain: &GridDomain, center: Point, width: f64) -> Self {
        Self::from_fn(domain, |p| {
            let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
            (-r2 / (2.0 * width * width)).exp()
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|v| a * v).collect() }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &GridFunction) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self { values: self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect() }
    }

    /// `sum_k u_k v_k h^N`.
    pub fn dot_h(&self, other: &GridFunction, cell: f64) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * cell
    }

    /// Check that `other` lives on the same node set.
    pub fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.len() != other.len() {
            return Err(MfsError::Config(format!(
                "grid functions live on different domains ({} vs {} nodes)",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<&GridFunction> for f64 {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        rhs.scaled(self)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scaled(-1.0)
    }
}

//! Uniform meshes, grid functions with zero exterior extension, the
//! discrete kernel `dmu`, modulars and Luxemburg norms.

mod domain;
mod function;
mod io;
mod modular;
mod space;

pub use domain::{DomainShape, DomainSpec, GridDomain, DEFAULT_COLLAR};
pub use function::GridFunction;
pub use io::{grid_csv_string, read_grid_csv, write_grid_csv};
pub use modular::{
    integrate_nodes, luxemburg, luxemburg_with, modular_gagliardo, modular_hat, poincare_lambda1_estimate,
    poincare_sample, ModularKind, PoincareEstimate, LUXEMBURG_TOL,
};
pub use space::{ds_quotient, DiscreteSpace, KernelPair, KernelQuadrature, EXTERIOR};

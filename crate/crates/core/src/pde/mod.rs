//! Manufactured PDE problems on `[-1,1]^2`, Gauss-Legendre quadrature and
//! the least-squares projection baseline.

mod problem;
mod projection;
mod quadrature;

pub use problem::{manufactured_allen_cahn, manufactured_poisson, pde_data, PdeKind, PdeProblem};
pub use projection::{l2_projection, relative_l2_error, Projection};
pub use quadrature::{gauss_legendre_1d, gauss_legendre_rule, QuadratureRule};

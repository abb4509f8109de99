//! Polynomial-augmented neural networks.
//!
//! A model is the sum of a small fully connected network and a trainable
//! layer of tensor-product Legendre polynomials:
//! `u(x) = sum_j a_j psi_j(x) + sum_k b_k phi_k(x)`.
//! The crate provides the basis machinery, exact gradients (including
//! Laplacian-based physics-informed losses), orthogonality penalties between
//! the two parts, diagonal preconditioning, coefficient truncation and the
//! Adam / L-BFGS training drivers.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod error;
pub mod model;
pub mod network;
pub mod optim;
pub mod pde;
pub mod polybasis;
pub mod scalar;

pub use error::{PannError, Result};
pub use scalar::Scalar;

pub type DesignBundle64 = polybasis::DesignBundle<f64>;
pub type MlpParams64 = network::MlpParams<f64>;
pub type PannModel64 = model::PannModel<f64>;
pub type LossEval64 = model::LossEval<f64>;
pub type PdeData64 = model::PdeData<f64>;

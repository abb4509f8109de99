//! Fully connected feature network in the adaptive-basis view.
//!
//! The last hidden layer produces features `psi_j(x)`; the network output is
//! the masked linear combination `sum_j a_j psi_j(x)` with no output bias.

mod activation;
mod mlp;

pub use activation::{Activation, ActivationDerivs};
pub use mlp::{
    backward_features, backward_params, forward_features, init_params, FeatureEval, MlpConfig,
    MlpGrad, MlpParams,
};

//! The polynomial-augmented model: prediction, orthogonality penalties,
//! training losses and coefficient truncation.

mod checkpoint;
mod constraint;
mod layout;
mod loss;
mod pann;
mod truncation;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use constraint::{constraint_penalty, constraint_terms, ConstraintEval, ConstraintKind};
pub use layout::ParamLayout;
pub use loss::{pde_loss, regression_loss, L1Scope, LossConfig, LossEval, PdeData};
pub use pann::{predict, ModelGrad, NetworkPart, PannModel, PolyLayer};
pub use truncation::{truncate, TruncationReport};

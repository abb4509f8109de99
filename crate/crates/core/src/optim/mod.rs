//! Full-batch training drivers over flat parameter vectors: Adam with cosine
//! annealing, L-BFGS with a strong Wolfe line search, and the
//! Adam / truncate / L-BFGS pipeline for models.

mod adam;
mod lbfgs;
mod pipeline;
mod report;

pub use adam::{adam_run, cosine_lr, AdamConfig};
pub use lbfgs::{lbfgs_run, LbfgsConfig};
pub use pipeline::{train_pipeline, PipelineOutcome};
pub use report::{StopReason, TrainReport};

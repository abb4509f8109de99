use serde::{Deserialize, Serialize};

/// Why an optimizer phase ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    IterationLimit,
    GradientTolerance,
    LineSearchFailure,
    Diverged,
    /// Nothing left to optimise.
    EmptyParameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// `(global iteration, loss)` samples, always including the first and
    /// last evaluation.
    pub trace: Vec<(usize, f64)>,
    pub final_loss: f64,
    pub wall_s: f64,
    pub adam_iterations: usize,
    pub lbfgs_iterations: usize,
    pub evaluations: usize,
    pub diverged: bool,
    pub stop: StopReason,
}

impl TrainReport {
    pub(crate) fn empty() -> Self {
        TrainReport {
            trace: Vec::new(),
            final_loss: f64::NAN,
            wall_s: 0.0,
            adam_iterations: 0,
            lbfgs_iterations: 0,
            evaluations: 0,
            diverged: false,
            stop: StopReason::IterationLimit,
        }
    }

    /// Appends a later phase; its trace indices are shifted past this one.
    pub fn merge(mut self, later: TrainReport) -> TrainReport {
        let offset = self.adam_iterations + self.lbfgs_iterations;
        self.trace
            .extend(later.trace.into_iter().map(|(k, v)| (k + offset, v)));
        self.final_loss = later.final_loss;
        self.wall_s += later.wall_s;
        self.adam_iterations += later.adam_iterations;
        self.lbfgs_iterations += later.lbfgs_iterations;
        self.evaluations += later.evaluations;
        self.diverged |= later.diverged;
        self.stop = later.stop;
        self
    }
}

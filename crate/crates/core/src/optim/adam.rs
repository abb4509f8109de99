use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::report::{StopReason, TrainReport};
use crate::error::{config_err, PannError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub iterations: usize,
    pub lr0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub cosine: bool,
    /// Loss trace sampling period.
    pub trace_every: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            iterations: 20_000,
            lr0: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            cosine: true,
            trace_every: 100,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(config_err!("Adam learning rate must be positive, got {}", self.lr0));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(config_err!("Adam {name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(config_err!("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// `lr0 * (1 + cos(pi k / K)) / 2`.
pub fn cosine_lr(lr0: f64, k: usize, total: usize) -> f64 {
    if total == 0 {
        return lr0;
    }
    0.5 * lr0 * (1.0 + (std::f64::consts::PI * k as f64 / total as f64).cos())
}

/// Bias-corrected Adam. `loss_fn` returns the loss and its gradient; a
/// non-finite value stops the run and returns the last finite iterate.
pub fn adam_run<F, L>(mut loss_fn: L, params: Array1<F>, cfg: &AdamConfig) -> Result<(Array1<F>, TrainReport)>
where
    F: Scalar,
    L: FnMut(&Array1<F>) -> Result<(F, Array1<F>)>,
{
    cfg.validate()?;
    let start = Instant::now();
    let mut report = TrainReport::empty();
    let mut theta = params;
    if theta.is_empty() {
        let (f, _) = loss_fn(&theta)?;
        report.final_loss = f.to_f64_lossy();
        report.trace.push((0, report.final_loss));
        report.evaluations = 1;
        report.stop = StopReason::EmptyParameters;
        return Ok((theta, report));
    }
    let n = theta.len();
    let (b1, b2) = (F::of(cfg.beta1), F::of(cfg.beta2));
    let eps = F::of(cfg.epsilon);
    let mut m = Array1::<F>::zeros(n);
    let mut v = Array1::<F>::zeros(n);
    let (mut b1t, mut b2t) = (1.0f64, 1.0f64);
    let every = cfg.trace_every.max(1);
    let mut last_good = theta.clone();

    for k in 0..=cfg.iterations {
        let (f, g) = match loss_fn(&theta) {
            Ok(r) if r.0.is_finite() && r.1.iter().all(|x| x.is_finite()) => r,
            Ok(_) | Err(PannError::NonFinite) => {
                report.diverged = true;
                report.stop = StopReason::Diverged;
                report.evaluations += 1;
                theta = last_good;
                log::warn!("Adam diverged at iteration {k}");
                break;
            }
            Err(e) => return Err(e),
        };
        report.evaluations += 1;
        let fv = f.to_f64_lossy();
        report.final_loss = fv;
        if k % every == 0 || k == cfg.iterations {
            report.trace.push((k, fv));
        }
        if k == cfg.iterations {
            break;
        }
        last_good.assign(&theta);
        let lr = if cfg.cosine {
            cosine_lr(cfg.lr0, k, cfg.iterations)
        } else {
            cfg.lr0
        };
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        let c1 = F::of(1.0 - b1t);
        let c2 = F::of(1.0 - b2t);
        let lr = F::of(lr);
        for i in 0..n {
            let gi = g[i];
            m[i] = b1 * m[i] + (F::one() - b1) * gi;
            v[i] = b2 * v[i] + (F::one() - b2) * gi * gi;
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            theta[i] -= lr * mh / (vh.sqrt() + eps);
        }
        report.adam_iterations = k + 1;
    }
    report.wall_s = start.elapsed().as_secs_f64();
    Ok((theta, report))
}

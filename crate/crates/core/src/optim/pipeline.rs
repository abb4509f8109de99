use ndarray::Array1;

use super::adam::{adam_run, AdamConfig};
use super::lbfgs::{lbfgs_run, LbfgsConfig};
use super::report::TrainReport;
use crate::error::Result;
use crate::model::{truncate, LossEval, PannModel, ParamLayout, TruncationReport};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct PipelineOutcome<F> {
    pub model: PannModel<F>,
    pub report: TrainReport,
    /// State right after the Adam phase.
    pub truncation_after_adam: TruncationReport,
    /// Final report, taken after L-BFGS.
    pub truncation: TruncationReport,
}

fn flat_objective<'a, F, L>(
    layout: &'a ParamLayout,
    work: &'a mut PannModel<F>,
    loss: &'a mut L,
) -> impl FnMut(&Array1<F>) -> Result<(F, Array1<F>)> + 'a
where
    F: Scalar,
    L: FnMut(&PannModel<F>) -> Result<LossEval<F>>,
{
    move |theta: &Array1<F>| {
        layout.unpack(work, theta.as_slice().expect("contiguous"))?;
        let e = loss(work)?;
        Ok((e.loss, layout.pack_grad(&e.grad)))
    }
}

/// Adam, then truncation at `threshold`, then L-BFGS over the surviving
/// parameters only, then a final truncation pass. The reported final loss
/// is re-evaluated on the truncated model. With zero Adam iterations the
/// first truncation is skipped, since it would mask every zero-initialized
/// coefficient.
pub fn train_pipeline<F, L>(
    model: PannModel<F>,
    mut loss: L,
    adam: &AdamConfig,
    lbfgs: &LbfgsConfig,
    threshold: f64,
) -> Result<PipelineOutcome<F>>
where
    F: Scalar,
    L: FnMut(&PannModel<F>) -> Result<LossEval<F>>,
{
    let mut model = model;
    let mut work = model.clone();

    let layout = ParamLayout::of(&model);
    let theta0 = layout.pack(&model);
    let (theta, report) = adam_run(flat_objective(&layout, &mut work, &mut loss), theta0, adam)?;
    layout.unpack(&mut model, theta.as_slice().expect("contiguous"))?;
    let mid_threshold = if adam.iterations == 0 { 0.0 } else { threshold };
    let after_adam = truncate(&mut model, mid_threshold);
    log::info!(
        "Adam: {} iterations, loss {:.3e}; truncated {:.1}% NN / {:.1}% poly",
        report.adam_iterations,
        report.final_loss,
        after_adam.pct_nn_truncated,
        after_adam.pct_poly_truncated
    );
    if report.diverged {
        return Ok(PipelineOutcome {
            model,
            report,
            truncation: after_adam.clone(),
            truncation_after_adam: after_adam,
        });
    }

    let layout = ParamLayout::of(&model);
    let mut work = model.clone();
    let theta0 = layout.pack(&model);
    let (theta, lreport) = lbfgs_run(flat_objective(&layout, &mut work, &mut loss), theta0, lbfgs)?;
    layout.unpack(&mut model, theta.as_slice().expect("contiguous"))?;
    let mut report = report.merge(lreport);
    let truncation = truncate(&mut model, threshold);
    match loss(&model) {
        Ok(e) => {
            report.final_loss = e.loss.to_f64_lossy();
            report.evaluations += 1;
        }
        Err(crate::error::PannError::NonFinite) => report.final_loss = f64::NAN,
        Err(e) => return Err(e),
    }
    log::info!(
        "L-BFGS: {} iterations ({:?}), loss {:.3e}",
        report.lbfgs_iterations,
        report.stop,
        report.final_loss
    );
    Ok(PipelineOutcome {
        model,
        report,
        truncation_after_adam: after_adam,
        truncation,
    })
}

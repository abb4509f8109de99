use ndarray::{Array1, Array2};
use pann_core::model::{regression_loss, LossConfig, NetworkPart, PannModel, ParamLayout, PolyLayer};
use pann_core::network::{init_params, Activation, MlpConfig};
use pann_core::optim::{train_pipeline, AdamConfig, LbfgsConfig, StopReason};
use pann_core::polybasis::{
    assemble_design, compute_preconditioner, enumerate_indices, BasisSpec, DesignBundle, DesignOrder,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Problem {
    pts: Array2<f64>,
    y: Array1<f64>,
    design: DesignBundle<f64>,
}

fn problem() -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts: Array2<f64> = Array2::from_shape_simple_fn((60, 2), || rng.gen_range(-1.0..1.0));
    let y = pts.rows().into_iter().map(|r| 0.5 * r[0] * r[1] + (2.0 * r[0]).sin()).collect();
    let basis = enumerate_indices(BasisSpec::total_degree(2, 4));
    let design =
        compute_preconditioner(assemble_design(&basis, pts.view(), DesignOrder::Values).unwrap(), &basis).unwrap();
    Problem { pts, y, design }
}

fn model() -> PannModel<f64> {
    let config = MlpConfig::new(2, vec![6, 6], Activation::Tanh).unwrap();
    let params = init_params(&config, 21);
    let poly = PolyLayer::zeros(enumerate_indices(BasisSpec::total_degree(2, 4)));
    PannModel::new(Some(NetworkPart { config, params }), Some(poly)).unwrap()
}

fn budgets() -> (AdamConfig, LbfgsConfig) {
    (
        AdamConfig {
            iterations: 150,
            lr0: 1e-2,
            ..AdamConfig::default()
        },
        LbfgsConfig {
            iterations: 30,
            ..LbfgsConfig::default()
        },
    )
}

fn run(p: &Problem, m: PannModel<f64>, t: f64) -> pann_core::optim::PipelineOutcome<f64> {
    let (adam, lbfgs) = budgets();
    let cfg = LossConfig::default();
    train_pipeline(m, |m: &PannModel<f64>| regression_loss(m, p.pts.view(), p.y.view(), Some(&p.design), &cfg), &adam, &lbfgs, t)
        .unwrap()
}

#[test]
fn infinite_threshold_removes_every_coefficient() {
    let p = problem();
    let out = run(&p, model(), f64::INFINITY);
    assert_eq!(out.truncation_after_adam.pct_nn_truncated, 100.0);
    assert_eq!(out.truncation.pct_poly_truncated, 100.0);
    assert!(out.truncation.surviving_poly_indices.is_empty());
    assert!(out.model.poly.as_ref().unwrap().coeffs.iter().all(|&c| c == 0.0));
    assert!(out.model.mlp.as_ref().unwrap().params.output.iter().all(|&a| a == 0.0));
}

#[test]
fn zero_threshold_keeps_everything() {
    let p = problem();
    let out = run(&p, model(), 0.0);
    assert_eq!(out.truncation.pct_nn_truncated, 0.0);
    assert_eq!(out.truncation.pct_poly_truncated, 0.0);
    assert_eq!(out.truncation.surviving_poly_indices.len(), 15);
    let start = {
        let cfg = LossConfig::default();
        regression_loss(&model(), p.pts.view(), p.y.view(), Some(&p.design), &cfg).unwrap().loss
    };
    assert!(out.report.final_loss < 0.1 * start, "{} vs {start}", out.report.final_loss);
    assert_eq!(out.report.adam_iterations, 150);
}

#[test]
fn masked_entries_stay_frozen() {
    let p = problem();
    let mut m = model();
    for k in [0, 3, 7] {
        m.poly.as_mut().unwrap().basis.deactivate(k);
    }
    m.mlp.as_mut().unwrap().params.output_mask[2] = false;
    let out = run(&p, m, 0.0);
    let poly = out.model.poly.as_ref().unwrap();
    for k in [0, 3, 7] {
        assert!(!poly.basis.is_active(k));
        assert_eq!(poly.coeffs[k], 0.0);
    }
    let net = &out.model.mlp.as_ref().unwrap().params;
    assert!(!net.output_mask[2]);
    assert_eq!(net.output[2], 0.0);
    assert!((out.truncation.pct_poly_truncated - 20.0).abs() < 1e-12);
}

#[test]
fn truncation_masks_are_monotone_across_phases() {
    let p = problem();
    let out = run(&p, model(), 5e-3);
    assert!(out.truncation.pct_poly_truncated >= out.truncation_after_adam.pct_poly_truncated);
    assert!(out.truncation.pct_nn_truncated >= out.truncation_after_adam.pct_nn_truncated);
    for idx in &out.truncation.surviving_poly_indices {
        assert!(out.truncation_after_adam.surviving_poly_indices.contains(idx));
    }
}

#[test]
fn bitwise_deterministic() {
    let p = problem();
    let a = run(&p, model(), 1e-3);
    let b = run(&p, model(), 1e-3);
    let pa = ParamLayout::of(&a.model).pack(&a.model);
    let pb = ParamLayout::of(&b.model).pack(&b.model);
    assert_eq!(pa.len(), pb.len());
    assert!(pa.iter().zip(pb.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.report.trace, b.report.trace);
    assert_eq!(a.report.final_loss.to_bits(), b.report.final_loss.to_bits());
}

#[test]
fn empty_layout_stops_cleanly() {
    let p = problem();
    let poly = PolyLayer::zeros(enumerate_indices(BasisSpec::total_degree(2, 4)));
    let m = PannModel::new(None, Some(poly)).unwrap();
    let out = run(&p, m, f64::INFINITY);
    assert_eq!(out.report.stop, StopReason::EmptyParameters);
    assert!(out.report.final_loss.is_finite());
}

use std::time::Instant;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use pann_core::model::{
    pde_loss, predict, regression_loss, LossConfig, NetworkPart, PannModel, PolyLayer,
    TruncationReport,
};
use pann_core::network::{init_params, MlpConfig};
use pann_core::optim::{train_pipeline, TrainReport};
use pann_core::pde::{
    gauss_legendre_rule, l2_projection, manufactured_allen_cahn, manufactured_poisson, pde_data,
    relative_l2_error, PdeProblem,
};
use pann_core::polybasis::{
    assemble_design, compute_preconditioner, enumerate_indices, BasisSpec, DesignBundle,
    DesignOrder, MultiIndexSet,
};

use crate::config::{ExperimentConfig, ExperimentKind, ModelKind};
use crate::dataset::{kfold_split, load_csv_dataset};
use crate::error::{HarnessError, Result};
use crate::report::{render_csv, write_csv, ReportRow};
use crate::sampling::{derive_seed, sample_points, square_boundary, test_points};
use crate::targets::{synthetic_target, TargetKind};

const STREAM_POINTS: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_BOUNDARY: u64 = 2;
const STREAM_TEST: u64 = 3;
const STREAM_FOLDS: u64 = 4;
const PREDICT_CHUNK: usize = 4096;

/// Outcome of one trial or fold.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub row: ReportRow,
    pub model: Option<PannModel<f64>>,
    pub train: Option<TrainReport>,
    pub truncation: Option<TruncationReport>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub csv: String,
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.trials.iter().map(|t| t.row.clone()).collect()
    }

    pub fn all_diverged(&self) -> bool {
        !self.trials.is_empty() && self.trials.iter().all(|t| t.row.diverged)
    }
}

/// `u` at `points`, assembling the polynomial design in chunks.
pub fn predict_chunked(model: &PannModel<f64>, points: ArrayView2<f64>) -> Result<Array1<f64>> {
    let n = points.nrows();
    let mut out = Array1::zeros(n);
    let mut start = 0;
    while start < n {
        let end = (start + PREDICT_CHUNK).min(n);
        let chunk = points.slice(s![start..end, ..]);
        let design = match &model.poly {
            Some(p) => Some(assemble_design(&p.basis, chunk, DesignOrder::Values)?),
            None => None,
        };
        out.slice_mut(s![start..end]).assign(&predict(model, chunk, design.as_ref())?);
        start = end;
    }
    Ok(out)
}

fn eval_fn(f: impl Fn(&[f64]) -> f64, points: ArrayView2<f64>) -> Array1<f64> {
    points.rows().into_iter().map(|r| f(r.to_vec().as_slice())).collect()
}

fn build_model(cfg: &ExperimentConfig, d: usize, ell: u32, seed: u64) -> Result<PannModel<f64>> {
    let mlp = if cfg.uses_network() {
        let config = MlpConfig::new(d, cfg.hidden.clone(), cfg.activation)?;
        let params = init_params(&config, seed);
        Some(NetworkPart { config, params })
    } else {
        None
    };
    let poly = if cfg.uses_polynomials() {
        Some(PolyLayer::zeros(enumerate_indices(BasisSpec::new(cfg.basis_kind, d, ell))))
    } else {
        None
    };
    Ok(PannModel::new(mlp, poly)?)
}

fn loss_config(cfg: &ExperimentConfig) -> LossConfig {
    LossConfig {
        preconditioned: cfg.effective_preconditioning(),
        ..cfg.loss.clone()
    }
}

fn training_design(
    basis: Option<&MultiIndexSet>,
    points: ArrayView2<f64>,
    preconditioned: bool,
) -> Result<Option<DesignBundle<f64>>> {
    let Some(basis) = basis else { return Ok(None) };
    let mut d = assemble_design(basis, points, DesignOrder::Values)?;
    if preconditioned {
        d = compute_preconditioner(d, basis)?;
    }
    Ok(Some(d))
}

fn base_row(cfg: &ExperimentConfig, trial: String, n: usize, d: usize, ell: u32, m: usize) -> ReportRow {
    let network = cfg.uses_network();
    ReportRow {
        experiment: cfg.kind.to_string(),
        trial,
        n,
        d,
        ell: if cfg.uses_polynomials() { ell } else { 0 },
        m: if cfg.uses_polynomials() { m } else { 0 },
        constraint: if network && cfg.uses_polynomials() {
            cfg.loss.constraint.to_string()
        } else {
            "-".into()
        },
        activation: if network { cfg.activation.name() } else { "-".into() },
        preconditioned: cfg.effective_preconditioning(),
        rel_l2: f64::NAN,
        wall_s: None,
        pct_nn_trunc: 0.0,
        pct_poly_trunc: 0.0,
        final_loss: f64::NAN,
        diverged: false,
    }
}

fn finish(
    cfg: &ExperimentConfig,
    mut row: ReportRow,
    model: PannModel<f64>,
    train: TrainReport,
    truncation: TruncationReport,
    test: ArrayView2<f64>,
    truth: ArrayView1<f64>,
    started: Instant,
) -> Result<TrialResult> {
    let pred = predict_chunked(&model, test)?;
    row.rel_l2 = relative_l2_error(pred.view(), truth)?;
    if !row.rel_l2.is_finite() {
        row.diverged = true;
    }
    row.diverged |= train.diverged;
    row.final_loss = train.final_loss;
    row.pct_nn_trunc = truncation.pct_nn_truncated;
    row.pct_poly_trunc = truncation.pct_poly_truncated;
    if cfg.record_timing {
        row.wall_s = Some(started.elapsed().as_secs_f64());
    }
    if row.diverged {
        log::warn!("trial {} diverged", row.trial);
    }
    Ok(TrialResult {
        row,
        model: Some(model),
        train: Some(train),
        truncation: Some(truncation),
    })
}

/// Trains on `(points, targets)` and scores on `(test, truth)`.
pub fn fit_regression(
    cfg: &ExperimentConfig,
    trial: String,
    points: ArrayView2<f64>,
    targets: ArrayView1<f64>,
    test: ArrayView2<f64>,
    truth: ArrayView1<f64>,
    target_fn: Option<&dyn Fn(&[f64]) -> f64>,
    seed: u64,
) -> Result<TrialResult> {
    let started = Instant::now();
    let (n, d) = points.dim();
    let ell = cfg.degree_for(n);
    let basis = enumerate_indices(BasisSpec::new(cfg.basis_kind, d, ell));
    let mut row = base_row(cfg, trial, n, d, ell, basis.len());

    if cfg.model == ModelKind::L2Projection {
        let f = target_fn.ok_or_else(|| HarnessError::Config("projection needs an analytic target".into()))?;
        let q = cfg.quad_points.unwrap_or_else(|| (n as f64).powf(1.0 / d as f64).ceil() as usize);
        let rule = gauss_legendre_rule(q, d)?;
        row.n = rule.len();
        let proj = l2_projection(f, &basis, &rule, cfg.loss.preconditioned, test)?;
        row.rel_l2 = proj.rel_l2;
        row.preconditioned = cfg.loss.preconditioned;
        row.constraint = "-".into();
        if cfg.record_timing {
            row.wall_s = Some(started.elapsed().as_secs_f64());
        }
        let _ = truth;
        return Ok(TrialResult {
            row,
            model: None,
            train: None,
            truncation: None,
        });
    }

    let model = build_model(cfg, d, ell, derive_seed(seed, 0, STREAM_INIT))?;
    let lc = loss_config(cfg);
    let design = training_design(model.poly.as_ref().map(|p| &p.basis), points, lc.preconditioned)?;
    let out = train_pipeline(
        model,
        |m: &PannModel<f64>| regression_loss(m, points, targets, design.as_ref(), &lc),
        &cfg.adam,
        &cfg.lbfgs,
        cfg.loss.truncation_threshold,
    )?;
    row.n = n;
    finish(cfg, row, out.model, out.report, out.truncation, test, truth, started)
}

fn pde_problem(kind: ExperimentKind) -> PdeProblem {
    match kind {
        ExperimentKind::PdePoisson => manufactured_poisson(),
        _ => manufactured_allen_cahn(),
    }
}

fn fit_pde(cfg: &ExperimentConfig, trial: usize, test: ArrayView2<f64>) -> Result<TrialResult> {
    let started = Instant::now();
    let problem = pde_problem(cfg.kind);
    let seed = derive_seed(cfg.seed, trial as u64, STREAM_POINTS);
    let colloc = sample_points(cfg.n_points, 2, cfg.sampling, seed)?;
    let boundary = square_boundary(
        cfg.boundary_per_edge,
        cfg.random_boundary,
        derive_seed(cfg.seed, trial as u64, STREAM_BOUNDARY),
    );
    let ell = cfg.degree_for(cfg.n_points);
    let model = build_model(cfg, 2, ell, derive_seed(seed, 0, STREAM_INIT))?;
    let row = base_row(cfg, trial.to_string(), cfg.n_points, 2, ell, model.basis_len());
    let lc = loss_config(cfg);
    let data = pde_data(
        &problem,
        model.poly.as_ref().map(|p| &p.basis),
        boundary.view(),
        colloc.view(),
        lc.preconditioned,
    )?;
    let out = train_pipeline(
        model,
        |m: &PannModel<f64>| pde_loss(m, &data, problem.kind, &lc),
        &cfg.adam,
        &cfg.lbfgs,
        cfg.loss.truncation_threshold,
    )?;
    let truth = eval_fn(|x| (problem.exact)(x), test);
    finish(cfg, row, out.model, out.report, out.truncation, test, truth.view(), started)
}

fn target_kind(kind: ExperimentKind) -> TargetKind {
    match kind {
        ExperimentKind::LegendreRecovery => TargetKind::Legendre10,
        ExperimentKind::Nonsmooth => TargetKind::X2Sin1y,
        _ => TargetKind::HighdimSineprod,
    }
}

fn select_rows(a: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    a.select(ndarray::Axis(0), idx)
}

/// Runs every trial (or fold), renders the CSV report and writes it to
/// `cfg.out` when set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.kind == ExperimentKind::BasisInfo {
        return Err(HarnessError::Config("basis-info is not a training experiment".into()));
    }
    let mut trials = Vec::new();
    match cfg.kind {
        ExperimentKind::CsvRegression => {
            let path = cfg.data.as_ref().expect("validated");
            let data = load_csv_dataset(path, &cfg.target_column)?;
            let folds = kfold_split(data.targets.len(), cfg.folds, derive_seed(cfg.seed, 0, STREAM_FOLDS))?;
            for (f, (train, test)) in folds.iter().enumerate() {
                log::info!("fold {f}: {} train / {} test", train.len(), test.len());
                let xt = select_rows(&data.points, train);
                let yt = data.targets.select(ndarray::Axis(0), train);
                let xs = select_rows(&data.points, test);
                let ys = data.targets.select(ndarray::Axis(0), test);
                let seed = derive_seed(cfg.seed, f as u64, STREAM_POINTS);
                trials.push(fit_regression(cfg, f.to_string(), xt.view(), yt.view(), xs.view(), ys.view(), None, seed)?);
            }
        }
        ExperimentKind::PdePoisson | ExperimentKind::PdeAllenCahn => {
            let test = test_points(2, cfg.test_grid, cfg.test_random, derive_seed(cfg.seed, 0, STREAM_TEST));
            for t in 0..cfg.trials {
                log::info!("{} trial {t}", cfg.kind);
                trials.push(fit_pde(cfg, t, test.view())?);
            }
        }
        _ => {
            let kind = target_kind(cfg.kind);
            let f = move |x: &[f64]| synthetic_target(kind, x);
            let test = test_points(cfg.dim, cfg.test_grid, cfg.test_random, derive_seed(cfg.seed, 0, STREAM_TEST));
            let truth = eval_fn(f, test.view());
            for t in 0..cfg.trials {
                log::info!("{} trial {t}", cfg.kind);
                let seed = derive_seed(cfg.seed, t as u64, STREAM_POINTS);
                let pts = sample_points(cfg.n_points, cfg.dim, cfg.sampling, seed)?;
                let y = eval_fn(f, pts.view());
                trials.push(fit_regression(
                    cfg,
                    t.to_string(),
                    pts.view(),
                    y.view(),
                    test.view(),
                    truth.view(),
                    Some(&f),
                    seed,
                )?);
            }
        }
    }
    let rows: Vec<ReportRow> = trials.iter().map(|t| t.row.clone()).collect();
    let csv = render_csv(cfg, &rows);
    if let Some(path) = &cfg.out {
        write_csv(path, &csv)?;
    }
    Ok(ExperimentOutput {
        config: cfg.clone(),
        trials,
        csv,
    })
}

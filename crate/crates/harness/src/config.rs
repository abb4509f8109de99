use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pann_core::model::LossConfig;
use pann_core::network::Activation;
use pann_core::optim::{AdamConfig, LbfgsConfig};
use pann_core::polybasis::{degree_schedule, BasisKind};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};
use crate::sampling::Sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    LegendreRecovery,
    Nonsmooth,
    Highdim,
    CsvRegression,
    PdePoisson,
    PdeAllenCahn,
    BasisInfo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LegendreRecovery => "legendre-recovery",
            ExperimentKind::Nonsmooth => "nonsmooth",
            ExperimentKind::Highdim => "highdim",
            ExperimentKind::CsvRegression => "csv-regression",
            ExperimentKind::PdePoisson => "pde-poisson",
            ExperimentKind::PdeAllenCahn => "pde-allencahn",
            ExperimentKind::BasisInfo => "basis-info",
        }
    }

    pub fn is_pde(self) -> bool {
        matches!(self, ExperimentKind::PdePoisson | ExperimentKind::PdeAllenCahn)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "legendre-recovery" | "legendre" => ExperimentKind::LegendreRecovery,
            "nonsmooth" => ExperimentKind::Nonsmooth,
            "highdim" => ExperimentKind::Highdim,
            "csv-regression" | "csv" => ExperimentKind::CsvRegression,
            "pde-poisson" | "poisson" => ExperimentKind::PdePoisson,
            "pde-allencahn" | "allen-cahn" | "allencahn" => ExperimentKind::PdeAllenCahn,
            "basis-info" => ExperimentKind::BasisInfo,
            _ => return Err(format!("unknown experiment `{s}`")),
        })
    }
}

/// Which sub-models are trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Network plus polynomial layer.
    Pann,
    /// Network only (a plain PINN in PDE mode).
    Dnn,
    /// Polynomial layer only.
    Pl,
    /// Gauss-Legendre least-squares projection (d = 2 synthetic targets).
    L2Projection,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Pann => "pann",
            ModelKind::Dnn => "dnn",
            ModelKind::Pl => "pl",
            ModelKind::L2Projection => "l2",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pann" => ModelKind::Pann,
            "dnn" | "pinn" => ModelKind::Dnn,
            "pl" => ModelKind::Pl,
            "l2" | "l2-projection" => ModelKind::L2Projection,
            _ => return Err(format!("unknown model `{s}` (expected pann, dnn, pl or l2)")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub c: f64,
    pub offset: u32,
    pub doubled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelKind,
    pub n_points: usize,
    pub dim: usize,
    pub sampling: Sampling,
    pub schedule: ScheduleParams,
    /// Overrides the schedule when set.
    pub degree: Option<u32>,
    pub basis_kind: BasisKind,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
    pub seed: u64,
    pub trials: usize,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub target_column: String,
    pub folds: usize,
    pub boundary_per_edge: usize,
    pub random_boundary: bool,
    pub test_grid: usize,
    pub test_random: usize,
    /// Gauss-Legendre points per dimension for the projection baseline;
    /// `ceil(sqrt(N))` when unset.
    pub quad_points: Option<usize>,
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Settings of the corresponding study, before any user overrides.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            kind,
            model: ModelKind::Pann,
            n_points: 4096,
            dim: 2,
            sampling: Sampling::UniformRandom,
            schedule: ScheduleParams {
                c: 0.001,
                offset: 8,
                doubled: true,
            },
            degree: None,
            basis_kind: BasisKind::TotalDegree,
            hidden: vec![100, 100, 100],
            activation: Activation::Tanh,
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            lbfgs: LbfgsConfig::default(),
            seed: 0,
            trials: 5,
            out: None,
            data: None,
            target_column: "MedHouseVal".into(),
            folds: 4,
            boundary_per_edge: 100,
            random_boundary: false,
            test_grid: 256,
            test_random: 20_000,
            quad_points: None,
            record_timing: true,
        };
        match kind {
            ExperimentKind::Nonsmooth => cfg.schedule.doubled = false,
            ExperimentKind::Highdim => {
                cfg.degree = Some(8);
                cfg.n_points = 1536;
            }
            ExperimentKind::CsvRegression => {
                cfg.degree = Some(4);
                cfg.activation = Activation::Relu;
                cfg.trials = 1;
            }
            ExperimentKind::PdePoisson | ExperimentKind::PdeAllenCahn => {
                cfg.schedule.c = 0.003;
                cfg.n_points = if kind == ExperimentKind::PdePoisson { 256 } else { 1024 };
                cfg.sampling = Sampling::Equispaced;
            }
            _ => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_points == 0 {
            return bad("N must be positive".into());
        }
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if self.degree.is_none() && !(self.schedule.c > 0.0) {
            return bad(format!("schedule constant c must be positive, got {}", self.schedule.c));
        }
        if matches!(self.model, ModelKind::Pann | ModelKind::Dnn) && self.hidden.is_empty() {
            return bad("network models need at least one hidden layer".into());
        }
        if self.kind.is_pde() && self.dim != 2 {
            return bad("PDE experiments are posed on [-1,1]^2 (dim must be 2)".into());
        }
        if matches!(self.kind, ExperimentKind::LegendreRecovery | ExperimentKind::Nonsmooth) && self.dim != 2 {
            return bad(format!("{} is a two-dimensional target", self.kind));
        }
        if self.kind == ExperimentKind::CsvRegression {
            match &self.data {
                None => return bad("csv-regression needs --data <file>".into()),
                Some(p) if !p.exists() => return bad(format!("data file {} does not exist", p.display())),
                _ => {}
            }
            if self.folds < 2 {
                return bad("folds must be at least 2".into());
            }
        }
        if self.model == ModelKind::L2Projection && (self.kind.is_pde() || self.kind == ExperimentKind::CsvRegression) {
            return bad("the L2 projection baseline needs an analytic target".into());
        }
        if self.kind.is_pde() && self.boundary_per_edge == 0 {
            return bad("PDE experiments need boundary points".into());
        }
        if self.test_grid < 2 || self.test_random == 0 {
            return bad("test set must be non-empty".into());
        }
        self.loss.validate()?;
        self.adam.validate()?;
        self.lbfgs.validate()?;
        Ok(())
    }

    /// Total degree actually used for `n` training points.
    pub fn degree_for(&self, n: usize) -> u32 {
        self.degree.unwrap_or_else(|| {
            degree_schedule(n, self.schedule.c, self.schedule.offset, self.schedule.doubled)
        })
    }

    pub fn uses_network(&self) -> bool {
        matches!(self.model, ModelKind::Pann | ModelKind::Dnn)
    }

    pub fn uses_polynomials(&self) -> bool {
        !matches!(self.model, ModelKind::Dnn)
    }

    /// Preconditioning needs polynomial rows; it is off for network-only runs.
    pub fn effective_preconditioning(&self) -> bool {
        self.loss.preconditioned && self.uses_polynomials()
    }

    /// Every setting as `(key, value)`, in a fixed order. Keys mirror the CLI
    /// flag names.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        vec![
            ("experiment", self.kind.to_string()),
            ("model", self.model.to_string()),
            ("n", self.n_points.to_string()),
            ("dim", self.dim.to_string()),
            ("sampling", self.sampling.to_string()),
            ("c", self.schedule.c.to_string()),
            ("offset", self.schedule.offset.to_string()),
            ("doubled", self.schedule.doubled.to_string()),
            ("degree", opt(self.degree.map(|d| d.to_string()))),
            ("basis", self.basis_kind.name().to_string()),
            ("hidden", self.hidden.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")),
            ("activation", self.activation.name()),
            ("constraint", self.loss.constraint.to_string()),
            ("lambda-r", self.loss.lambda_r.to_string()),
            ("lambda-c", self.loss.lambda_c.to_string()),
            ("lambda-pde", self.loss.lambda_pde.to_string()),
            ("preconditioned", self.loss.preconditioned.to_string()),
            ("truncation", self.loss.truncation_threshold.to_string()),
            ("l1-scope", self.loss.l1_scope.to_string()),
            ("adam-iters", self.adam.iterations.to_string()),
            ("adam-lr", self.adam.lr0.to_string()),
            ("cosine", self.adam.cosine.to_string()),
            ("lbfgs-iters", self.lbfgs.iterations.to_string()),
            ("lbfgs-lr", self.lbfgs.lr0.to_string()),
            ("lbfgs-history", self.lbfgs.history_size.to_string()),
            (
                "lbfgs-line-search",
                format!(
                    "strong-wolfe(c1={},c2={},max={})",
                    self.lbfgs.c1, self.lbfgs.c2, self.lbfgs.max_line_search
                ),
            ),
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
            ("data", opt(self.data.as_ref().map(|p| p.display().to_string()))),
            ("target-column", self.target_column.clone()),
            ("folds", self.folds.to_string()),
            ("boundary-per-edge", self.boundary_per_edge.to_string()),
            ("random-boundary", self.random_boundary.to_string()),
            ("test-grid", self.test_grid.to_string()),
            ("test-random", self.test_random.to_string()),
            ("quad-points", opt(self.quad_points.map(|q| q.to_string()))),
            ("record-timing", self.record_timing.to_string()),
        ]
    }

    /// Short SHA-256 digest of [`entries`](Self::entries).
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Turns `key = value` lines into `--key value` arguments. Blank lines and
/// `#` comments are skipped.
pub fn config_file_args(text: &str) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("config line {}: expected `key = value`, got `{raw}`", i + 1))
        })?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() || k == "config" {
            return Err(HarnessError::Config(format!("config line {}: invalid key", i + 1)));
        }
        args.push(format!("--{k}"));
        args.push(v.trim().to_string());
    }
    Ok(args)
}

//! Command-line surface of the `pann` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pann_core::model::{ConstraintKind, L1Scope};
use pann_core::network::Activation;
use pann_core::polybasis::BasisKind;

use crate::config::{config_file_args, ExperimentConfig, ExperimentKind, ModelKind};
use crate::error::{HarnessError, Result};
use crate::sampling::Sampling;

#[derive(Debug, Parser)]
#[command(name = "pann", version, about = "Polynomial-augmented neural network experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regression: legendre-recovery, nonsmooth, highdim or csv-regression.
    Regress(Flags),
    /// Physics-informed solve: pde-poisson or pde-allencahn.
    Pde(Flags),
    /// Print the degree-schedule tables and basis sizes.
    BasisInfo,
    /// Run the fast invariant suites.
    Check,
}

/// Hidden-layer widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Widths(pub Vec<usize>);

fn parse_hidden(s: &str) -> std::result::Result<Widths, String> {
    let s = s.trim();
    if s.is_empty() || s == "none" || s == "0" {
        return Ok(Widths(Vec::new()));
    }
    s.split(',')
        .map(|w| w.trim().parse::<usize>().map_err(|e| format!("bad width `{w}`: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(Widths)
}

/// A number or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrAuto<T>(pub Option<T>);

fn parse_or_auto<T: std::str::FromStr>(s: &str) -> std::result::Result<OrAuto<T>, String>
where
    T::Err: std::fmt::Display,
{
    if s == "auto" {
        return Ok(OrAuto(None));
    }
    s.parse().map(|v| OrAuto(Some(v))).map_err(|e| format!("{e}"))
}

/// Every flag is optional; unset flags keep the experiment's defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Key-value file whose keys mirror the flag names; flags given on the
    /// command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub experiment: Option<ExperimentKind>,
    /// pann, dnn (network only), pl (polynomials only) or l2 (projection).
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Training (collocation) points.
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub sampling: Option<Sampling>,
    /// Degree-schedule constant.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub offset: Option<u32>,
    #[arg(long)]
    pub doubled: Option<bool>,
    /// Fixed total degree (`auto` uses the schedule).
    #[arg(long, value_parser = parse_or_auto::<u32>)]
    pub degree: Option<OrAuto<u32>>,
    #[arg(long)]
    pub basis: Option<BasisKind>,
    /// Hidden widths, comma separated (`none` for no network).
    #[arg(long, value_parser = parse_hidden)]
    pub hidden: Option<Widths>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub constraint: Option<ConstraintKind>,
    #[arg(long = "lambda-r")]
    pub lambda_r: Option<f64>,
    #[arg(long = "lambda-c")]
    pub lambda_c: Option<f64>,
    #[arg(long = "lambda-pde")]
    pub lambda_pde: Option<f64>,
    #[arg(long)]
    pub preconditioned: Option<bool>,
    /// Truncation threshold t.
    #[arg(long)]
    pub truncation: Option<f64>,
    #[arg(long = "l1-scope")]
    pub l1_scope: Option<L1Scope>,
    #[arg(long = "adam-iters")]
    pub adam_iters: Option<usize>,
    #[arg(long = "adam-lr")]
    pub adam_lr: Option<f64>,
    #[arg(long)]
    pub cosine: Option<bool>,
    #[arg(long = "lbfgs-iters")]
    pub lbfgs_iters: Option<usize>,
    #[arg(long = "lbfgs-lr")]
    pub lbfgs_lr: Option<f64>,
    #[arg(long = "lbfgs-history")]
    pub lbfgs_history: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// CSV report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input CSV for csv-regression.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long = "target-column")]
    pub target_column: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long = "boundary-per-edge")]
    pub boundary_per_edge: Option<usize>,
    #[arg(long = "random-boundary")]
    pub random_boundary: Option<bool>,
    /// Test grid points per dimension (d <= 2).
    #[arg(long = "test-grid")]
    pub test_grid: Option<usize>,
    /// Random test points (d > 2).
    #[arg(long = "test-random")]
    pub test_random: Option<usize>,
    #[arg(long = "quad-points", value_parser = parse_or_auto::<usize>)]
    pub quad_points: Option<OrAuto<usize>>,
    #[arg(long = "record-timing")]
    pub record_timing: Option<bool>,
}

/// Parses the contents of a config file as if its lines were flags.
fn file_flags(text: &str) -> Result<Flags> {
    #[derive(Parser)]
    #[command(no_binary_name = true)]
    struct FileFlags {
        #[command(flatten)]
        flags: Flags,
    }
    let args = config_file_args(text)?;
    FileFlags::try_parse_from(args)
        .map(|f| f.flags)
        .map_err(|e| HarnessError::Config(format!("config file: {}", e.render().to_string().trim())))
}

impl Flags {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = &self.$flag {
                    cfg.$($field).+ = v.clone();
                }
            };
            ($flag:ident .0 => $($field:ident).+) => {
                if let Some(v) = &self.$flag {
                    cfg.$($field).+ = v.0.clone();
                }
            };
        }
        set!(model => model);
        set!(n => n_points);
        set!(dim => dim);
        set!(sampling => sampling);
        set!(c => schedule.c);
        set!(offset => schedule.offset);
        set!(doubled => schedule.doubled);
        set!(degree .0 => degree);
        set!(basis => basis_kind);
        set!(hidden .0 => hidden);
        set!(activation => activation);
        set!(constraint => loss.constraint);
        set!(lambda_r => loss.lambda_r);
        set!(lambda_c => loss.lambda_c);
        set!(lambda_pde => loss.lambda_pde);
        set!(preconditioned => loss.preconditioned);
        set!(truncation => loss.truncation_threshold);
        set!(l1_scope => loss.l1_scope);
        set!(adam_iters => adam.iterations);
        set!(adam_lr => adam.lr0);
        set!(cosine => adam.cosine);
        set!(lbfgs_iters => lbfgs.iterations);
        set!(lbfgs_lr => lbfgs.lr0);
        set!(lbfgs_history => lbfgs.history_size);
        set!(seed => seed);
        set!(trials => trials);
        set!(target_column => target_column);
        set!(folds => folds);
        set!(boundary_per_edge => boundary_per_edge);
        set!(random_boundary => random_boundary);
        set!(test_grid => test_grid);
        set!(test_random => test_random);
        set!(quad_points .0 => quad_points);
        set!(record_timing => record_timing);
        if let Some(p) = &self.out {
            cfg.out = Some(p.clone());
        }
        if let Some(p) = &self.data {
            cfg.data = Some(p.clone());
        }
    }

    /// Builds the experiment configuration: defaults of the chosen
    /// experiment, then the config file, then command-line flags.
    pub fn resolve(&self, default_kind: ExperimentKind, pde: bool) -> Result<ExperimentConfig> {
        let from_file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
                Some(file_flags(&text)?)
            }
            None => None,
        };
        let kind = self
            .experiment
            .or(from_file.as_ref().and_then(|f| f.experiment))
            .unwrap_or(default_kind);
        if kind.is_pde() != pde || kind == ExperimentKind::BasisInfo {
            let sub = if pde { "pde" } else { "regress" };
            return Err(HarnessError::Config(format!("experiment {kind} cannot run under `{sub}`")));
        }
        let mut cfg = ExperimentConfig::defaults(kind);
        if let Some(f) = &from_file {
            f.apply(&mut cfg);
        }
        self.apply(&mut cfg);
        if cfg.hidden.is_empty() && cfg.model == ModelKind::Pann {
            cfg.model = ModelKind::Pl;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("pann").chain(args.iter().copied())).unwrap().command
    }

    #[test]
    fn flags_override_defaults() {
        let Command::Regress(f) = parse(&["regress", "--experiment", "nonsmooth", "--n", "64", "--hidden", "5,6"]) else {
            panic!()
        };
        let cfg = f.resolve(ExperimentKind::LegendreRecovery, false).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Nonsmooth);
        assert_eq!(cfg.n_points, 64);
        assert_eq!(cfg.hidden, vec![5, 6]);
        assert!(!cfg.schedule.doubled);
    }

    #[test]
    fn config_file_then_flags() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "n = 128\nseed = 9\nactivation = relu\ndegree = 5").unwrap();
        let path = file.path().to_str().unwrap().to_string();
        let Command::Regress(f) = parse(&["regress", "--config", &path, "--seed", "3"]) else {
            panic!()
        };
        let cfg = f.resolve(ExperimentKind::LegendreRecovery, false).unwrap();
        assert_eq!(cfg.n_points, 128);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.activation, Activation::Relu);
        assert_eq!(cfg.degree, Some(5));
    }

    #[test]
    fn wrong_subcommand_is_config_error() {
        let Command::Pde(f) = parse(&["pde", "--experiment", "nonsmooth"]) else { panic!() };
        let err = f.resolve(ExperimentKind::PdePoisson, true).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn bad_config_key_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "no-such-flag = 1").unwrap();
        let path = file.path().to_str().unwrap().to_string();
        let Command::Regress(f) = parse(&["regress", "--config", &path]) else { panic!() };
        assert!(matches!(f.resolve(ExperimentKind::LegendreRecovery, false), Err(HarnessError::Config(_))));
    }

    #[test]
    fn entries_round_trip_through_config_file() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Nonsmooth);
        cfg.n_points = 77;
        cfg.loss.lambda_r = 3e-7;
        let skip = ["experiment", "lbfgs-line-search", "data"];
        let text: String = cfg
            .entries()
            .into_iter()
            .filter(|(k, _)| !skip.contains(k))
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let flags = file_flags(&text).unwrap();
        let mut back = ExperimentConfig::defaults(ExperimentKind::Nonsmooth);
        flags.apply(&mut back);
        assert_eq!(back, cfg);
    }
}

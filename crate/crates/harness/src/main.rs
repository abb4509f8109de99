use std::process::ExitCode;

use clap::Parser;
use pann_harness::basis_info::render_basis_info;
use pann_harness::checks;
use pann_harness::cli::{Cli, Command};
use pann_harness::{run_experiment, ExperimentKind, HarnessError, Result};

fn run(cli: Cli) -> Result<()> {
    let (flags, default_kind, pde) = match cli.command {
        Command::BasisInfo => {
            print!("{}", render_basis_info());
            return Ok(());
        }
        Command::Check => {
            let results = checks::run_all();
            for r in &results {
                println!("{}", r.line());
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            return if failed == 0 { Ok(()) } else { Err(HarnessError::ChecksFailed(failed)) };
        }
        Command::Regress(f) => (f, ExperimentKind::LegendreRecovery, false),
        Command::Pde(f) => (f, ExperimentKind::PdePoisson, true),
    };
    let cfg = flags.resolve(default_kind, pde)?;
    let output = run_experiment(&cfg)?;
    if cfg.out.is_none() {
        print!("{}", output.csv);
    } else {
        for row in output.rows() {
            eprintln!("trial {}: rel_l2 = {:.3e}", row.trial, row.rel_l2);
        }
    }
    if output.all_diverged() {
        return Err(HarnessError::AllDiverged);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use augment::config::{ExperimentConfig, ExperimentKind};
use augment::runner::{build_checked, run_experiment, RunOptions};
use augment::verify::self_check;
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "augment", version, about = "Data augmentation and Swendsen-Wang experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; built-in defaults are used without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run only this seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Suppress the per-estimate report on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Run the oracle self-check before the experiment.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Morris hierarchical normal model under data augmentation.
    Morris,
    /// Collinear t-regression: augmented kernel against component-wise Metropolis.
    Treg,
    /// 2-D Ising model: Metropolis, heat-bath and Swendsen-Wang.
    Ising,
    /// 2-D Potts model: Metropolis, heat-bath and Swendsen-Wang.
    Potts,
    /// Laplace, Gauss-Hermite, importance sampling, SIR and DA on the Morris model.
    CompareBaselines,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Morris => ExperimentKind::Morris,
            Command::Treg => ExperimentKind::Treg,
            Command::Ising => ExperimentKind::Ising,
            Command::Potts => ExperimentKind::Potts,
            Command::CompareBaselines => ExperimentKind::CompareBaselines,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let (cfg, src) = match &cli.config {
        Some(path) => {
            let cfg = match ExperimentConfig::load(path) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            (cfg, std::fs::read_to_string(path).ok().map(|s| (s, path.clone())))
        }
        None => (ExperimentConfig::default_for(kind), None),
    };
    if cfg.experiment != kind {
        eprintln!(
            "error: config describes a `{}` experiment, not `{}`",
            cfg.experiment.name(),
            kind.name()
        );
        return ExitCode::from(EXIT_CONFIG);
    }
    let model = match build_checked(&cfg, src.as_ref().map(|(s, p)| (s.as_str(), p.as_path()))) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cli.verify {
        let checks = self_check(&cfg, &model);
        for c in &checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        if checks.iter().any(|c| !c.passed) {
            return ExitCode::from(EXIT_VERIFY);
        }
    }
    let opts = RunOptions {
        out: cli.out,
        seed_override: cli.seed_override,
        quiet: cli.quiet,
    };
    match run_experiment(&cfg, &model, &opts) {
        Ok(report) => {
            if !cli.quiet {
                for p in &report.written {
                    eprintln!("wrote {}", p.display());
                }
            }
            if report.failures() > 0 {
                ExitCode::from(EXIT_RUNTIME)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

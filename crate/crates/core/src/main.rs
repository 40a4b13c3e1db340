use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nlfmg::harness::{emit_report, run_experiment, ExperimentConfig, OutputFormat, Study};
use nlfmg::Error;

#[derive(Parser)]
#[command(name = "nlfmg", about = "Full multigrid solver for nonlinear eigenvalue problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Convergence,
    Contraction,
    WorkScaling,
    SingleSolve,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Solve {
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        study: Option<StudyArg>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        /// Report path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let Command::Solve {
        config,
        study,
        levels,
        zeta,
        dim,
        out,
        format,
        seed,
    } = Cli::parse().command;

    let mut cfg = match ExperimentConfig::from_path(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = study {
        cfg.study = match s {
            StudyArg::Convergence => Study::Convergence,
            StudyArg::Contraction => Study::Contraction,
            StudyArg::WorkScaling => Study::WorkScaling,
            StudyArg::SingleSolve => Study::SingleSolve,
        };
    }
    if let Some(n) = levels {
        cfg.mesh.n_levels = n;
    }
    if let Some(z) = zeta {
        cfg.problem.zeta = z;
    }
    if let Some(d) = dim {
        cfg.problem.dim = d;
    }
    if let Some(p) = out {
        cfg.output.path = Some(p);
    }
    if let Some(f) = format {
        cfg.output.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e @ (Error::Config { .. } | Error::Io { .. })) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("solver failure: {e}");
            return ExitCode::from(3);
        }
    };
    match &cfg.output.path {
        Some(path) => {
            if let Err(e) = emit_report(&report, cfg.output.format, path) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        }
        None => print!("{}", report.render(cfg.output.format)),
    }
    ExitCode::SUCCESS
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mhd_core::driver::{run_study, BlockSolvers, CaseKind, StudyConfig, StudyKind, TableFormat};
use mhd_core::precon::InnerSolver;

/// Mixed finite element solver for steady MHD kinematics.
#[derive(Parser)]
#[command(name = "mhdk", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Manufactured-solution convergence study.
    Convergence(Opts),
    /// Preconditioner benchmark over levels × Rm.
    Benchmark(Opts),
    /// One solve on the finest configured level.
    Solve {
        #[command(flatten)]
        opts: Opts,
        #[arg(long, value_parser = parse::<CaseKind>)]
        case: Option<CaseKind>,
    },
}

#[derive(Args)]
struct Opts {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    rm: Option<Vec<f64>>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Relative FGMRES tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Relative tolerance of the inner solves.
    #[arg(long)]
    inner_tol: Option<f64>,
    /// Inner solver for every block.
    #[arg(long, value_parser = parse::<InnerSolver>)]
    inner: Option<InnerSolver>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse::<TableFormat>)]
    format: Option<TableFormat>,
    /// Directory for Matrix Market dumps of each assembled system.
    #[arg(long)]
    dump_system: Option<PathBuf>,
}

fn parse<T: std::str::FromStr<Err = mhd_core::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: mhd_core::Error| e.to_string())
}

impl Opts {
    fn into_config(self, study: StudyKind) -> mhd_core::Result<StudyConfig> {
        let mut cfg = match &self.config {
            Some(path) => StudyConfig::from_file(path)?,
            None => StudyConfig::default(),
        };
        cfg.study = study;
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.$field = v; })* };
        }
        set!(levels, sigma, tol, inner_tol, format);
        if let Some(rm) = self.rm {
            cfg.rm = Some(rm);
        }
        if let Some(kind) = self.inner {
            cfg.inner = BlockSolvers::uniform(kind);
        }
        cfg.out = self.out.or(cfg.out);
        cfg.dump_system = self.dump_system.or(cfg.dump_system);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> mhd_core::Result<bool> {
    let cfg = match cli.verb {
        Verb::Convergence(o) => o.into_config(StudyKind::Convergence)?,
        Verb::Benchmark(o) => o.into_config(StudyKind::Benchmark)?,
        Verb::Solve { opts, case } => {
            let mut cfg = opts.into_config(StudyKind::SingleSolve)?;
            cfg.case = case.unwrap_or(cfg.case);
            cfg
        }
    };
    let study = run_study(&cfg)?;
    print!("{}", study.emit(&cfg)?);
    for r in &study.reports {
        if let Some(why) = &r.failure {
            eprintln!("level {} rm {}: {why}", r.level, r.rm);
        }
    }
    Ok(study.all_converged())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

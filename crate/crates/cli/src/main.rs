use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use burgers_rb::model::BasisMethod;
use burgers_rb::full::FullSolver;
use burgers_rb_cli::*;

#[derive(Parser)]
#[command(name = "burgers-rb", version, about = "Certified reduced-basis solver for the 1D viscous Burgers equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order solve of the configured point: trajectory CSV, prints the boundary error.
    FullSolve(Common),
    /// Build a reduced model (basis, tensors, SCM) and write it as JSON.
    OfflineBuild(Common),
    /// Certified reduced solve of the configured point.
    OnlineSolve {
        #[command(flatten)]
        common: Common,
        /// Also write per-step diagnostics with the true error (runs a full solve).
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Bound and timing sweep over basis sizes.
    Benchmark(Common),
    /// Exact and SCM stability constants along the configured point's trajectory.
    ScmReport(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Pod,
    Greedy,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    basis: Option<Basis>,
    #[arg(long)]
    enrich: bool,
    #[arg(long = "N")]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<FileConfig> {
        let mut cfg = FileConfig::load(&self.config)?;
        Overrides {
            basis: self.basis.map(|b| match b {
                Basis::Pod => BasisMethod::Pod,
                Basis::Greedy => BasisMethod::Greedy,
            }),
            enrich: self.enrich,
            size: self.size,
            seed: self.seed,
        }
        .apply(&mut cfg);
        cfg.problem_config().validate()?;
        Ok(cfg)
    }

    fn model(&self, cfg: &FileConfig) -> Result<burgers_rb::model::ReducedModel> {
        match &self.model {
            Some(p) => load_model(p),
            None => offline_build(cfg),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::FullSolve(c) => {
            let cfg = c.config()?;
            let (traj, eb) = full_solve(&cfg)?;
            write_full_csv(&c.out, &traj, cfg.problem.dt)?;
            println!("eps_b = {eb:e}");
        }
        Command::OfflineBuild(c) => {
            let cfg = c.config()?;
            let model = offline_build(&cfg)?;
            save_model(&model, &c.out)?;
            let scm = model.online.scm.as_ref().map_or(0, |s| s.constraints.len());
            println!("basis size {}, {} SCM constraints", model.basis.size(), scm);
        }
        Command::OnlineSolve { common: c, diagnostics } => {
            let cfg = c.config()?;
            let model = c.model(&cfg)?;
            let cert = online_solve(&cfg, &model)?;
            write_online_csv(&c.out, &cert, cfg.problem.dt)?;
            if let Some(path) = diagnostics {
                let mu = cfg.point()?;
                let full = FullSolver::new(&model.config)?.solve(&mu)?;
                write_certification_csv(&path, &certification_rows(&model, &mu, &cert, &full)?)?;
            }
            let worst = cert.relative_bounds().into_iter().fold(0.0, f64::max);
            println!("max relative bound {worst:e}");
        }
        Command::Benchmark(c) => {
            let cfg = c.config()?;
            let report = run_benchmark(&cfg)?;
            write_benchmark_csv(&c.out, &report)?;
            for r in &report.rows {
                println!("N={:2} max {:.3e} mean {:.3e}", r.size, r.max_rel_bound, r.mean_rel_bound);
            }
        }
        Command::ScmReport(c) => {
            let cfg = c.config()?;
            let model = c.model(&cfg)?;
            check_compatible(&model, &cfg.problem_config())?;
            let mu = cfg.point()?;
            write_scm_csv(&c.out, &scm_rows(&model, &mu)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()).context("burgers-rb failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

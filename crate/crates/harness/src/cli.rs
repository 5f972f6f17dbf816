use crate::bench::{cmd_bench, BenchConfig};
use crate::config::{Overrides, RunConfig, StepSize};
use crate::dataset::write_json;
use crate::mean::cmd_mean;
use crate::verify::{run_suite, VerifyOptions};
use crate::{Failure, EXIT_OK, EXIT_SOLVER, EXIT_USAGE};
use clap::{Parser, Subcommand, ValueEnum};
use geodescent::stepsize::RuleKind;
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "geodescent", version, about = "Riemannian centers of mass by gradient descent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Armijo,
    Constant,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a weighted L^p center of mass.
    Mean {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
        #[arg(long)]
        beta: Option<f64>,
        /// Constant step size, or `auto` for 1 / lambda.
        #[arg(long)]
        t0: Option<StepSize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the one-step distance estimates on random hyperbolic instances.
    Verify {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark step rules on synthetic fixtures.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_USAGE, e.to_string())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Mean { config, p, rule, beta, t0, seed, out } => {
            let overrides = Overrides {
                p,
                rule: rule.map(|r| match r {
                    RuleArg::Armijo => RuleKind::Armijo,
                    RuleArg::Constant => RuleKind::Constant,
                }),
                beta,
                t0,
                seed,
                out,
            };
            let cfg = RunConfig::load(&config).and_then(|c| c.with_overrides(&overrides)).map_err(usage)?;
            let done = cmd_mean(&cfg)?;
            let r = &done.result;
            println!("status: {:?} after {} iterations", r.trace.status, r.trace.iterations());
            println!("center: {:?}", r.center.coords());
            if let Some(t0) = done.t0 {
                println!("t0: {t0}");
            }
            if let Some(fit) = &r.certificates.rate_fit {
                println!("rate: {} (R^2 = {})", fit.rho, fit.r_squared);
            }
            println!("outputs: {}", done.out_dir.display());
            Ok(())
        }
        Command::Verify { samples, seed, out } => {
            let report = run_suite(&VerifyOptions { samples, seed, ..VerifyOptions::default() });
            for c in &report.checks {
                let verdict = if c.passed() { "pass" } else { "FAIL" };
                println!(
                    "{verdict} {:<28} samples {:>6}  violations {:>4}  worst margin {:e}",
                    c.name, c.samples, c.violations, c.worst_margin
                );
            }
            if let Some(path) = out {
                write_json(&path, &report).map_err(usage)?;
            }
            if report.passed {
                Ok(())
            } else {
                Err(Failure::new(EXIT_SOLVER, "inequality violations found"))
            }
        }
        Command::Bench { config } => {
            let cfg = BenchConfig::load(&config).map_err(usage)?;
            let csv = cmd_bench(&cfg)?;
            match &cfg.out {
                Some(path) => println!("wrote {}", path.display()),
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

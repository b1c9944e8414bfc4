//! `lrtd`: multi-slice low-rank tensor decomposition of aligned volume stacks.

mod commands;
mod plot;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrtd::{Lambda, TpcpConfig, TransformKind};

#[derive(Parser, Debug)]
#[command(name = "lrtd", version, about = "Low-rank plus sparse decomposition of aligned 3-D volumes")]
struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split volumes into low-rank and sparse parts with the multi-slice scheme.
    Decompose(commands::DecomposeArgs),
    /// Factor one volume and report tubal rank, average rank and nuclear norm.
    Tsvd(commands::TsvdArgs),
    /// Compare DCT, FFT and DWT4 on the same inputs.
    BenchTransforms(commands::BenchArgs),
    /// Masked sigma and entropy of the low-rank output for several segment lengths.
    SweepK(commands::SweepArgs),
    /// Write a synthetic phantom stack with ground truth and anomaly masks.
    Phantom(commands::PhantomArgs),
    /// Segmentation overlap or masked image statistics.
    Metrics(commands::MetricsArgs),
}

/// Solver options shared by the decomposition commands.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Sparse weight: `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    lambda: Lambda,
    #[arg(long, default_value_t = 1e-3)]
    mu0: f64,
    #[arg(long, default_value_t = 1e10)]
    mu_max: f64,
    #[arg(long, default_value_t = 1.1)]
    rho: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

impl SolverArgs {
    pub fn config(&self, transform: TransformKind) -> TpcpConfig {
        TpcpConfig {
            lambda: self.lambda,
            mu0: self.mu0,
            mu_max: self.mu_max,
            rho: self.rho,
            eps: self.eps,
            max_iters: self.max_iters,
            transform,
        }
    }
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    NotConverged,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli.workers;
    let result = lrtd::with_workers(workers, move || match cli.command {
        Command::Decompose(a) => commands::decompose(&a, workers),
        Command::Tsvd(a) => commands::tsvd(&a),
        Command::BenchTransforms(a) => commands::bench_transforms(&a, workers),
        Command::SweepK(a) => commands::sweep_k(&a, workers),
        Command::Phantom(a) => commands::phantom(&a),
        Command::Metrics(a) => commands::metrics(&a),
    });
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => {
            eprintln!("warning: at least one segment did not converge; outputs were written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

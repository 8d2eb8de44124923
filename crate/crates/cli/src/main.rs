//! `orlicz-lab`: reproducible experiments on N-functions, Orlicz norms,
//! Orlicz-Sobolev embeddings and elliptic problems with L¹ or measure data.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "orlicz-lab", version, about = "Numerical laboratory for Orlicz-space analysis")]
struct Cli {
    /// Directory receiving JSON, CSV and SVG output.
    #[arg(long, global = true, env = "ORLICZ_LAB_OUT", default_value = "orlicz-lab-out")]
    out: PathBuf,
    /// Seed for every randomised check.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an N-function, its conjugate and its diagnostics.
    Nfun(NfunArgs),
    /// Luxemburg and Marcinkiewicz norms of a sampled field.
    Norm(NormArgs),
    /// Growth class, embedding functions and regularity targets.
    Embed(EmbedArgs),
    /// Run a problem spec through the full approximation pipeline.
    Solve(SolveArgs),
    /// Run an acceptance suite.
    Verify(VerifyArgs),
}

/// An N-function given either as JSON (`--spec`, inline or `@file`) or by kind
/// and parameters.
#[derive(Debug, Clone, Args, Serialize)]
pub struct NfunSource {
    /// JSON `{"kind": ..., "params": {...}}`, or `@path` to a file holding it.
    #[arg(long, conflicts_with = "kind")]
    pub spec: Option<String>,
    /// power, zygmund, llogl, exp_conjugate, t_exp_t or pathological.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub coef: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct NfunArgs {
    #[command(flatten)]
    pub source: NfunSource,
    /// Tabulate the conjugate function.
    #[arg(long)]
    pub conjugate: bool,
    /// Report the doubling ratios `B(2s)/B(s)`.
    #[arg(long)]
    pub delta2: bool,
    /// Estimate the Simonenko indices.
    #[arg(long)]
    pub indices: bool,
    /// Check that this lower-order function is dominated (JSON or `@file`).
    #[arg(long)]
    pub lower_order: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    pub tmin: f64,
    /// Upper end of the table; defaults to min(domain cap, 100).
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct NormArgs {
    /// Field CSV (`dim,n,extent` header, then one row per cell).
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub source: NfunSource,
    /// Function for the Marcinkiewicz norms; defaults to the N-function.
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub source: NfunSource,
    /// Space dimension N.
    #[arg(long = "dim")]
    pub dim: usize,
    /// Force the growth class when the classifier is undecided.
    #[arg(long = "override", value_parser = ["slow", "fast"])]
    pub override_class: Option<String>,
    /// Level-set constant K of the regularity targets.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Domain diameter; defaults to that of the unit cube.
    #[arg(long)]
    pub diameter: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    /// Problem spec JSON. Relative CSV paths inside it resolve against its directory.
    pub problem: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// calculus, norms, embedding, solver or all.
    #[arg(default_value = "all")]
    pub suite: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { orlicz_core::Exec::Sequential } else { orlicz_core::Exec::default() };
    let ctx = commands::Context { out: output::Out::new(cli.out), seed: cli.seed, exec };
    let result = match &cli.command {
        Command::Nfun(a) => commands::nfun(&ctx, a),
        Command::Norm(a) => commands::norm(&ctx, a),
        Command::Embed(a) => commands::embed(&ctx, a),
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
    };
    match result {
        Ok(flags) if flags.is_empty() => ExitCode::SUCCESS,
        Ok(flags) => {
            for f in &flags {
                eprintln!("flag: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

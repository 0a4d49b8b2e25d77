//! Command-line driver: fit and evaluate discriminant models on CSV
//! datasets, sweep training counts, run invariant batteries, tabulate the
//! `G`/`Ĝ` eigencurves and generate synthetic data.
//!
//! Every command is a pure function of its configuration, input bytes and
//! seed.

pub mod commands;
pub mod config;
pub mod error;
pub mod invariants;
pub mod model_io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
pub use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "gfda", version, about = "gFDA, GDS and FDA-family experiments")]
pub struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Any configuration key, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it as JSON.
    Fit(ModelArgs),
    /// Evaluate a model file, or repeated random training subsets.
    Eval(EvalArgs),
    /// Averaged evaluation over a range of training counts.
    Sweep(EvalArgs),
    /// Run the invariant batteries; exits with 2 on failure.
    Invariants(InvariantArgs),
    /// Eigenvalues of G and Ĝ with per-eigenvector gFDA power.
    Eigencurves(SubspaceArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// fda, pcaLDA, regLDA, nullLDA, gfda, gfda-linear or gds.
    #[arg(long)]
    pub method: Option<String>,
    /// Normalize projections (the "+N" variants).
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub residual_threshold: Option<String>,
    /// full, energy:T or an integer.
    #[arg(long)]
    pub subspace_dim: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model_args: ModelArgs,
    /// Fitted model file (eval only).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Single labeled pool split into training and test samples.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub n_train: Option<String>,
    /// e.g. 2..9 or 2,4,8.
    #[arg(long)]
    pub n_values: Option<String>,
    #[arg(long)]
    pub repetitions: Option<String>,
    /// nearest-mean or cosine.
    #[arg(long)]
    pub rule: Option<String>,
    /// JSON report with the confusion matrix (model-file evaluation).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct InvariantArgs {
    /// Comma list of spectrum, duality, ds, decomposition, power, gap,
    /// heuristic, or all.
    #[arg(long)]
    pub scope: Option<String>,
    /// Restrict ensemble sweeps to this class count.
    #[arg(long)]
    pub classes: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct SubspaceArgs {
    #[arg(long)]
    pub classes: Option<String>,
    /// Dimension of each class subspace.
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub ambient: Option<String>,
    #[arg(long)]
    pub separation: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct SynthArgs {
    /// gaussian, mixture or subspace.
    #[arg(long)]
    pub kind: Option<String>,
    #[command(flatten)]
    pub subspace: SubspaceArgs,
    #[arg(long)]
    pub samples: Option<String>,
    /// set1, set2 or dirichlet:ALPHA.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub mean_norm: Option<String>,
    #[arg(long)]
    pub sigma_max: Option<String>,
    /// isotropic or geometric:RATIO.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub basis_seed: Option<String>,
}

type Pairs = Vec<(String, String)>;

fn push(p: &mut Pairs, key: &str, v: &Option<impl ToString>) {
    if let Some(v) = v {
        p.push((key.to_string(), v.to_string()));
    }
}

fn path_str(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.to_string_lossy().into_owned())
}

impl ModelArgs {
    fn pairs(&self, p: &mut Pairs) {
        push(p, "method", &self.method);
        if self.normalize {
            p.push(("normalize".into(), "true".into()));
        }
        push(p, "train", &path_str(&self.train));
        push(p, "gamma", &self.gamma);
        push(p, "delta", &self.delta);
        push(p, "residual_threshold", &self.residual_threshold);
        push(p, "subspace_dim", &self.subspace_dim);
    }
}

impl EvalArgs {
    fn pairs(&self, p: &mut Pairs) {
        self.model_args.pairs(p);
        push(p, "model", &path_str(&self.model));
        push(p, "test", &path_str(&self.test));
        push(p, "data", &path_str(&self.data));
        push(p, "n_train", &self.n_train);
        push(p, "n_values", &self.n_values);
        push(p, "repetitions", &self.repetitions);
        push(p, "rule", &self.rule);
        push(p, "report", &path_str(&self.report));
    }
}

impl SubspaceArgs {
    fn pairs(&self, p: &mut Pairs) {
        push(p, "classes", &self.classes);
        push(p, "dim", &self.dim);
        push(p, "ambient", &self.ambient);
        push(p, "separation", &self.separation);
    }
}

impl SynthArgs {
    fn pairs(&self, p: &mut Pairs) {
        push(p, "kind", &self.kind);
        self.subspace.pairs(p);
        push(p, "samples", &self.samples);
        push(p, "mode", &self.mode);
        push(p, "mean_norm", &self.mean_norm);
        push(p, "sigma_max", &self.sigma_max);
        push(p, "profile", &self.profile);
        push(p, "basis_seed", &self.basis_seed);
    }
}

impl Cli {
    /// Configuration from the file, `--set` pairs, then typed flags.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut pairs: Pairs = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {s}")))?;
            pairs.push((k.to_string(), v.to_string()));
        }
        match &self.command {
            Command::Fit(a) => a.pairs(&mut pairs),
            Command::Eval(a) | Command::Sweep(a) => a.pairs(&mut pairs),
            Command::Invariants(a) => {
                push(&mut pairs, "scope", &a.scope);
                push(&mut pairs, "classes", &a.classes);
            }
            Command::Eigencurves(a) => a.pairs(&mut pairs),
            Command::Synth(a) => a.pairs(&mut pairs),
        }
        push(&mut pairs, "seed", &self.seed);
        push(&mut pairs, "out", &path_str(&self.out));
        ExperimentConfig::load(self.config.as_deref(), &pairs)
    }

    pub fn execute(&self) -> Result<()> {
        let cfg = self.config()?;
        match &self.command {
            Command::Fit(_) => commands::cmd_fit(&cfg),
            Command::Eval(_) => commands::cmd_eval(&cfg),
            Command::Sweep(_) => commands::cmd_sweep(&cfg),
            Command::Invariants(_) => invariants::cmd_invariants(&cfg),
            Command::Eigencurves(_) => commands::cmd_eigencurves(&cfg),
            Command::Synth(_) => commands::cmd_synth(&cfg),
        }
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.execute() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `fscsynth`: controller synthesis for POMDPs from the command line.
//!
//! Exit codes: 0 success or satisfied, 1 completed but unsatisfied,
//! 2 input error, 3 budget exhausted.

mod commands;
mod input;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fscsynth::fsc::Topology;
use fscsynth::par::Execution;
use fscsynth::transforms::Variant;

use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(name = "fscsynth", version, about = "Finite-state controller synthesis for POMDPs via parametric Markov chains")]
struct Cli {
    /// Cap on worker threads; 1 runs every stage sequentially.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Where to write the run manifest. Defaults to `<output>.manifest.json`
    /// when an output file is given, and to stderr otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Translate a POMDP into a pMC (or a normalized POMDP); a simple pMC is translated back into a POMDP.
    Transform(TransformArgs),
    /// Evaluate an instantiation or controller against a specification.
    Check(CheckArgs),
    /// Search for a controller satisfying a specification.
    Synthesize(SynthesizeArgs),
    /// Compute the value as a rational function of the parameters.
    ClosedForm(ClosedFormArgs),
    /// Try to prove that no controller in a parameter region satisfies a specification.
    Prove(ProveArgs),
    /// Find a parameter region of controllers that all satisfy a specification.
    Permissive(PermissiveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TopologyArg {
    Full,
    Counter,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Full => Topology::Full,
            TopologyArg::Counter => Topology::Counter,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Standard,
    Substituted,
    ActionRestricted,
    NextObs,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::Substituted => Variant::Substituted,
            VariantArg::ActionRestricted => Variant::ActionRestricted,
            VariantArg::NextObs => Variant::NextObs,
        }
    }
}

/// How a POMDP input becomes a pMC. Ignored for pMC inputs.
#[derive(Args, Clone)]
pub struct ModelArgs {
    /// Input model: a POMDP or a pMC.
    pub model: PathBuf,
    /// Number of controller memory nodes.
    #[arg(long, short = 'k', default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub memory: u16,
    /// Allowed memory moves.
    #[arg(long, value_enum, default_value = "full")]
    pub topology: TopologyArg,
    /// pMC parameterization; standard for one node, substituted otherwise.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
}

impl ModelArgs {
    pub fn variant(&self) -> Variant {
        match self.variant {
            Some(v) => v.into(),
            None if self.memory == 1 => Variant::Standard,
            None => Variant::Substituted,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Pmc,
    Pomdp,
}

#[derive(Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Unfold the memory into the POMDP and translate the result with one node.
    #[arg(long)]
    pub unfold: bool,
    /// Normalize to a binary, then simple, POMDP first.
    #[arg(long)]
    pub make_simple: bool,
    /// Route every transition through a state revealing the next observation.
    #[arg(long)]
    pub intermediate: bool,
    /// Write the pMC or the (transformed) POMDP.
    #[arg(long, value_enum, default_value = "pmc")]
    pub emit: Emit,
    /// Output file; a parameter table is written next to it as `<output>.params`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Specification, e.g. "P> 0.6 [F goal]" or "Emin<= 4 [F goal]".
    #[arg(long, short)]
    pub spec: String,
    /// Parameter values, one `name = value` per line.
    #[arg(long, short, conflicts_with = "fsc")]
    pub instantiation: Option<PathBuf>,
    /// Controller for a POMDP input.
    #[arg(long)]
    pub fsc: Option<PathBuf>,
    /// Lower bound used to report whether the instantiation is ε-preserving.
    #[arg(long, default_value = "1/10000")]
    pub epsilon: String,
    /// Also report the value computed in floating point.
    #[arg(long)]
    pub float: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Pso,
    Brute,
}

#[derive(Args, Clone)]
pub struct SearchArgs {
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock budget in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    /// Search iterations per run.
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    /// Particles per run.
    #[arg(long, default_value_t = 40)]
    pub swarm: usize,
    /// Minimum probability of every controller choice.
    #[arg(long, default_value = "1/10000")]
    pub epsilon: String,
}

#[derive(Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short)]
    pub spec: String,
    #[arg(long, value_enum, default_value = "pso")]
    pub method: Method,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Output file for the controller (or the instantiation, for a pMC input).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct ClosedFormArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short)]
    pub spec: String,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct ProveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short)]
    pub spec: String,
    /// Region file with lines `name in [lo, hi]`; defaults to [ε, 1-ε] per parameter.
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Margin of the default region.
    #[arg(long, default_value = "1/10000")]
    pub epsilon: String,
    /// Maximal number of region splits along any branch.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
}

#[derive(Args)]
pub struct PermissiveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short)]
    pub spec: String,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Satisfying instantiations to collect.
    #[arg(long, default_value_t = 3)]
    pub witnesses: usize,
    /// Maximal number of search runs.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Output file for the region.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Result of a command: exit code plus a summary for the manifest.
pub struct Outcome {
    pub code: u8,
    pub summary: serde_json::Value,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// A failure before the command could complete; always exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

pub struct Context {
    pub exec: Execution,
    pub inputs: Vec<(String, String)>,
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cli = Cli::parse();
    let exec = match cli.threads {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut ctx = Context { exec, inputs: Vec::new() };
    let result = commands::run(&cli.command, &mut ctx);
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            let o = Outcome { code: 2, summary: serde_json::json!({ "error": msg }), output: None, seed: None };
            (o, Some(()))
        }
    };
    let manifest = RunManifest::new(&ctx, &outcome, cli.threads, start.elapsed());
    let target = cli.manifest.clone().or_else(|| {
        outcome.output.as_ref().map(|o| {
            let mut p = o.clone().into_os_string();
            p.push(".manifest.json");
            PathBuf::from(p)
        })
    });
    if let Err(e) = manifest.emit(target.as_deref()) {
        eprintln!("error: cannot write manifest: {e}");
        if error.is_none() {
            return ExitCode::from(2);
        }
    }
    ExitCode::from(outcome.code)
}

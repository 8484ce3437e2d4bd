mod commands;
mod formats;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use commands::Env;

#[derive(Parser, Debug)]
#[command(name = "cliffrb", version, about = "Clifford-group algorithms and randomized benchmarking")]
struct Cli {
    /// Master seed; a fresh one is drawn and printed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulation and bootstrap (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print a human-readable table instead of the JSON report.
    #[arg(long, global = true)]
    pretty: bool,
    /// Directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "cliffrb-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the Clifford group (n = 1, 2) or its quotient by the Paulis.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        quotient: bool,
        /// Include every element in the report.
        #[arg(long)]
        list: bool,
    },
    /// Optimal decompositions of every group element over a gate set.
    SearchDecomp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        quotient: bool,
        /// `standard`, `ion-trap` or a gate-set JSON file.
        #[arg(long, default_value = "standard")]
        gate_set: String,
        /// Also write every element's sequence as JSON lines.
        #[arg(long)]
        export: bool,
    },
    /// Decompose a tableau into one-qubit gates, CZ and CX.
    Decompose {
        /// Tableau file, text (`X_0 -> +Z`) or a JSON array of images.
        #[arg(long)]
        tableau: Option<PathBuf>,
        /// Decompose this many uniformly random Cliffords instead.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// `block` (any n) or `optimal` (table lookup).
        #[arg(long, default_value = "block")]
        method: String,
        /// Table written by `search-decomp`, for `optimal`.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value = "standard")]
        gate_set: String,
        /// Translate the result into this gate set.
        #[arg(long)]
        target: Option<String>,
    },
    /// Draw uniformly random Clifford operators.
    SampleClifford {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Generate RB sequences.
    GenSequences {
        /// `exact`, `interleaved` or `approximate`.
        #[arg(long, default_value = "exact")]
        protocol: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<usize>,
        /// Sequences per length.
        #[arg(long, default_value_t = 10)]
        sequences: usize,
        /// Library gate to interleave.
        #[arg(long)]
        gate: Option<String>,
        /// Tableau file of the gate to interleave.
        #[arg(long)]
        gate_file: Option<PathBuf>,
        /// Approximate protocol: Pauli part (`paulis`, `knill-pauli` or a file).
        #[arg(long, default_value = "paulis")]
        pauli_part: String,
        /// Approximate protocol: computational part (`knill`, `uniform` or a file).
        #[arg(long, default_value = "knill")]
        computational: String,
    },
    /// Simulate a sequence file under an error model and write a dataset CSV.
    Simulate {
        #[arg(long)]
        sequences: PathBuf,
        /// Error-model JSON; overrides the strength flags.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Depolarizing strength after every step.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        /// Depolarizing strength before readout.
        #[arg(long, default_value_t = 0.0)]
        pm: f64,
        /// Extra depolarizing strength after interleaved gates.
        #[arg(long)]
        pg: Option<f64>,
        #[arg(long, default_value_t = 100)]
        shots: u64,
    },
    /// Weighted least-squares fit of a dataset CSV.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        n: usize,
        /// `main`, `main-app`, `three-param` or `magesan`.
        #[arg(long, default_value = "main")]
        model: String,
        #[arg(long)]
        protocol: Option<String>,
    },
    /// Parametric bootstrap of a fit.
    Bootstrap {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "main")]
        model: String,
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
    },
    /// Gate error from a primary and an interleaved dataset.
    Interleaved {
        #[arg(long)]
        primary: PathBuf,
        #[arg(long)]
        interleaved: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "main")]
        model: String,
        /// `alpha` or `inverse-alpha` prefactor.
        #[arg(long, default_value = "alpha")]
        form: String,
        /// One-qubit step errors for the consistency check, as `e1,e2`.
        #[arg(long, value_delimiter = ',')]
        one_qubit: Vec<f64>,
    },
    /// Total-variation distance from uniform of repeated steps.
    TvDecay {
        #[command(flatten)]
        step: StepArgs,
        #[arg(long, default_value_t = 20)]
        jmax: usize,
    },
    /// Step-comparison and kappa bounds.
    Bounds {
        #[command(subcommand)]
        what: BoundsKind,
    },
}

#[derive(Args, Debug)]
pub struct StepArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// `knill`, `uniform`, `paulis` or a step-distribution file.
    #[arg(long, default_value = "knill")]
    pub computational: String,
    /// Applied before the computational part of each step.
    #[arg(long)]
    pub pauli_part: Option<String>,
    /// Probability of replacing the computational part by the identity.
    #[arg(long, default_value_t = 0.0)]
    pub identity_weight: f64,
    /// Work in the quotient by the Paulis.
    #[arg(long)]
    pub quotient: bool,
}

#[derive(Args, Debug)]
pub struct LpArgs {
    #[command(flatten)]
    pub step: StepArgs,
    /// Step error of the reference distribution.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
}

#[derive(Subcommand, Debug)]
pub enum BoundsKind {
    /// Linear-program bound on the step error against a uniform step.
    Lp(LpArgs),
    /// Kappa bounds for the interleaved gate of a sequence file.
    Kappa {
        #[arg(long)]
        sequences: PathBuf,
        /// Observed error probability attributed to the gate.
        #[arg(long)]
        e: f64,
        /// Measured Pauli, e.g. `+ZI`; defaults to Z on qubit 0.
        #[arg(long)]
        measure: Option<String>,
    },
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Enumerate { .. } => "enumerate",
        Command::SearchDecomp { .. } => "search-decomp",
        Command::Decompose { .. } => "decompose",
        Command::SampleClifford { .. } => "sample-clifford",
        Command::GenSequences { .. } => "gen-sequences",
        Command::Simulate { .. } => "simulate",
        Command::Fit { .. } => "fit",
        Command::Bootstrap { .. } => "bootstrap",
        Command::Interleaved { .. } => "interleaved",
        Command::TvDecay { .. } => "tv-decay",
        Command::Bounds { what: BoundsKind::Lp(_) } => "bounds-lp",
        Command::Bounds { what: BoundsKind::Kappa { .. } } => "bounds-kappa",
    }
}

fn file_digest(p: &Path) -> Result<String> {
    let bytes = fs::read(p).with_context(|| format!("hashing {}", p.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn execute(cli: Cli) -> Result<()> {
    let seed = match cli.seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            eprintln!("seed: {s}");
            s
        }
    };
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = Env { out: cli.out.clone(), seed, lib: cliffrb::GateLibrary::builtin() };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let out = pool.install(|| commands::run(&cli.command, &ctx))?;

    let name = command_name(&cli.command);
    let digests = |ps: &[PathBuf]| -> Result<Vec<serde_json::Value>> {
        ps.iter().map(|p| Ok(json!({ "path": p, "sha256": file_digest(p)? }))).collect()
    };
    let manifest = json!({
        "schema_version": formats::SCHEMA_VERSION,
        "command": name,
        "argv": std::env::args().collect::<Vec<_>>(),
        "seed": seed,
        "threads": cli.threads,
        "versions": { "cliffrb": env!("CARGO_PKG_VERSION") },
        "inputs": digests(&out.inputs)?,
        "outputs": digests(&out.artifacts)?,
    });
    let mpath = cli.out.join(format!("{name}.manifest.json"));
    fs::write(&mpath, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", mpath.display()))?;

    if cli.pretty {
        print!("{}", out.pretty);
        if !out.pretty.ends_with('\n') {
            println!();
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&out.report)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

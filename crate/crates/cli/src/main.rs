use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

mod checks;
mod commands;

/// Uniformly rotating vortex patches in the unit disk.
#[derive(Parser, Debug)]
#[command(name = "rotpatch", version, arg_required_else_help = true)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "ROTPATCH_THREADS")]
    threads: Option<usize>,

    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for a single rotating patch near the ellipse of label (Q, ε).
    SolveSingle(SolveSingleArgs),
    /// Solve the central patch plus two boundary satellites.
    SolveMulti(SolveMultiArgs),
    /// Compare the finite-difference Jacobian at the ellipse with the analytic operator.
    Spectrum(SpectrumArgs),
    /// Evolve patch boundaries by contour dynamics.
    Evolve(EvolveArgs),
    /// Run the invariant suite.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
pub struct SolveSingleArgs {
    #[arg(long = "Q", visible_alias = "q")]
    pub q: f64,
    /// Required unless --schedule is given.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Continuation schedule in ε, comma separated; the last value is reported in full.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Vec<f64>,
    #[arg(long = "N", visible_alias = "n", default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub m: usize,
    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long, default_value_t = 20)]
    pub max_iter: usize,
    /// Drop the image term (free-space problem).
    #[arg(long)]
    pub no_image: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveMultiArgs {
    /// JSON with keys Q, mu, r0 and optionally r1, r2, N, m, tol, distance, limit.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long = "Q", visible_alias = "q")]
    pub q: f64,
    #[arg(long = "N", visible_alias = "n", default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 256)]
    pub m: usize,
    /// Entrywise tolerance for the comparison.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Include both matrices in the report.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    /// Boundary CSV (theta,x,y,nx,ny); repeat for several patches.
    #[arg(long = "in", required = true)]
    pub input: Vec<PathBuf>,
    /// Vorticity of each patch, in the order of --in.
    #[arg(long, required = true)]
    pub strength: Vec<f64>,
    /// Expected rotation rate; enables the rigid-rotation error.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long = "T", visible_alias = "t")]
    pub t: f64,
    #[arg(long)]
    pub dt: f64,
    /// Number of frames written over [0, T].
    #[arg(long, default_value_t = 1)]
    pub frames: usize,
    #[arg(long)]
    pub no_redistribute: bool,
    #[arg(long)]
    pub no_image: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Run only the named checks (repeatable).
    #[arg(long)]
    pub only: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// List check names and exit.
    #[arg(long)]
    pub list: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad input, detected before any computation (exit 2).
    Usage(String),
    /// Numerical failure (exit 1).
    Numerical(rotpatch::Error),
    Other(anyhow::Error),
}

impl From<rotpatch::Error> for Failure {
    fn from(e: rotpatch::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// Report printed on stdout and optionally written to a file; `ok` decides the exit code.
pub struct Outcome {
    pub report: Value,
    pub ok: bool,
}

fn error_kind(e: &rotpatch::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::SolveSingle(a) => commands::solve_single(a),
        Command::SolveMulti(a) => commands::solve_multi(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Check(a) => checks::run(a),
    };
    match result {
        Ok(o) => {
            println!("{}", serde_json::to_string_pretty(&o.report).expect("report serializes"));
            if o.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            let (code, kind, msg) = match &f {
                Failure::Usage(m) => (2, "Usage".to_string(), m.clone()),
                Failure::Numerical(e) => (1, error_kind(e), e.to_string()),
                Failure::Other(e) => (1, "Other".to_string(), format!("{e:#}")),
            };
            let v = json!({ "schema": 1, "error": { "kind": kind, "message": msg } });
            println!("{}", serde_json::to_string_pretty(&v).expect("report serializes"));
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

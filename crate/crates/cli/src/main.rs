mod benchmark;
mod decompose;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iapd::generate::GeneratorKind;
use iapd::solver::{Init, ProximalMode, SolverConfig};

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "IAPD_OUT_DIR";

pub const DEFAULT_OUT_DIR: &str = "iapd-out";

#[derive(Parser)]
#[command(name = "iapd", version, about = "Low-rank orthogonal tensor approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a tensor file and write factors, weights and the sweep trace.
    Decompose(DecomposeArgs),
    /// Run the invariant battery over seeded instances.
    Verify(VerifyArgs),
    /// Run a JSON-configured experiment and aggregate the runs.
    Benchmark(BenchmarkArgs),
    /// Write a seeded test tensor.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output directory [default: iapd-out].
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    json_report: Option<PathBuf>,
}

impl OutArgs {
    fn dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = ProximalMode::Classic)]
    mode: ProximalMode,
    #[arg(long, default_value_t = 2000)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 1e-10)]
    step_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    kkt_tol: f64,
    /// Random orthonormal start with this seed instead of the HOSVD start.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_truncation: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            kappa: self.kappa,
            tau: self.tau,
            proximal_mode: self.mode,
            truncation_enabled: !self.no_truncation,
            max_sweeps: self.max_sweeps,
            step_tol: self.step_tol,
            kkt_tol: self.kkt_tol,
            init: self.seed.map_or(Init::Hosvd, |seed| Init::Random { seed }),
            record_factors: false,
        }
    }
}

#[derive(Args)]
struct DecomposeArgs {
    /// Tensor text file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    rank: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only the named criterion (repeatable).
    #[arg(long)]
    only: Vec<String>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Corrupt one audited quantity; the battery must then fail.
    #[arg(long, value_parser = ["decrease"])]
    inject_fault: Option<String>,
    /// List the criterion names and exit.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: GeneratorKind,
    /// Comma-separated dimensions, e.g. 4,4,4.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    repeat: u32,
    /// Tensor file to write.
    #[arg(long)]
    out: PathBuf,
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown kind '{s}' (gaussian, odeco_exact, odeco_noisy, defective_rank)"))
}

fn generate(args: &GenerateArgs) -> anyhow::Result<ExitCode> {
    let spec = iapd::generate::GeneratorSpec::new(args.kind, args.dims.clone(), args.rank, args.seed)
        .with_noise(args.noise);
    let g = iapd::generate::generate_tensor(&spec, args.repeat)?;
    iapd::io::write_tensor(&args.out, &g.tensor)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    let result = match &cli.command {
        Command::Decompose(a) => decompose::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Benchmark(a) => benchmark::run(a),
        Command::Generate(a) => generate(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use altproj::experiments::{self, AlgorithmChoice, ExperimentConfig, ExperimentKind, OutputFormat};
use altproj::Parallelism;

#[derive(Parser)]
#[command(
    name = "altproj",
    version,
    about = "Alternating and averaged projection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print predicted versus observed rates.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "cs")]
    experiment: ExperimentKind,
    /// `cyclic` (and `alternating` with three or more sets) is experimental:
    /// no rate guarantee is known for it.
    #[arg(long, value_enum, default_value = "averaged")]
    algorithm: AlgorithmChoice,
    /// Dictionary rows (cs) or ambient dimension (subspaces).
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 512)]
    m_dict: usize,
    #[arg(long, default_value_t = 32)]
    d_rows: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Angle in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    theta: f64,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    stop_tol: f64,
    /// Number of sets (subspaces experiment).
    #[arg(long, default_value_t = 3)]
    m_sets: usize,
    /// Subspace dimension (subspaces experiment).
    #[arg(long)]
    sub_dim: Option<usize>,
    /// Size of the shift (perturbed experiment).
    #[arg(long, default_value_t = 0.01)]
    shift: f64,
    /// Rate constant for the perturbation bound.
    #[arg(long, default_value_t = 0.6)]
    rate_c: f64,
    /// Start cs from a projected Gaussian matrix instead of P0·W.
    #[arg(long)]
    u0_projected: bool,
    /// Keep every iterate in the trace (defaults: off for cs, on otherwise).
    #[arg(long)]
    store_iterates: Option<bool>,
    /// Run this many consecutive seeds.
    #[arg(long, default_value_t = 1)]
    batch_seeds: usize,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
    /// Output file; with several seeds `-seed<N>` is inserted before the extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

impl RunArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: self.experiment,
            algorithm: self.algorithm,
            n: self.n,
            m_dict: self.m_dict,
            d_rows: self.d_rows,
            alpha: self.alpha,
            theta: self.theta,
            eps: self.eps,
            seed: self.seed,
            max_iter: self.max_iter,
            stop_tol: self.stop_tol,
            m_sets: self.m_sets,
            sub_dim: self.sub_dim,
            shift: self.shift,
            rate_c: self.rate_c,
            u0_projected: self.u0_projected,
            store_iterates: self.store_iterates,
            batch_seeds: self.batch_seeds,
            parallelism: if self.sequential {
                Parallelism::Sequential
            } else {
                Parallelism::default()
            },
        }
    }
}

fn seeded_path(path: &Path, seed: u64) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-seed{seed}.{ext}"),
        None => format!("{stem}-seed{seed}"),
    };
    path.with_file_name(name)
}

fn run(args: &RunArgs) -> altproj::Result<()> {
    let cfg = args.config();
    let outputs = experiments::run_experiment(&cfg)?;
    let batch = outputs.len() > 1;
    for out in &outputs {
        print!("{}", experiments::render_summary(out));
        if let Some(path) = &args.out {
            let path = if batch {
                seeded_path(path, out.seed)
            } else {
                path.clone()
            };
            experiments::emit(out, args.format, &path)?;
            println!("wrote {}", path.display());
        }
        if batch {
            println!();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

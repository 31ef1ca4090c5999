//! `tsqrt`: T-square roots, TBW distances and the imaging pipelines from the
//! command line.
//!
//! Exit codes: 0 success, 1 input or contract error, 2 numeric target missed
//! (non-convergence, or a failed comparison in `reproduce`).

mod commands;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tsqrt", version, about = "T-product tensor square roots and applications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Newton,
    Db,
    Direct,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Strategy {
    Direct,
    Newton,
    Db,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GrayMethod {
    Tdg,
    Luminance,
    Pca,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WhitenArg {
    T,
    Matrix,
    Channelwise,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TransferArg {
    Tensor,
    Channelwise,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Matrix,
    Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    NewtonTable,
    DbTable,
    StabilityTable,
    KappaSweep,
    TbwExample,
    GrayscaleExample,
    ImageCovTable,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Principal T-square root of a tensor file.
    Sqrt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "db")]
        method: Method,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 50)]
        max_iter: usize,
        #[arg(long = "no-early-stop")]
        no_early_stop: bool,
        /// Output tensor file; the inverse root (db) goes to `<stem>_inv.json`.
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<stem>_trace.csv` next to `--out`.
        #[arg(long = "trace-out")]
        trace_out: Option<PathBuf>,
    },
    /// TBW distance between two tensor files; prints the total.
    Tbw {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value = "direct")]
        strategy: Strategy,
        /// Per-slice report CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Grayscale conversion with quality metrics.
    Grayscale {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_enum, default_value = "tdg")]
        method: GrayMethod,
        #[arg(long, value_enum, default_value = "matrix")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "metrics-out")]
        metrics_out: Option<PathBuf>,
    },
    /// Channel whitening; the saved image is display-normalized.
    Whiten {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_enum, default_value = "t")]
        method: WhitenArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "metrics-out")]
        metrics_out: Option<PathBuf>,
    },
    /// Color transfer from a target image's statistics onto a source image.
    Transfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "tensor")]
        method: TransferArg,
        #[arg(long, value_enum, default_value = "matrix")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Newton vs Denman-Beavers stability across condition numbers.
    BenchStability {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [4.0, 10.0, 50.0, 100.0, 500.0, 1102.0])]
        kappa: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerates the reference tables and compares them to embedded values.
    Reproduce {
        #[arg(value_enum)]
        which: Target,
        #[arg(long = "out", alias = "out-dir")]
        out: PathBuf,
    },
}

fn configure_threads() {
    let threads = std::env::var("TSQRT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
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
    configure_threads();
    match commands::run(cli.command) {
        Ok(outcome) => ExitCode::from(outcome as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qgnls_core::solver::DEFAULT_TOL;
use qgnls_core::spectral::LAMBDA_TOL;

mod commands;

/// Edge-localized standing waves of the cubic NLS on metric graphs.
#[derive(Debug, Parser)]
#[command(name = "qgnls", version)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    /// Graph file (`vertex`, `pendant`, `loop`, `internal`, `halfline`, `select` lines).
    #[arg(long, global = true, conflicts_with = "preset")]
    pub graph: Option<PathBuf>,
    /// Built-in scenario used instead of a graph file.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Selected edge ids, overriding the file's `select` line.
    #[arg(long, global = true, value_delimiter = ',')]
    pub select: Option<Vec<String>>,
    /// Scale parameter ε (default 8).
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Grid step in scaled units (default: min(0.02, shortest scaled edge / 50)).
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Newton tolerance on the sup-norm residual.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Gnuplot data file for profiles or homotopy traces.
    #[arg(long, global = true)]
    pub dat: Option<PathBuf>,
    /// Seed for the random Robin rays.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Admit degree-2 vertices and skip the length assumptions.
    #[arg(long, global = true)]
    pub allow_fake_vertices: bool,
    /// Eigenvalues with |λ| at or below this count as zero.
    #[arg(long, global = true, default_value_t = LAMBDA_TOL)]
    pub zero_window: f64,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Check graph structure and the length assumptions of the selection.
    Validate,
    /// Leading-order vertex data and internal-edge offsets.
    Asym,
    /// Period function and its partial derivatives.
    Period {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
    },
    /// Single bump on an edge of length `ell` with boundary value `p`.
    Bump {
        #[arg(long)]
        ell: f64,
        #[arg(long)]
        p: f64,
    },
    /// Newton solve from the asymptotic guess; writes the state CSV.
    Solve,
    /// Spectrum of the linearized operator, optionally along the Robin homotopy.
    Spectrum {
        #[arg(long)]
        alpha_scan: bool,
        /// Random rays added to the uniform one in the `--dat` trace.
        #[arg(long, default_value_t = 8)]
        rays: usize,
    },
    /// Morse index (n, z) of the solved state.
    Morse {
        /// Expected pair `n,z`; the exit code is nonzero on mismatch.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Run a built-in scenario at one ε (list them with `--list`).
    Scenario {
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        no_homotopy: bool,
    },
    /// Run a built-in scenario over an ε ladder; writes the sweep CSV.
    Sweep {
        name: String,
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<f64>>,
        #[arg(long)]
        no_homotopy: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QGNLS_LOG", "warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

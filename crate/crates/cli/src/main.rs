mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};

use pentalab::io::Backend;
use pentalab::suite::Level;
use pentalab::{Error, ErrorKind};

/// Experiments with higher-dimensional pentagram maps.
///
/// Every subcommand writes its artifacts into `--out-dir` (JSON or CSV,
/// each carrying the producing operation's tag and the run configuration)
/// and prints a one-line summary. Exit codes: 0 success, 1 usage error,
/// 2 contract violation, 3 numerical failure, 4 structural mismatch or a
/// failing verification criterion.
#[derive(Debug, Parser)]
#[command(name = "pentalab", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Scalar backend for generated polygons.
    #[arg(long, global = true, default_value = "rational", value_parser = parse_backend)]
    pub backend: Backend,
    /// Float precision in bits (at least 53).
    #[arg(long, global = true, env = "PENTALAB_PRECISION", default_value_t = pentalab::algebra::DEFAULT_PRECISION)]
    pub precision: u32,
    /// Seed of every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Threshold for the pass flag of check commands.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Directory receiving the artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Where a polygon comes from: a file, or a seeded random draw.
#[derive(Debug, Args)]
pub struct Source {
    /// Polygon JSON (an orbit array yields its first state).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Dimension of the ambient projective space.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Period of the polygon.
    #[arg(long, default_value_t = 7)]
    pub n: usize,
    /// Coefficient range; defaults to 5 (rational) or 1 (float).
    #[arg(long)]
    pub spread: Option<f64>,
    /// Draw a closed polygon on the moment curve with this angular jitter
    /// instead of random coordinates.
    #[arg(long)]
    pub moment: Option<f64>,
}

/// Potentials of a differential operator: a file, or seeded Fourier modes.
#[derive(Debug, Args)]
pub struct Potentials {
    /// Potentials JSON `{"d", "n", "u"}`.
    #[arg(long)]
    pub potentials: Option<PathBuf>,
    /// Order of the operator minus one.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Grid size (even, at least 32).
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Size of the generated Fourier coefficients.
    #[arg(long, default_value_t = 0.3)]
    pub amplitude: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a polygon.
    Gen(Source),
    /// Apply the pentagram map once.
    Map(Source),
    /// Iterate the map and record per-step conditioning.
    Orbit {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Spectral polynomial of the Lax monodromy.
    Spectral(Source),
    /// Drift of every spectral coefficient along an orbit.
    Conserve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Deviation of the scaling action from commuting with the map.
    ScalingCheck {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Number of random (polygon, scale) pairs.
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Quadruple-point conditions of a closed polygon in 3-space.
    ClosedCheck {
        /// Polygon JSON; otherwise random vertices with identity monodromy.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Sign of k at the quadruple point.
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sign: i64,
    },
    /// Scaled-frame eigenvalues against the Lax monodromy (odd d).
    XcheckMonodromy {
        #[command(flatten)]
        source: Source,
        /// Comma-separated scales.
        #[arg(long, value_delimiter = ',', default_value = "0.5,2")]
        s: Vec<f64>,
    },
    /// Interior lattice points of the Newton polygon.
    Genus(Source),
    /// Rank of the Jacobian of the labeled integrals (d = 3, odd n).
    Rank(Source),
    /// Integrate the KdV-type flow of the operator.
    KdvEvolve {
        #[command(flatten)]
        potentials: Potentials,
        /// Time step; defaults to a quarter of the stability budget.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Compare flows of u and of u with u_0 shifted by a constant.
    KdvShiftCheck {
        #[command(flatten)]
        potentials: Potentials,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        shift: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Fit the small-chord expansion of the envelope against the flow.
    Climit {
        #[command(flatten)]
        potentials: Potentials,
        /// Chord lengths in geometric progression.
        #[arg(long, value_delimiter = ',', default_value = "0.08,0.04,0.02")]
        eps: Vec<f64>,
    },
    /// Run the verification battery.
    Verify {
        #[arg(long, default_value = "quick", value_parser = parse_level)]
        level: Level,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Contract => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Structural => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(&cli.global, cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

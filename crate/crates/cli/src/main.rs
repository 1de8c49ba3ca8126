//! `polyvem` command-line driver: mesh generation, solves, patch tests and
//! convergence studies.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polyvem::quadrature::MomentMode;

use config::Problem;

/// Environment variable that sets the number of worker threads.
pub const THREADS_ENV: &str = "POLYVEM_THREADS";

#[derive(Parser)]
#[command(name = "polyvem", version, about = "Virtual element solver for 3D linear elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh file.
    Meshgen {
        #[command(subcommand)]
        kind: MeshKind,
    },
    /// Solve one problem and write the field (VTK) and error report (JSON, CSV).
    Run(ConfigArgs),
    /// Error rates over a mesh sequence, or errors over a gamma sweep.
    Convergence {
        #[command(flatten)]
        config: ConfigArgs,
        /// Brick refinement levels, e.g. `2,4,8` (n x n x 5n for the beam, n^3 for the patch).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// Stabilisation values for a sweep on a single mesh, e.g. `0.25,0.5,1,2,4`.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Affine patch test; exit code 0 on PASS, 1 on FAIL.
    Patch(ConfigArgs),
}

#[derive(Subcommand)]
pub enum MeshKind {
    /// Structured bricks, optionally with perturbed interior vertices.
    Hex {
        #[command(flatten)]
        common: MeshgenCommon,
        /// Subdivisions per axis, `nx,ny,nz`.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Interior vertex perturbation as a fraction of the spacing, in [0, 0.5).
        #[arg(long, default_value_t = 0.0)]
        distortion: f64,
    },
    /// Voronoi cells of random seeds clipped to the box.
    Voronoi {
        #[command(flatten)]
        common: MeshgenCommon,
        /// Number of cells.
        #[arg(long)]
        n: usize,
    },
    /// Centroidal Voronoi cells from Lloyd iteration.
    Cvt {
        #[command(flatten)]
        common: MeshgenCommon,
        /// Number of cells.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = config::default_max_iters())]
        max_iters: usize,
    },
}

#[derive(Args)]
pub struct MeshgenCommon {
    /// Box bounds `x0,x1,y0,y1,z0,z1`.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,0,1,0,1")]
    pub bounds: Vec<f64>,
    /// Random number generator seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output mesh file.
    #[arg(short, long, default_value = "mesh.json")]
    pub output: PathBuf,
}

/// Settings shared by `run`, `convergence` and `patch`. Flags override the
/// values of the `--config` file.
#[derive(Args, Default)]
#[command(group = clap::ArgGroup::new("source").multiple(false))]
#[command(group = clap::ArgGroup::new("generator").multiple(false))]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub problem: Option<Problem>,
    /// Young's modulus (isotropic material).
    #[arg(long)]
    pub young: Option<f64>,
    /// Poisson's ratio (isotropic material).
    #[arg(long)]
    pub poisson: Option<f64>,
    /// Stabilisation factor.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Face moment evaluation: nodal or moment.
    #[arg(long)]
    pub mode: Option<MomentMode>,
    /// Mesh file.
    #[arg(long, group = "source")]
    pub mesh: Option<PathBuf>,
    /// Brick mesh `nx,ny,nz` over the problem domain.
    #[arg(long, group = "source", group = "generator", value_delimiter = ',')]
    pub hex: Option<Vec<usize>>,
    /// Voronoi mesh with this many cells.
    #[arg(long, group = "source", group = "generator")]
    pub voronoi: Option<usize>,
    /// Centroidal Voronoi mesh with this many cells.
    #[arg(long, group = "source", group = "generator")]
    pub cvt: Option<usize>,
    /// Generator box `x0,x1,y0,y1,z0,z1` (defaults to the problem domain).
    #[arg(long = "box", requires = "generator", value_delimiter = ',', allow_hyphen_values = true)]
    pub bounds: Option<Vec<f64>>,
    /// Generator seed.
    #[arg(long, requires = "generator")]
    pub seed: Option<u64>,
    /// Brick distortion amplitude.
    #[arg(long, requires = "hex")]
    pub distortion: Option<f64>,
    /// Lloyd iteration limit.
    #[arg(long, requires = "cvt")]
    pub max_iters: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Largest accepted relative residual of the linear solve.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Terms of the beam warping series.
    #[arg(long)]
    pub nterms: Option<usize>,
    /// Beam end load.
    #[arg(long)]
    pub force: Option<f64>,
    /// Beam length.
    #[arg(long)]
    pub length: Option<f64>,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{value}'"))?;
    if threads == 0 {
        bail!("{THREADS_ENV} must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Meshgen { kind } => commands::meshgen(&kind).map(|_| ExitCode::SUCCESS),
        Command::Run(args) => commands::run(&args.resolve()?).map(|_| ExitCode::SUCCESS),
        Command::Convergence { config, levels, gammas } => {
            let mut cfg = config.resolve()?;
            if let Some(g) = gammas {
                cfg.gammas = g;
            }
            commands::convergence(&cfg, levels.as_deref()).map(|_| ExitCode::SUCCESS)
        }
        Command::Patch(mut args) => {
            args.problem = Some(Problem::Patch);
            let passed = commands::patch(&args.resolve()?)?;
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

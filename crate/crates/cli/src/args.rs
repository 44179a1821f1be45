use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::generate::FamilyKind;

#[derive(Debug, Clone, Parser)]
#[command(name = "metzler", version, about = "Stability tools for Metzler matrices and product families")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Convergence tolerance of the power method.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,

    /// Iteration budget of the power method and of the greedy loops.
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,

    /// Master seed for `gen` and `bench`.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Norm for the distance; `one` is handled by transposition.
    #[arg(long, global = true, value_enum)]
    pub norm: Option<NormArg>,

    /// Emit a JSON object instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Max,
    Inf,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Max,
    Min,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Leading eigenpair by the translative power method.
    Eig { input: PathBuf },
    /// Closest Hurwitz stable Metzler matrix in the max-norm.
    StabMax { input: PathBuf },
    /// Closest Hurwitz unstable matrix in the max-norm.
    DestabMax { input: PathBuf },
    /// Closest Hurwitz stable Metzler matrix in the inf-norm (or one-norm).
    StabInf { input: PathBuf },
    /// Closest Hurwitz unstable Metzler matrix in the inf-norm (or one-norm).
    DestabInf { input: PathBuf },
    /// Closest Schur stable matrix to a non-negative matrix.
    StabSchur {
        input: PathBuf,
        /// Allow negative diagonal entries in the answer.
        #[arg(long)]
        allow_metzler: bool,
    },
    /// Closest non-negative matrix with spectral radius equal to `--level`.
    DestabSchur {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        level: f64,
    },
    /// Optimize the spectral abscissa over a product family.
    OptFamily {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = DirectionArg::Max)]
        direction: DirectionArg,
    },
    /// Closest Hurwitz stable sign matrix.
    SignStab { input: PathBuf },
    /// Stability checks for a switching system.
    LssCheck {
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Stabilize a planar switching system over its convex hull.
    #[command(name = "lss-stab-2d")]
    LssStab2d {
        input: PathBuf,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Stabilize a switching system by cutting sign-pattern interdependencies.
    LssStabSign { input: PathBuf },
    /// Random product family.
    Gen(GenArgs),
    /// Iteration counts and timings of the selective greedy method.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long = "dim", short = 'd')]
    pub dim: usize,
    /// Rows per uncertainty set.
    #[arg(long = "rows", short = 'n')]
    pub rows: usize,
    /// Density range in percent, e.g. `9 15`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [100, 100])]
    pub density: Vec<u32>,
    #[arg(long, value_enum, default_value_t = FamilyKind::Full)]
    pub kind: FamilyKind,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [25, 100])]
    pub dims: Vec<usize>,
    /// Uncertainty set sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100])]
    pub rows: Vec<usize>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [100, 100])]
    pub density: Vec<u32>,
    #[arg(long, value_enum, default_value_t = FamilyKind::Full)]
    pub kind: FamilyKind,
    #[arg(long, value_enum, default_value_t = DirectionArg::Max)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Write the CSV report here instead of after the table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

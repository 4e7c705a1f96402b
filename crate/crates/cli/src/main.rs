//! qvlab command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::QuadConfig;

#[derive(Debug, Parser)]
#[command(
    name = "qvlab",
    version,
    about = "Checks for Q-valued Dirichlet-stationary maps"
)]
pub struct Cli {
    /// TOML config file; its values sit between flags and built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub quad: QuadFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct QuadFlags {
    /// Gauss-Legendre order per radial piece.
    #[arg(long, global = true)]
    pub radial_order: Option<usize>,
    /// Radial pieces per geometric level.
    #[arg(long, global = true)]
    pub subdivisions: Option<usize>,
    /// Trapezoid nodes on the circle.
    #[arg(long, global = true)]
    pub angular: Option<usize>,
    /// Gauss-Legendre order in each polar angle (n >= 3).
    #[arg(long, global = true)]
    pub polar_order: Option<usize>,
    /// Geometric levels towards a branch point at the centre.
    #[arg(long, global = true)]
    pub core_levels: Option<usize>,
}

impl From<QuadFlags> for QuadConfig {
    fn from(q: QuadFlags) -> Self {
        QuadConfig {
            radial_order: q.radial_order,
            subdivisions: q.subdivisions,
            angular: q.angular,
            polar_order: q.polar_order,
            core_levels: q.core_levels,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The example library.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
    /// Single checks producing one report.
    Check {
        #[command(subcommand)]
        check: CheckCommand,
    },
    /// Frequency profile, or the log-H integral identity with --identity.
    Frequency(FrequencyArgs),
    /// Vanishing order fitted from annular means.
    VanishingOrder(OrderArgs),
    /// Homogeneity deficit profile.
    Deficit(DeficitArgs),
    /// Weiss energy profile, or its derivative formula with --derivative.
    Weiss(WeissArgs),
    /// Epiperimetric gap of planar boundary data.
    Epiperimetric(EpiArgs),
    /// Harmonic extension of planar boundary data by unwinding.
    Solve2d(SolveArgs),
    /// Blow-up sequence at a point.
    Blowup(BlowupArgs),
    /// Parameter sweep from the [sweep] table of the config file.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExamplesAction {
    /// One line per library field: spec, kind, vanishing order at 0.
    List,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Field spec, e.g. branch:3/2 or harmonic:x1.
    #[arg(long)]
    pub field: String,
    /// Comma-separated point; the origin by default.
    #[arg(long)]
    pub center: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CarlemanForm {
    Full,
    First,
    Pre,
    Modified,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EpsVariant {
    Proof,
    Statement,
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Outer and inner variations over the deformation battery.
    Stationarity {
        #[command(flatten)]
        field: FieldArgs,
        /// Radius of the bump supporting the test deformations.
        #[arg(long)]
        bump_radius: Option<f64>,
    },
    /// Both sides of the Carleman inequality.
    Carleman {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        tau: Option<f64>,
        /// Cutoff: annulus:a,b,c,d or smooth:a,b,c,d.
        #[arg(long)]
        chi: Option<String>,
        /// Defaults to 1/sqrt(1 + log(c/b)^2).
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value = "proof")]
        variant: EpsVariant,
        #[arg(long, value_enum, default_value = "full")]
        form: CarlemanForm,
        /// Bent-weight strength (modified form).
        #[arg(long)]
        delta: Option<f64>,
        /// Bent-weight radii r1,r2 (modified form).
        #[arg(long)]
        bent: Option<String>,
    },
    /// Three annuli inequality at r1 < r2 < r3.
    ThreeSphere {
        #[command(flatten)]
        field: FieldArgs,
        /// r1,r2,r3
        #[arg(long)]
        radii: String,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        domain_radius: Option<f64>,
    },
    /// Doubling ratio at shrinking dyadic radii.
    Doubling {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        /// A number or `auto` (fitted vanishing order).
        #[arg(long, default_value = "auto")]
        kappa: String,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Interior energy against cutoff-weighted mass.
    Caccioppoli {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        chi: String,
        #[arg(long)]
        c_max: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Variant {
    Sharp,
    LinearCutoff,
}

#[derive(Debug, Args)]
pub struct FrequencyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Comma-separated radii, or dyadic:A..B for 2^-A..2^-B.
    #[arg(long, default_value = "dyadic:1..10")]
    pub radii: String,
    #[arg(long, value_enum, default_value = "sharp")]
    pub variant: Variant,
    /// s,r: check the log-H identity on [s, r] instead.
    #[arg(long)]
    pub identity: Option<String>,
    /// Write the profile as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value = "dyadic:24..40")]
    pub radii: String,
}

#[derive(Debug, Args)]
pub struct DeficitArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value = "auto")]
    pub kappa: String,
    #[arg(long, default_value = "dyadic:2..12")]
    pub radii: String,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeissArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value = "auto")]
    pub kappa: String,
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub radii: String,
    /// Check the derivative formula at this radius.
    #[arg(long)]
    pub derivative: Option<f64>,
    /// Finite-difference step of --derivative.
    #[arg(long, default_value_t = 0.02)]
    pub step: f64,
    /// Use the target dimension m in the exponents.
    #[arg(long)]
    pub literal_m: bool,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct BoundarySource {
    /// Boundary-data JSON file.
    #[arg(long, group = "source")]
    pub boundary: Option<PathBuf>,
    /// Planar field whose trace on the unit circle is decomposed.
    #[arg(long, group = "source")]
    pub field: Option<String>,
}

#[derive(Debug, Args)]
pub struct EpiArgs {
    #[command(flatten)]
    pub source: BoundarySource,
    #[arg(long, default_value = "auto")]
    pub kappa: String,
    #[arg(long)]
    pub lmax: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: BoundarySource,
    #[arg(long)]
    pub lmax: Option<u32>,
    /// Write field samples on a polar grid as CSV.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub sample_angles: usize,
    /// Write the boundary data that was solved.
    #[arg(long)]
    pub boundary_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BlowupArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Decreasing radii.
    #[arg(long, default_value = "0.1,0.01,0.001,0.0001")]
    pub rhos: String,
    /// Expected limit, compared after its own normalization on B_1.
    #[arg(long)]
    pub limit: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// CSV table to append to; overrides the config.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Directory for the per-row reports; overrides the config.
    #[arg(long)]
    pub reports_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

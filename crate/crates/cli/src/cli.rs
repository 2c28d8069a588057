use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Shoot, classify and search profile curves of rotationally symmetric lambda-hypersurfaces.
#[derive(Debug, Parser)]
#[command(name = "lshoot", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one shot and write its samples and events.
    Shoot {
        #[command(flatten)]
        common: Common,
        /// Launch radius.
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
    },
    /// Bisect for the launch radius of the escaping (cylinder) profile.
    FindCylinder {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Bisect for the two closing (torus) launch radii and export closed curves and meshes.
    FindTorus {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Classify a uniform grid of launch radii.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Number of launch radii.
        #[arg(long)]
        grid: Option<usize>,
        /// Lower end of the grid as a fraction of the cylinder radius.
        #[arg(long)]
        from: Option<f64>,
        /// Upper end of the grid as a fraction of the cylinder radius.
        #[arg(long)]
        to: Option<f64>,
    },
    /// Run both searches over a list of lambda values.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambdas: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Bracket width at which bisection stops.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Angular segments of the exported meshes.
    #[arg(long)]
    pub segments: Option<usize>,
    /// Profile points revolved into each mesh (the profile is thinned to at most this many).
    #[arg(long)]
    pub mesh_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Dimension of the hypersurface (profile rotated in R^{n+1}).
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Arc-length budget.
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Escape radius, or `auto`.
    #[arg(long)]
    pub r_max: Option<String>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub event_tol: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Largest step, which also sets the output sample spacing.
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub degeneracy_margin: Option<f64>,
    /// Event that ends a shot: s1, s2, s3, s4 or full.
    #[arg(long)]
    pub scan: Option<String>,
    /// Report lambda, H and curvatures for the opposite unit normal.
    #[arg(long)]
    pub report_flipped: bool,
    /// `key=value` file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "lshoot-out")]
    pub out: PathBuf,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fracindex", version, about = "Negative definiteness of powered geodesic distances and fractional Brownian fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Replay the run recorded in a manifest.json.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Space name (circle, sphere, hyperbolic, euclidean, cylinder, torus, warped) or a JSON descriptor.
    #[arg(long, global = true)]
    pub space: Option<String>,
    /// Circumference(s); comma-separated for a torus.
    #[arg(long = "L", global = true, value_delimiter = ',')]
    pub l: Vec<f64>,
    /// Dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Sphere radius.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Coefficient of the quadratic warp f(z) = 1 + a z².
    #[arg(long = "warp-a", global = true)]
    pub warp_a: Option<f64>,
    #[arg(long = "H", global = true)]
    pub h: Option<f64>,
    /// Number of points.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Point coordinates as JSON, e.g. "[[0.0],[1.5]]".
    #[arg(long, global = true)]
    pub points: Option<String>,
    /// Layout of generated points.
    #[arg(long, global = true, value_enum)]
    pub layout: Option<Layout>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "tol-scale", global = true)]
    pub tol_scale: Option<f64>,
    #[arg(long = "eps-schedule", global = true, value_delimiter = ',')]
    pub eps_schedule: Vec<f64>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    /// Columnar binary (sample only).
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Equispaced,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Flat,
    Hyperboloid,
    Warped,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Pairwise distances and d^{2H}.
    Distance,
    /// Centered-Gram test of negative definiteness.
    CheckNd,
    /// Covariance of the field pinned at an origin.
    Covariance {
        /// Origin coordinates as JSON.
        #[arg(long)]
        origin: Option<String>,
    },
    /// Grid bracket of the fractional index.
    Index {
        #[arg(long = "h-min", default_value_t = 0.05)]
        h_min: f64,
        #[arg(long = "h-max", default_value_t = 1.0)]
        h_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long = "point-sets", default_value_t = 4)]
        point_sets: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long = "search-points", default_value_t = 4)]
        search_points: usize,
    },
    /// Search for a configuration with vanishing form.
    Critical {
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long = "max-sweeps", default_value_t = 400)]
        max_sweeps: usize,
    },
    /// Spans of shortest directions for a configuration.
    ConditionG {
        /// Coefficients as JSON; the antipodal quadruple is used when points are absent.
        #[arg(long)]
        coeffs: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        base: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        a: f64,
    },
    /// Perturbation witness built on an antipodal quadruple.
    Witness,
    /// Realizations of a pinned fractional or stationary field.
    Sample {
        #[arg(long)]
        origin: Option<String>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Sample the stationary field exp(−λ d^{2H}) instead.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Empirical variogram against d^{2H}.
    Variogram {
        #[arg(long)]
        origin: Option<String>,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        /// Pairs as JSON, e.g. "[[0,1],[2,3]]"; 10 random pairs when absent.
        #[arg(long)]
        pairs: Option<String>,
    },
    /// Graph shortest path on a parametric chart.
    MeshGeodesic {
        #[arg(long, value_enum, default_value_t = ChartKind::Flat)]
        chart: ChartKind,
        #[arg(long = "z-min", default_value_t = -1.0)]
        z_min: f64,
        #[arg(long = "z-max", default_value_t = 1.0)]
        z_max: f64,
        #[arg(long = "n-theta", default_value_t = 64)]
        n_theta: usize,
        #[arg(long = "n-z", default_value_t = 17)]
        n_z: usize,
        #[arg(long, default_value_t = 3)]
        stencil: usize,
        /// Source as "theta,z".
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 0.0])]
        from: Vec<f64>,
        /// Target as "theta,z".
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [std::f64::consts::PI, 0.0])]
        to: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Distance => "distance",
            Command::CheckNd => "check-nd",
            Command::Covariance { .. } => "covariance",
            Command::Index { .. } => "index",
            Command::Critical { .. } => "critical",
            Command::ConditionG { .. } => "condition-g",
            Command::Witness => "witness",
            Command::Sample { .. } => "sample",
            Command::Variogram { .. } => "variogram",
            Command::MeshGeodesic { .. } => "mesh-geodesic",
        }
    }
}

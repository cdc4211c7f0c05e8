use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "kslab", version, about = "Nonlocal p-energy experiments on weighted point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// `circle:N`, `interval:N`, `torus2d:N`, `random:N:SEED:SAMPLER`, or a space file.
    #[arg(long, global = true, default_value = "circle:1000")]
    pub space: String,
    /// Torus sidecar JSON for coordinate CSV spaces.
    #[arg(long, global = true)]
    pub sidecar: Option<PathBuf>,
    /// Report path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Plot-ready CSV projection.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "KSLAB_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Omit wall time so identical configurations give byte-identical reports.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    /// Floor inside `|Δ|^{p-2}` for `p < 2`.
    #[arg(long, default_value_t = 1e-9)]
    pub smoothing: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// E_{p,r} over a decreasing radius list with extrapolation.
    EnergySweep {
        #[arg(long, default_value = "sine")]
        field: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        /// linear | smooth | resolution-aware
        #[arg(long, default_value = "smooth")]
        fit: String,
        #[arg(long, default_value_t = 4)]
        window: usize,
    },
    /// Pairing form, its derivative identity and the weak-form identity at one scale.
    PairCheck {
        #[arg(long, default_value = "sine")]
        field: String,
        #[arg(long, default_value = "smooth-random:1")]
        field2: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long = "r")]
        r: f64,
        #[arg(long, default_value_t = 1e-3)]
        t: f64,
    },
    /// Dirichlet minimization of E_{p,r} with boundary data from a CSV `id,value`.
    Solve {
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long = "r")]
        r: f64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Initial guess (field spec); boundary values are imposed on it.
        #[arg(long)]
        initial: Option<String>,
        /// Minimizer CSV `id,value`.
        #[arg(long)]
        minimizer_out: Option<PathBuf>,
    },
    /// Warm-started Dirichlet solves across radii; data imposed on an r-collar of the anchors.
    MinimizerSweep {
        /// CSV with an `id` column listing anchor points.
        #[arg(long)]
        anchors: PathBuf,
        /// Boundary data field.
        #[arg(long, default_value = "ramp")]
        field: String,
        /// Collar width in units of r.
        #[arg(long, default_value_t = 1.0)]
        collar: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Reference field for distance tracking.
        #[arg(long)]
        reference: Option<String>,
    },
    /// Energy measure of cells at one scale.
    Measure {
        #[arg(long, default_value = "sine")]
        field: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long = "r")]
        r: f64,
        /// Cell files: one JSON list-of-lists, or one id CSV per cell.
        #[arg(long, num_args = 1..)]
        cells: Vec<PathBuf>,
        /// Equal-width bins along the first coordinate (instead of --cells).
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Empirical (p,p)-Poincaré constant at ball radius R.
    Poincare {
        #[arg(long, default_value = "sine")]
        field: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, alias = "R")]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// lip | energy-measure
        #[arg(long, default_value = "lip")]
        mode: String,
    },
    /// Calibrate the gluing-inequality constant on random configurations and check fresh ones.
    Fundamental {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Scale; defaults to 3.5 h.
        #[arg(long = "r")]
        r: Option<f64>,
        #[arg(long, default_value_t = 50)]
        calibration: usize,
        #[arg(long, default_value_t = 50)]
        fresh: usize,
    },
    /// Nonlocal total variation sweep, optionally with the Lipschitz-relaxed bound.
    Tv {
        #[arg(long, default_value = "sine")]
        field: String,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
    /// Perimeter of an id set or of coordinate arcs `a:b`.
    Perimeter {
        #[arg(long)]
        set: Option<PathBuf>,
        #[arg(long)]
        arc: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
    /// Extrapolated E_{1,r} against the Lipschitz-relaxed bound for several fields.
    CompareBv {
        #[arg(long, value_delimiter = ',', default_value = "ramp,sine,smooth-indicator")]
        fields: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Size, mass, resolution and doubling diagnostics of a space.
    SpaceInfo,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EnergySweep { .. } => "energy-sweep",
            Command::PairCheck { .. } => "pair-check",
            Command::Solve { .. } => "solve",
            Command::MinimizerSweep { .. } => "minimizer-sweep",
            Command::Measure { .. } => "measure",
            Command::Poincare { .. } => "poincare",
            Command::Fundamental { .. } => "fundamental",
            Command::Tv { .. } => "tv",
            Command::Perimeter { .. } => "perimeter",
            Command::CompareBv { .. } => "compare-bv",
            Command::SpaceInfo => "space-info",
        }
    }
}

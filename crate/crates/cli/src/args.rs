use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "chessboard", version, about = "Kac walks, entwined pairs and the discrete Dirac propagator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the two-state Kac densities.
    KacEvolve(Options),
    /// Empirical Kac densities from sampled walks.
    KacSample(Options),
    /// Evolve the four-state scheme (raw or renormalized).
    DiracEvolve(Options),
    /// Tally signed charge from an ensemble of entwined pairs.
    EntwinedSample(Options),
    /// Compare a sampled grid with a reference on a window.
    Compare(Options),
    /// Extract one time slice of a grid as a profile.
    Slice(Options),
    /// Continuum residuals and their convergence under dt halving.
    Residuals(Options),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::KacEvolve(_) => "kac-evolve",
            Command::KacSample(_) => "kac-sample",
            Command::DiracEvolve(_) => "dirac-evolve",
            Command::EntwinedSample(_) => "entwined-sample",
            Command::Compare(_) => "compare",
            Command::Slice(_) => "slice",
            Command::Residuals(_) => "residuals",
        }
    }

    pub fn options(&self) -> &Options {
        match self {
            Command::KacEvolve(o)
            | Command::KacSample(o)
            | Command::DiracEvolve(o)
            | Command::EntwinedSample(o)
            | Command::Compare(o)
            | Command::Slice(o)
            | Command::Residuals(o) => o,
        }
    }
}

/// Flags shared by every command. Each one overrides the key of the same
/// name in `--config`; values are validated when a command reads them.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lattice spacing in z.
    #[arg(long)]
    pub dz: Option<String>,
    /// Time step; `c * dt` must equal `dz`.
    #[arg(long)]
    pub dt: Option<String>,
    /// Speed (default 1).
    #[arg(long)]
    pub c: Option<String>,
    /// Scattering rate, the mass in the Dirac picture (default 1).
    #[arg(long)]
    pub a: Option<String>,
    /// Number of time steps the lattice supports.
    #[arg(long)]
    pub steps: Option<String>,
    /// Half-width of the z range (default `steps * dz`).
    #[arg(long)]
    pub extent: Option<String>,
    /// RNG seed, required by stochastic commands.
    #[arg(long)]
    pub seed: Option<String>,
    /// Number of sampled paths or accepted pairs.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Earliest reversal time of an entwined pair.
    #[arg(long)]
    pub t_reversal: Option<String>,
    /// `turn-first` or `mark-first` (default).
    #[arg(long)]
    pub stutter_phase: Option<String>,
    /// `raw` (default) or `renormalized`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Worker threads; never changes the output.
    #[arg(long)]
    pub workers: Option<String>,
    /// Output path.
    #[arg(long)]
    pub out: Option<String>,
    /// Charge channel layout: `envelope` (default) or `leg`.
    #[arg(long)]
    pub layout: Option<String>,
    /// Projections `sampled=reference` joined by `;`, e.g. `3+4=1+2`.
    #[arg(long)]
    pub channel_map: Option<String>,
    /// Component 1..4 holding the initial delta (default 1).
    #[arg(long)]
    pub source_state: Option<String>,
    /// Initial direction, `plus` (default) or `minus`.
    #[arg(long)]
    pub direction: Option<String>,
    /// Step budget for finding a reversal marker (default `steps`).
    #[arg(long)]
    pub n_max: Option<String>,
    /// Slice index.
    #[arg(long)]
    pub t: Option<String>,
    /// Signed component combination, e.g. `1+2`.
    #[arg(long)]
    pub combo: Option<String>,
    /// Input grid CSV.
    #[arg(long)]
    pub grid: Option<String>,
    /// Reference grid CSV; computed in-process when absent.
    #[arg(long)]
    pub reference: Option<String>,
    /// Window `radius[:t_start:t_end]` in sites and slices.
    #[arg(long)]
    pub region: Option<String>,
    /// `pairs` (divide counts by the pair count) or `none`.
    #[arg(long)]
    pub normalize: Option<String>,
    /// Initial data: `delta` (default) or `gaussian`.
    #[arg(long)]
    pub init: Option<String>,
    /// Gaussian width for `--init gaussian` and `residuals`.
    #[arg(long)]
    pub width: Option<String>,
    /// Last slice written by `entwined-sample` (default all).
    #[arg(long)]
    pub crop: Option<String>,
}

impl Options {
    pub fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("dz", self.dz.clone()),
            ("dt", self.dt.clone()),
            ("c", self.c.clone()),
            ("a", self.a.clone()),
            ("steps", self.steps.clone()),
            ("extent", self.extent.clone()),
            ("seed", self.seed.clone()),
            ("pairs", self.pairs.clone()),
            ("t-reversal", self.t_reversal.clone()),
            ("stutter-phase", self.stutter_phase.clone()),
            ("mode", self.mode.clone()),
            ("workers", self.workers.clone()),
            ("out", self.out.clone()),
            ("layout", self.layout.clone()),
            ("channel-map", self.channel_map.clone()),
            ("source-state", self.source_state.clone()),
            ("direction", self.direction.clone()),
            ("n-max", self.n_max.clone()),
            ("t", self.t.clone()),
            ("combo", self.combo.clone()),
            ("grid", self.grid.clone()),
            ("reference", self.reference.clone()),
            ("region", self.region.clone()),
            ("normalize", self.normalize.clone()),
            ("init", self.init.clone()),
            ("width", self.width.clone()),
            ("crop", self.crop.clone()),
        ]
    }
}

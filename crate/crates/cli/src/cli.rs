use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::units::{Cn2, Length};

#[derive(Debug, Parser)]
#[command(name = "oam-forge", version, about = "Vortex-beam diffraction, turbulence and classification toolkit")]
pub struct Cli {
    /// Worker threads; 1 is the determinism reference [count]
    #[arg(long, global = true, env = "OAM_FORGE_THREADS")]
    pub threads: Option<usize>,
    /// Overlay of flag defaults: key=value lines or a JSON object; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Add a generation timestamp to CSV and JSON outputs
    #[arg(long, global = true)]
    pub stamp: bool,
    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a source or propagated vortex beam to PGM plus a binary field
    Beam(BeamArgs),
    /// Propagate a stored field by spectral transfer function or direct quadrature
    Propagate(PropagateArgs),
    /// Generate von Karman phase screens, optionally with a structure-function report
    Screen(ScreenArgs),
    /// Synthesize a labelled image dataset with manifest
    Dataset(DatasetArgs),
    /// Train the classifier on a dataset directory
    Train(TrainArgs),
    /// Evaluate a checkpoint: metrics JSON and confusion-matrix CSV
    Eval(EvalArgs),
    /// Write the y = 0 intensity profile of a propagated beam to CSV
    Xsection(XsectionArgs),
    /// Run the built-in oracle and invariant checks
    Verify(VerifyArgs),
}


#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Samples per grid side [count]
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// Grid side length [length, e.g. 26mm]
    #[arg(long, default_value = "26mm")]
    pub extent: Length,
    /// Wavelength [length, e.g. 632.8nm]
    #[arg(long, default_value = "632.8nm")]
    pub wavelength: Length,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Output image side [pixels]
    #[arg(long, default_value_t = 360)]
    pub size: usize,
    /// Side of the square window rendered to the image [length]
    #[arg(long, default_value = "6mm")]
    pub crop: Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldMethod {
    /// closed-form diffracted field
    Analytic,
    /// FFT transfer-function propagation of the source
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropMethod {
    Spectral,
    Quadrature,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BeamArgs {
    /// Topological charge [integer]
    #[arg(long)]
    pub ell: u32,
    /// Propagation distance; omit for the source plane [length, e.g. 0.70m]
    #[arg(long)]
    pub z: Option<Length>,
    /// Source waist w0 [length]
    #[arg(long, default_value = "2mm")]
    pub waist: Length,
    #[arg(long, value_enum, default_value_t = FieldMethod::Analytic)]
    pub method: FieldMethod,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub render: RenderArgs,
    /// Output prefix; writes PREFIX.oamf and PREFIX.pgm
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PropagateArgs {
    /// Input field file (.oamf)
    #[arg(long)]
    pub input: PathBuf,
    /// Propagation distance [length]
    #[arg(long)]
    pub z: Length,
    #[arg(long, value_enum, default_value_t = PropMethod::Spectral)]
    pub method: PropMethod,
    /// Zero transfer-function frequencies the sampled chirp cannot represent
    #[arg(long)]
    pub band_limit: bool,
    #[command(flatten)]
    pub render: RenderArgs,
    /// Output prefix; writes PREFIX.oamf and PREFIX.pgm
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ScreenArgs {
    /// Structure constant [m^-2/3 or mm^-2/3, e.g. 5e-10mm^-2/3]
    #[arg(long, default_value = "5e-8m^-2/3")]
    pub cn2: Cn2,
    /// Path length the screen represents [length]
    #[arg(long, default_value = "1m")]
    pub z: Length,
    /// Outer scale L0 [length]
    #[arg(long, default_value = "10m")]
    pub outer_scale: Length,
    /// Inner scale l0; 0m disables the inner-scale cutoff [length]
    #[arg(long, default_value = "10mm")]
    pub inner_scale: Length,
    /// Subharmonic levels added below the grid frequency [count]
    #[arg(long, default_value_t = 3)]
    pub subharmonics: u32,
    /// Master seed; screen i uses a seed derived from (seed, i)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of screens [count]
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Also write structure.csv comparing the ensemble to 6.88 (r/r0)^(5/3)
    #[arg(long)]
    pub structure: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DatasetArgs {
    /// Charges: range 1-5 or list 1,3 [integers]
    #[arg(long, default_value = "1-5")]
    pub ells: String,
    /// Distances: start:stop:step or list [lengths, e.g. 0.40m:1.00m:0.05m]
    #[arg(long, default_value = "0.40m:1.00m:0.05m")]
    pub zs: String,
    /// Images per class as train/val/test [counts]
    #[arg(long, default_value = "86/10/10")]
    pub per_class: String,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Source waist w0 [length]
    #[arg(long, default_value = "2mm")]
    pub waist: Length,
    /// Standard deviation of the random beam offset [length]
    #[arg(long, default_value = "0.2mm")]
    pub misalignment: Length,
    /// Turn turbulence off
    #[arg(long)]
    pub no_turbulence: bool,
    /// Structure constant [m^-2/3 or mm^-2/3]
    #[arg(long, default_value = "5e-8m^-2/3")]
    pub cn2: Cn2,
    /// Outer scale L0 [length]
    #[arg(long, default_value = "10m")]
    pub outer_scale: Length,
    /// Inner scale l0 [length]
    #[arg(long, default_value = "10mm")]
    pub inner_scale: Length,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub render: RenderArgs,
    /// Replace an existing non-empty output directory
    #[arg(long)]
    pub overwrite: bool,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Dataset directory (with manifest.json)
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path, rewritten after every epoch
    #[arg(long)]
    pub out: PathBuf,
    /// Resume from this checkpoint instead of a fresh model
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Batch size [samples]
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Dropout probability before the dense layer
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    /// Seed for initialization, shuffling and dropout
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Network input side [pixels, multiple of 4]
    #[arg(long, default_value_t = 64)]
    pub input: usize,
    /// Per-epoch history CSV [default: <out>.history.csv]
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    /// Checkpoint file (.oamc)
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset directory
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Directory for metrics.json and confusion.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct XsectionArgs {
    /// Topological charge [integer]
    #[arg(long)]
    pub ell: u32,
    /// Propagation distance [length]
    #[arg(long)]
    pub z: Length,
    /// Source waist w0 [length]
    #[arg(long, default_value = "2mm")]
    pub waist: Length,
    #[arg(long, value_enum, default_value_t = FieldMethod::Analytic)]
    pub method: FieldMethod,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output CSV: x in metres, intensity normalized to the profile maximum
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::Quick)]
    pub suite: Suite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// seconds: closed forms, one closure case, lobes, loss and gradients
    Quick,
    /// about a minute: adds all low-charge closures, ring monotonicity and turbulence statistics
    Full,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpmix::augment_depth::DEFAULT_ALPHA;
use dpmix::augment_points::DEFAULT_JITTER_CLIP;
use dpmix::baseline::DEFAULT_TEMPERATURE;
use dpmix::metrics::Matching;
use dpmix::projection::DEFAULT_SIZE;
use dpmix::CollisionPolicy;

/// Point cloud video to depth video pipeline with late fusion and
/// segmentation metrics.
///
/// Commands that take a directory process every matching file in it, pairing
/// files across directories by file stem.
#[derive(Debug, Parser)]
#[command(name = "dpmix", version)]
pub struct Cli {
    /// Worker threads for directory-level commands (0 = all cores).
    #[arg(long, global = true, env = "DPMIX_JOBS", default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labelled corpus (`<name>.pcv` + `<name>.labels`).
    Synth(SynthArgs),
    /// Project point cloud videos (.pcv) to depth videos (.dpv).
    Convert(ConvertArgs),
    /// Apply point transforms to a .pcv or CutMix to a .dpv.
    Augment(AugmentArgs),
    /// Fit a nearest-centroid expert on labelled videos.
    TrainBaseline(TrainArgs),
    /// Write per-frame class probabilities (.csv) with a trained expert.
    Predict(PredictArgs),
    /// Average (or weight) prediction matrices from several experts.
    Fuse(FuseArgs),
    /// Turn prediction matrices into label files by per-frame argmax.
    Decode(DecodeArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Write one depth frame as a binary PGM image.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub videos: usize,
    #[arg(long, default_value_t = 150)]
    pub frames: usize,
    #[arg(long, default_value_t = 2048)]
    pub points: usize,
    #[arg(long, default_value_t = 19)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Collision {
    MinZ,
    MaxZ,
    Last,
}

impl From<Collision> for CollisionPolicy {
    fn from(c: Collision) -> Self {
        match c {
            Collision::MinZ => CollisionPolicy::KeepMinZ,
            Collision::MaxZ => CollisionPolicy::KeepMaxZ,
            Collision::Last => CollisionPolicy::KeepLast,
        }
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// A .pcv file or a directory of them.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output .dpv file, or directory when the input is a directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SIZE)]
    pub width: usize,
    #[arg(long, default_value_t = DEFAULT_SIZE)]
    pub height: usize,
    /// Denominator guard; defaults to 1e-6 * max(range_x, range_y, 1).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = Collision::MinZ)]
    pub collision: Collision,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub background: f32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Mirror across the frame center; may be repeated.
    #[arg(long, value_enum)]
    pub flip: Vec<Axis>,
    /// Fixed scale factor about the frame center.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Scale factor drawn uniformly from LO,HI.
    #[arg(long, value_name = "LO,HI", value_parser = parse_pair)]
    pub random_scale: Option<(f64, f64)>,
    /// Gaussian jitter with this standard deviation.
    #[arg(long)]
    pub jitter_sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_JITTER_CLIP)]
    pub jitter_clip: f64,

    /// Second depth video to mix into the input.
    #[arg(long, value_name = "OTHER.dpv")]
    pub cutmix: Option<PathBuf>,
    /// Labels of the input video (CutMix only).
    #[arg(long, requires = "cutmix")]
    pub labels: Option<PathBuf>,
    /// Labels of the other video (CutMix only).
    #[arg(long, requires = "cutmix")]
    pub cutmix_labels: Option<PathBuf>,
    /// Where to write the mixed soft labels (CutMix only).
    #[arg(long, requires = "cutmix")]
    pub soft_labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub cutmix_alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Modality {
    Point,
    Depth,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub modality: Modality,
    /// Directory of .pcv (point) or .dpv (depth) videos.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory of `<stem>.labels` files; defaults to the data directory.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Depth feature pooling grid.
    #[arg(long, value_name = "WxH", default_value = "4x4", value_parser = parse_grid)]
    pub grid: (usize, usize),
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// A video file or directory of videos matching the model's modality.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output .csv file, or directory when the input is a directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Prediction files, or directories paired by file stem; repeat per expert.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated expert weights; uniform by default.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted .labels or .csv file, or a directory of them.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth .labels file or directory.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5")]
    pub taus: Vec<f64>,
    #[arg(long, default_value = "optimal", value_parser = parse_matching)]
    pub matching: Matching,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the confusion matrix as CSV here.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_matching(s: &str) -> Result<Matching, String> {
    s.parse().map_err(|e: dpmix::Error| e.to_string())
}

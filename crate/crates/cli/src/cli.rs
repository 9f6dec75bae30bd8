use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hicp_core::Group;

/// Comma-separated list parsed as a single value, so a later occurrence
/// replaces an earlier one instead of appending to it.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(List(Vec::new()));
        }
        s.split(',')
            .map(|part| part.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", part.trim())))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

#[derive(Debug, Parser)]
#[command(name = "hicp", version, about = "Close-proximity human keypoint datasets, 2D/3D evaluation and lifting", args_override_self = true)]
pub struct Cli {
    /// TOML file supplying flag values; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Omit the timestamp from reports.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Print the report on standard output as well.
    #[arg(long, global = true)]
    pub stdout: bool,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crop every annotated person into the Basic (and Headless) subsets.
    Crop(CropArgs),
    /// OKS-based precision/recall of detections against ground truth.
    Eval2d(Eval2dArgs),
    /// Lift 2D detections to 3D using aligned depth frames.
    Lift(LiftArgs),
    /// Estimate a rigid transform from point correspondences.
    Register(RegisterArgs),
    /// Distance statistics of a 3D keypoint trajectory.
    Eval3d(Eval3dArgs),
    /// Render a synthetic scene with ground truth.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Crop(_) => "crop",
            Command::Eval2d(_) => "eval2d",
            Command::Lift(_) => "lift",
            Command::Register(_) => "register",
            Command::Eval3d(_) => "eval3d",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Args)]
pub struct CropArgs {
    /// COCO keypoint annotation JSON.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Directory holding the source images named in `file_name`.
    #[arg(long)]
    pub images: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum crop area in px².
    #[arg(long, default_value_t = 20000.0)]
    pub min_area: f64,
    /// Also build the Headless subset.
    #[arg(long)]
    pub headless: bool,
    /// Extra pixels around each person box.
    #[arg(long, default_value_t = 0.0)]
    pub padding: f64,
    /// Extra pixels cut beyond the head keypoints.
    #[arg(long, default_value_t = 0.0)]
    pub head_margin: f64,
    /// Keypoint layout name, or `auto` to infer it from the keypoint count.
    #[arg(long, default_value = "auto")]
    pub layout: String,
}

#[derive(Debug, Args)]
pub struct Eval2dArgs {
    /// Ground-truth COCO annotation JSON.
    #[arg(long)]
    pub gt: PathBuf,
    /// Detections (COCO results list). An empty file counts as no detections.
    #[arg(long)]
    pub dt: PathBuf,
    /// Keypoint groups to evaluate.
    #[arg(long, default_value = "body")]
    pub group: List<Group>,
    /// TOML file with per-keypoint kappas and scale rule.
    #[arg(long)]
    pub kappas: Option<PathBuf>,
    /// OKS thresholds (default 0.50:0.05:0.95).
    #[arg(long)]
    pub thresholds: Option<List<f64>>,
    /// Add one report per visibility category.
    #[arg(long)]
    pub by_category: bool,
    /// Also report 101-point interpolated AP.
    #[arg(long)]
    pub interpolated: bool,
    #[arg(long, default_value = "auto")]
    pub layout: String,
    /// JSON report path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot-ready per-threshold CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Rect,
    Disc,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    /// Directory of depth frames (16-bit PGM or PNG, millimeters).
    #[arg(long)]
    pub depth_dir: PathBuf,
    /// Detections (COCO results list); the best-scoring one per image is lifted.
    #[arg(long)]
    pub detections: PathBuf,
    /// Camera intrinsics TOML.
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Minimum keypoint confidence.
    #[arg(long, default_value_t = 0.1)]
    pub conf: f64,
    /// Rigid transform TOML from the camera frame to another frame.
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// CSV `image_id,t,depth_file` (default: `<image_id>.pgm`, t = (image_id - 1) / fps).
    #[arg(long)]
    pub frame_index: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value = "auto")]
    pub layout: String,
    /// Neighborhood radius in meters for body keypoints.
    #[arg(long, default_value_t = 0.020)]
    pub body_radius: f64,
    #[arg(long, default_value_t = 0.003)]
    pub hand_radius: f64,
    #[arg(long, default_value_t = 0.003)]
    pub face_radius: f64,
    #[arg(long, value_enum, default_value_t = WindowArg::Rect)]
    pub window: WindowArg,
    #[arg(long, default_value_t = 0.1)]
    pub min_valid_fraction: f64,
    /// Output trajectory (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report path (default: standard output).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnchorMode {
    /// Keep the fitted rotation, replace the translation.
    Replace,
    /// Refit the rotation with the translation pinned.
    Refit,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Correspondences, one `sx sy sz tx ty tz` per line.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Measured translation `x,y,z` (target frame).
    #[arg(long)]
    pub anchor: Option<List<f64>>,
    #[arg(long, value_enum, default_value_t = AnchorMode::Replace)]
    pub anchor_mode: AnchorMode,
    #[arg(long, default_value = "source")]
    pub source: String,
    #[arg(long, default_value = "target")]
    pub target: String,
    /// Output transform TOML.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Relative,
    Absolute,
}

#[derive(Debug, Args)]
pub struct Eval3dArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Detected trajectory (JSON lines).
    #[arg(long)]
    pub traj: PathBuf,
    /// MoCap markers CSV `t,marker_id,x,y,z` (absolute mode).
    #[arg(long)]
    pub mocap: Option<PathBuf>,
    /// Keypoint-to-marker pairing TOML (absolute mode).
    #[arg(long)]
    pub pairing: Option<PathBuf>,
    /// Distance bins in meters.
    #[arg(long, default_value = "0.025,0.05,0.1")]
    pub bins: List<f64>,
    /// Confidence thresholds.
    #[arg(long, default_value = "0.1,0.3")]
    pub conf: List<f64>,
    /// Keypoints left out of absolute statistics: `shoulders`, `none` or indices.
    #[arg(long, default_value = "shoulders")]
    pub exclude: String,
    /// Transform TOML mapping MoCap coordinates into the trajectory frame.
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Maximum |Δt| in seconds when pairing frames.
    #[arg(long, default_value_t = hicp_core::eval3d::DEFAULT_TIME_TOLERANCE)]
    pub tolerance: f64,
    /// Name of the frame the trajectory is expressed in.
    #[arg(long, default_value = "camera")]
    pub traj_frame: String,
    /// Layout used to resolve `shoulders`.
    #[arg(long, default_value = "coco17")]
    pub layout: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DepthFormat {
    Pgm,
    Png,
}

impl DepthFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DepthFormat::Pgm => "pgm",
            DepthFormat::Png => "png",
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene TOML.
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scene seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = DepthFormat::Pgm)]
    pub depth_format: DepthFormat,
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;

use error::CliError;

/// Fuse depth and semantic label maps into a labeled TSDF volume.
#[derive(Debug, Parser)]
#[command(name = "labelfuse", version, args_override_self = true)]
struct Cli {
    /// key=value file of default flags for the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic labeled sequence
    Synth(SynthArgs),
    /// Fuse a sequence directory into a volume
    Fuse(FuseArgs),
    /// Raycast label, confidence, depth and shading images from a volume
    Render(RenderArgs),
    /// Extract a labeled triangle mesh as PLY
    Mesh(MeshArgs),
    /// Compare two volumes or two directories of category maps
    Eval(EvalArgs),
    /// Run the label-noise sweep on a synthetic scene and emit CSV
    Sweep(SweepArgs),
    /// Rasterize polygon annotations into category and score maps
    Rasterize(RasterizeArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SynthArgs {
    /// scene description file; the built-in room when omitted
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    frames: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// probability of switching each object pixel's label
    #[arg(long, default_value_t = 0.0)]
    noise_p: f64,
    #[arg(long, default_value_t = 2.5)]
    orbit_radius: f64,
    #[arg(long, default_value_t = 1.6)]
    orbit_height: f64,
    /// standard deviation of additive depth noise in meters
    #[arg(long, default_value_t = 0.0)]
    depth_noise: f32,
    #[arg(long, default_value_t = labelfuse::io::DEFAULT_DEPTH_SCALE)]
    depth_scale: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Encoding {
    Packed,
    Full,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct FuseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    volume_out: PathBuf,
    #[arg(long, default_value_t = 0.03)]
    voxel_size: f32,
    /// `n` or `nx,ny,nz`
    #[arg(long, default_value = "128", value_parser = commands::parse_dims)]
    dims: [usize; 3],
    /// world position of voxel (0,0,0)'s corner; centered on the scene
    /// bounds when omitted
    #[arg(long, value_parser = commands::parse_vec3)]
    origin: Option<[f32; 3]>,
    /// truncation distance; 4 voxels when omitted
    #[arg(long)]
    mu: Option<f32>,
    #[arg(long, default_value_t = 64.0)]
    w_max: f32,
    #[arg(long, default_value_t = 20.0)]
    w_clamp: f32,
    /// update labels along the whole ray instead of only near the surface
    #[arg(long)]
    label_full_ray: bool,
    /// fuse geometry only
    #[arg(long)]
    no_labels: bool,
    #[arg(long, value_enum, default_value_t = Encoding::Packed)]
    encoding: Encoding,
    #[arg(long, default_value_t = labelfuse::io::DEFAULT_DEPTH_SCALE)]
    depth_scale: f32,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct RenderArgs {
    #[arg(long)]
    volume: PathBuf,
    /// index into --trajectory (or the sequence's trajectory.txt)
    #[arg(long, conflicts_with = "pose")]
    pose_index: Option<usize>,
    /// `tx,ty,tz,qx,qy,qz,qw`, world-from-camera
    #[arg(long)]
    pose: Option<String>,
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// intrinsics file; 320x240, f = 300 when omitted
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    max_range: f32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct MeshArgs {
    #[arg(long)]
    volume: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    Volume,
    Frames,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct EvalArgs {
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::Volume)]
    mode: EvalMode,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SweepArgs {
    /// comma-separated noise levels; 0 to 0.7 in steps of 0.05 when omitted
    #[arg(long, value_parser = commands::parse_p_levels)]
    p_levels: Option<Levels>,
    #[arg(long, default_value_t = 200)]
    frames: usize,
    #[arg(long, default_value = "128", value_parser = commands::parse_dims)]
    dims: [usize; 3],
    #[arg(long, default_value_t = 0.03)]
    voxel_size: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 2.5)]
    orbit_radius: f64,
    #[arg(long, default_value_t = 1.6)]
    orbit_height: f64,
    #[arg(long, default_value_t = 20.0)]
    w_clamp: f32,
    #[arg(long)]
    label_full_ray: bool,
    /// CSV path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// also save the reference and every noisy volume here
    #[arg(long)]
    volume_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Levels(Vec<f64>);

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct RasterizeArgs {
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::Render(a) => commands::render(a),
        Command::Mesh(a) => commands::mesh(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Rasterize(a) => commands::rasterize(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(&Cli::command(), std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}

//! Command-line front end for the mosaicking pipeline.
//!
//! Five commands cover the pipeline end to end: `detect` and `match`
//! expose the feature stages, `stitch` builds mosaics from frame lists
//! or plan files, `simulate` generates synthetic survey datasets with
//! ground truth, and `evaluate` scores a mosaic against that truth.
//! `simulate | stitch | evaluate` composes into a full closed-loop run.
//!
//! Exit codes: 0 success, 2 I/O, 3 configuration, 4 partial stitch
//! (prefix written), 5 no consensus / no overlap.

mod config;
mod viz;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use mosaic_core::features::{detect_and_describe, keypoints_from_json, keypoints_to_json, Keypoint};
use mosaic_core::flightsim::{
    evaluate_mosaic, generate_flight, poses_from_json, poses_to_json, procedural_scene, SimError,
};
use mosaic_core::integral::IntegralImage;
use mosaic_core::io::{load_image, save_image};
use mosaic_core::matching::match_descriptors;
use mosaic_core::raster::{to_grayscale, ImageError, RgbImage, StitchDirection};
use mosaic_core::stitcher::{build_mosaic, stitch_sequence, MosaicPlan, StitchReport};

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "mosaic",
    version,
    about = "Feature-based image mosaicking: detect, match, stitch, simulate, evaluate"
)]
struct Cli {
    /// JSON run configuration; missing sections fall back to defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides every seeded stage in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (created if absent).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Also write diagnostic overlay images.
    #[arg(long, global = true)]
    viz: bool,

    /// Plain log output (always on; accepted for script compatibility).
    #[arg(long, global = true)]
    plain: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect keypoints in one image and write keypoints.json.
    Detect {
        /// Input image (png, ppm, pgm).
        image: PathBuf,
    },
    /// Match two inputs and write matches.json. An input is either an
    /// image or a keypoints.json produced by `detect`.
    Match {
        a: PathBuf,
        b: PathBuf,
    },
    /// Stitch frames into a mosaic; writes mosaic.png and report.json.
    Stitch {
        /// Frame images, in stitch order. Mutually exclusive with --plan.
        frames: Vec<PathBuf>,
        /// Grid plan JSON; frame paths resolve relative to the plan file.
        #[arg(long, conflicts_with = "frames")]
        plan: Option<PathBuf>,
        /// Camera travel direction for a plain frame sequence.
        #[arg(long, value_enum, default_value_t = DirectionArg::BottomToTop)]
        direction: DirectionArg,
    },
    /// Generate a synthetic survey: frames/, poses.json, plan.json.
    Simulate {
        /// Scene image to fly over.
        #[arg(long, conflicts_with = "procedural_scene")]
        scene: Option<PathBuf>,
        /// Generate the scene procedurally, e.g. 2100x1600; writes scene.png.
        #[arg(long, value_name = "WxH")]
        procedural_scene: Option<String>,
        /// Seed for the procedural scene (defaults to the flight seed).
        #[arg(long)]
        scene_seed: Option<u64>,
        /// Grid columns (serpentine legs)
        #[arg(long)]
        columns: Option<u32>,
        /// Frames per leg
        #[arg(long)]
        rows: Option<u32>,
        /// Overlap fraction between adjacent frames, in (0, 0.9].
        #[arg(long)]
        overlap: Option<f64>,
        /// Pose jitter standard deviation, pixels.
        #[arg(long)]
        jitter: Option<f64>,
        /// Additive brightness drift per frame, gray levels.
        #[arg(long)]
        drift: Option<f64>,
    },
    /// Score a mosaic against the simulator's ground truth.
    Evaluate {
        #[arg(long)]
        mosaic: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Stitch report (for frame placements and seam bookkeeping).
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    BottomToTop,
    TopToBottom,
    LeftToRight,
    RightToLeft,
}

impl From<DirectionArg> for StitchDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::BottomToTop => StitchDirection::BottomToTop,
            DirectionArg::TopToBottom => StitchDirection::TopToBottom,
            DirectionArg::LeftToRight => StitchDirection::LeftToRight,
            DirectionArg::RightToLeft => StitchDirection::RightToLeft,
        }
    }
}

/// Failure classes, one per exit code.
enum CmdError {
    Io(String),
    Config(String),
    /// Some pairs stitched; the prefix and report were written.
    Partial(String),
    /// Nothing aligned: no consensus or no overlap.
    NoConsensus(String),
}

impl CmdError {
    fn exit_code(&self) -> i32 {
        match self {
            CmdError::Io(_) => 2,
            CmdError::Config(_) => 3,
            CmdError::Partial(_) => 4,
            CmdError::NoConsensus(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Io(m) | CmdError::Config(m) | CmdError::Partial(m) | CmdError::NoConsensus(m) => m,
        }
    }
}

impl From<ImageError> for CmdError {
    fn from(e: ImageError) -> Self {
        CmdError::Io(e.to_string())
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(m) => CmdError::Io(m),
            ConfigError::Invalid(m) => CmdError::Config(m),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and are successes; real
            // argument problems are configuration errors.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            std::process::exit(if is_help { 0 } else { 3 });
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("mosaic: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    config.override_seed(cli.seed);
    fs::create_dir_all(&cli.out)
        .map_err(|e| CmdError::Io(format!("cannot create {}: {e}", cli.out.display())))?;

    match cli.command {
        Command::Detect { image } => cmd_detect(&cli.out, cli.viz, &config, &image),
        Command::Match { a, b } => cmd_match(&cli.out, cli.viz, &config, &a, &b),
        Command::Stitch { frames, plan, direction } => {
            cmd_stitch(&cli.out, &config, &frames, plan.as_deref(), direction.into())
        }
        Command::Simulate {
            scene,
            procedural_scene: procedural,
            scene_seed,
            columns,
            rows,
            overlap,
            jitter,
            drift,
        } => {
            let mut flight = config.flight.clone();
            if let Some(v) = columns {
                flight.columns = v;
            }
            if let Some(v) = rows {
                flight.rows = v;
            }
            if let Some(v) = overlap {
                flight.overlap_fraction = v;
            }
            if let Some(v) = jitter {
                flight.jitter_sigma = v;
            }
            if let Some(v) = drift {
                flight.brightness_drift = v;
            }
            config.flight = flight;
            config.validate()?;
            cmd_simulate(&cli.out, &config, scene.as_deref(), procedural.as_deref(), scene_seed)
        }
        Command::Evaluate { mosaic, scene, poses, plan, report } => {
            cmd_evaluate(&cli.out, &config, &mosaic, &scene, &poses, &plan, &report)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CmdError> {
    fs::write(path, text).map_err(|e| CmdError::Io(format!("cannot write {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, CmdError> {
    fs::read_to_string(path)
        .map_err(|e| CmdError::Io(format!("cannot read {}: {e}", path.display())))
}

fn detect_in(image: &RgbImage, config: &RunConfig) -> Vec<Keypoint> {
    let ii = IntegralImage::new(&to_grayscale(image));
    detect_and_describe(&ii, &config.detector_params())
}

fn cmd_detect(
    out: &Path,
    viz: bool,
    config: &RunConfig,
    image_path: &Path,
) -> Result<(), CmdError> {
    let image = load_image(image_path)?;
    let keypoints = detect_in(&image, config);
    let json_path = out.join("keypoints.json");
    write_text(&json_path, &keypoints_to_json(&keypoints))?;
    if viz {
        let overlay = viz::draw_keypoints(&image, &keypoints);
        save_image(&overlay, &out.join("keypoints.png"))?;
    }
    println!("keypoints: {} -> {}", keypoints.len(), json_path.display());
    Ok(())
}

/// A match input: an image to run detection on, or a ready-made
/// keypoints.json from a previous `detect`.
fn load_match_input(
    path: &Path,
    config: &RunConfig,
) -> Result<(Vec<Keypoint>, Option<RgbImage>), CmdError> {
    let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| {
        e.eq_ignore_ascii_case("json")
    });
    if is_json {
        let keypoints = keypoints_from_json(&read_text(path)?)
            .map_err(|e| CmdError::Io(format!("keypoints {}: {e}", path.display())))?;
        Ok((keypoints, None))
    } else {
        let image = load_image(path)?;
        let keypoints = detect_in(&image, config);
        Ok((keypoints, Some(image)))
    }
}

fn cmd_match(
    out: &Path,
    viz: bool,
    config: &RunConfig,
    a: &Path,
    b: &Path,
) -> Result<(), CmdError> {
    let (kp_a, img_a) = load_match_input(a, config)?;
    let (kp_b, img_b) = load_match_input(b, config)?;

    // No keypoints on a side means no matches, which is a valid result:
    // matching itself did not fail.
    let matches = if kp_a.is_empty() || kp_b.is_empty() {
        Vec::new()
    } else {
        match_descriptors(&kp_a, &kp_b, &config.match_params())
            .map_err(|e| CmdError::Io(e.to_string()))?
    };

    let json_path = out.join("matches.json");
    let json = serde_json::to_string_pretty(&matches).expect("match serialization cannot fail");
    write_text(&json_path, &json)?;

    if viz {
        match (&img_a, &img_b) {
            (Some(ia), Some(ib)) => {
                let overlay = viz::draw_matches(ia, ib, &kp_a, &kp_b, &matches);
                save_image(&overlay, &out.join("matches.png"))?;
            }
            _ => {
                return Err(CmdError::Config(
                    "--viz needs image inputs; keypoint JSON carries no pixels".to_string(),
                ))
            }
        }
    }
    println!("matches: {} -> {}", matches.len(), json_path.display());
    Ok(())
}

/// Exit classification shared by both stitch modes: full success, a
/// partial prefix, or no alignment at all.
fn finish_stitch(
    out: &Path,
    mosaic: &RgbImage,
    report: &StitchReport,
) -> Result<(), CmdError> {
    let mosaic_path = out.join("mosaic.png");
    save_image(mosaic, &mosaic_path)?;
    write_text(&out.join("report.json"), &report.to_json())?;
    println!(
        "mosaic: {}x{}, pairs: {}, failures: {} -> {}",
        mosaic.width(),
        mosaic.height(),
        report.pairs.len(),
        report.failures.len(),
        mosaic_path.display()
    );
    if report.failures.is_empty() {
        Ok(())
    } else {
        let detail = report.failures.join("; ");
        if report.pairs.is_empty() {
            Err(CmdError::NoConsensus(detail))
        } else {
            Err(CmdError::Partial(detail))
        }
    }
}

fn cmd_stitch(
    out: &Path,
    config: &RunConfig,
    frames: &[PathBuf],
    plan_path: Option<&Path>,
    direction: StitchDirection,
) -> Result<(), CmdError> {
    let params = config.stitch_params();
    match plan_path {
        Some(plan_path) => {
            let plan: MosaicPlan = serde_json::from_str(&read_text(plan_path)?)
                .map_err(|e| CmdError::Io(format!("plan {}: {e}", plan_path.display())))?;
            plan.validate().map_err(CmdError::Config)?;
            let base = plan_path.parent().unwrap_or(Path::new("."));
            let mut images = Vec::with_capacity(plan.frames.len());
            for name in &plan.frames {
                images.push(load_image(&base.join(name))?);
            }
            let (mosaic, report) = build_mosaic(&plan, &images, &params);
            finish_stitch(out, &mosaic, &report)
        }
        None => {
            if frames.is_empty() {
                return Err(CmdError::Config(
                    "stitch needs frame images or --plan".to_string(),
                ));
            }
            let mut images = Vec::with_capacity(frames.len());
            for path in frames {
                images.push(load_image(path)?);
            }
            let (mosaic, report) = stitch_sequence(&images, direction, &params);
            finish_stitch(out, &mosaic, &report)
        }
    }
}

fn parse_dimensions(arg: &str) -> Result<(u32, u32), CmdError> {
    let parts: Vec<&str> = arg.split(['x', 'X']).collect();
    let parse = |s: &str| s.trim().parse::<u32>().ok().filter(|&v| v > 0);
    match parts.as_slice() {
        [w, h] => match (parse(w), parse(h)) {
            (Some(w), Some(h)) => Ok((w, h)),
            _ => Err(CmdError::Config(format!("cannot parse scene size {arg:?}"))),
        },
        _ => Err(CmdError::Config(format!(
            "scene size must look like 2100x1600, got {arg:?}"
        ))),
    }
}

fn cmd_simulate(
    out: &Path,
    config: &RunConfig,
    scene_path: Option<&Path>,
    procedural: Option<&str>,
    scene_seed: Option<u64>,
) -> Result<(), CmdError> {
    let flight = config.flight_config();
    let scene = match (scene_path, procedural) {
        (Some(path), None) => load_image(path)?,
        (None, Some(size)) => {
            let (w, h) = parse_dimensions(size)?;
            let scene = procedural_scene(w, h, scene_seed.unwrap_or(flight.rng_seed));
            save_image(&scene, &out.join("scene.png"))?;
            scene
        }
        (None, None) => {
            return Err(CmdError::Config(
                "simulate needs --scene or --procedural-scene".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };

    let (frames, poses, plan) = generate_flight(&scene, &config.camera_config(), &flight)
        .map_err(|e| match e {
            // The grid does not fit the scene: a configuration problem.
            SimError::SceneTooSmall { .. } => CmdError::Config(e.to_string()),
            other => CmdError::Config(other.to_string()),
        })?;

    let frames_dir = out.join("frames");
    fs::create_dir_all(&frames_dir)
        .map_err(|e| CmdError::Io(format!("cannot create {}: {e}", frames_dir.display())))?;
    for (k, frame) in frames.iter().enumerate() {
        save_image(frame, &frames_dir.join(format!("frame_{k:03}.png")))?;
    }
    write_text(&out.join("poses.json"), &poses_to_json(&poses))?;
    let plan_json =
        serde_json::to_string_pretty(&plan).expect("plan serialization cannot fail");
    write_text(&out.join("plan.json"), &plan_json)?;
    println!(
        "frames: {} ({}x{} grid) -> {}",
        frames.len(),
        plan.columns,
        plan.rows,
        frames_dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    out: &Path,
    config: &RunConfig,
    mosaic_path: &Path,
    scene_path: &Path,
    poses_path: &Path,
    plan_path: &Path,
    report_path: &Path,
) -> Result<(), CmdError> {
    let mosaic = load_image(mosaic_path)?;
    let scene = load_image(scene_path)?;
    let poses = poses_from_json(&read_text(poses_path)?)
        .map_err(|e| CmdError::Io(format!("poses {}: {e}", poses_path.display())))?;
    let plan: MosaicPlan = serde_json::from_str(&read_text(plan_path)?)
        .map_err(|e| CmdError::Io(format!("plan {}: {e}", plan_path.display())))?;
    plan.validate().map_err(CmdError::Config)?;
    let report = StitchReport::from_json(&read_text(report_path)?)
        .map_err(|e| CmdError::Io(format!("report {}: {e}", report_path.display())))?;

    let metrics = evaluate_mosaic(
        &mosaic,
        &scene,
        &poses,
        &plan,
        &report.frame_placements,
        &config.camera_config(),
    )
    .map_err(|e| CmdError::NoConsensus(e.to_string()))?;

    let json_path = out.join("metrics.json");
    write_text(&json_path, &metrics.to_json())?;
    let worst_seam = metrics.seam_errors.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "rmse {:.3} mae {:.3} coverage {:.4} interior_mae {:.3} worst_seam {:.2} -> {}",
        metrics.rmse,
        metrics.mae,
        metrics.coverage,
        metrics.interior_mae,
        worst_seam,
        json_path.display()
    );
    Ok(())
}

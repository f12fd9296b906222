//! `viewaug`: view-augmentation pipeline front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or parse
//! error, 3 numeric failure, 4 inpainting backend failure.

mod commands;
mod config;
mod io_utils;
mod sheet;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::PipelineConfig;

#[derive(Parser, Debug)]
#[command(name = "viewaug", about = "Geometric view augmentation for monocular capture", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON pipeline config; flags override individual fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic capture: frames, depths, COLMAP model, tracks,
    /// poses, and the scene description.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sparse_count: Option<usize>,
        #[arg(long)]
        track_stride: Option<usize>,
        /// Also write relative depths with metric = alpha*rel + beta.
        #[arg(long)]
        rel_alpha: Option<f64>,
        #[arg(long)]
        rel_beta: Option<f64>,
        /// Freeze all scene motion.
        #[arg(long, action = clap::ArgAction::SetTrue)]
        static_scene: bool,
    },
    /// Synthesize track masks, apply them, and report the curation ratio.
    Curate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        tracks: Option<PathBuf>,
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        footprint_radius: Option<usize>,
    },
    /// Align relative depth maps to metric scale against a COLMAP model.
    Align {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        colmap: Option<PathBuf>,
        #[arg(long)]
        depths: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        stride: Option<usize>,
        /// Write per-frame candidate (alpha, beta, chamfer) records.
        #[arg(long)]
        debug_scores: bool,
    },
    /// Forward-warp frames into target viewpoints.
    Warp {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        depths: Option<PathBuf>,
        #[arg(long)]
        colmap: Option<PathBuf>,
        /// JSON list of target poses (one per frame).
        #[arg(long)]
        dst_poses: Option<PathBuf>,
        /// Or: orbit each frame's pose by a signed azimuth offset (radians).
        #[arg(long, allow_hyphen_values = true)]
        orbit_offset: Option<f64>,
    },
    /// Complete masked videos with a pluggable backend.
    Inpaint {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        masks: Option<PathBuf>,
        #[arg(long)]
        anchor: Option<PathBuf>,
        /// pullpush | oracle | extern:<command>
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        poses: Option<PathBuf>,
        #[arg(long)]
        colmap: Option<PathBuf>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        overlap: Option<usize>,
    },
    /// Run the full iterative view augmentation, producing a data buffer.
    Augment {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        depths: Option<PathBuf>,
        #[arg(long)]
        colmap: Option<PathBuf>,
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        backend: Option<String>,
        /// H, target poses per timestamp.
        #[arg(long)]
        count: Option<usize>,
        /// N, augmentation iterations.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        max_angle: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// oracle | propagate
        #[arg(long)]
        depth_provider: Option<String>,
    },
    /// Masked image metrics between two frame directories.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        rendered: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        masks: Option<PathBuf>,
        #[arg(long)]
        iv_radius: Option<usize>,
    },
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<viewaug_core::inpaint::InpaintError>() {
            return match e {
                viewaug_core::inpaint::InpaintError::UnknownBackend(_)
                | viewaug_core::inpaint::InpaintError::Backend { .. } => 4,
                viewaug_core::inpaint::InpaintError::Format(_) => 2,
                _ => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<viewaug_core::augment::AugmentError>() {
            return match e {
                viewaug_core::augment::AugmentError::Inpaint { source, .. } => match source {
                    viewaug_core::inpaint::InpaintError::UnknownBackend(_)
                    | viewaug_core::inpaint::InpaintError::Backend { .. } => 4,
                    _ => 3,
                },
                _ => 3,
            };
        }
        if cause.downcast_ref::<viewaug_core::depth_align::AlignError>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<viewaug_core::losses::LossError>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<viewaug_core::warp::WarpError>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<viewaug_core::formats::FormatError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run() -> anyhow::Result<()> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };

    match cli.command {
        Command::Synth {
            common,
            width,
            height,
            frames,
            seed,
            sparse_count,
            track_stride,
            rel_alpha,
            rel_beta,
            static_scene,
        } => {
            let mut config = PipelineConfig::load(common.config.as_deref())?;
            if let Some(v) = width {
                config.synth.width = v;
            }
            if let Some(v) = height {
                config.synth.height = v;
            }
            if let Some(v) = frames {
                config.synth.frames = v;
            }
            if let Some(v) = seed {
                config.synth.seed = v;
            }
            if let Some(v) = sparse_count {
                config.synth.sparse_count = v;
            }
            if let Some(v) = track_stride {
                config.curation.track_stride = v;
            }
            if rel_alpha.is_some() {
                config.synth.rel_alpha = rel_alpha;
            }
            if rel_beta.is_some() {
                config.synth.rel_beta = rel_beta;
            }
            if static_scene {
                config.synth.static_scene = true;
            }
            config.validate()?;
            let out = commands::resolve_path(common.out, &config.paths.output, "output")?;
            std::fs::create_dir_all(&out)?;
            commands::cmd_synth(&config, &out)
        }
        Command::Curate { common, tracks, frames, width, height, tau, mode, footprint_radius } => {
            let mut config = PipelineConfig::load(common.config.as_deref())?;
            if let Some(v) = tau {
                config.curation.tau = v;
            }
            if let Some(v) = &mode {
                config.curation.mode = v
                    .parse()
                    .map_err(|e: String| anyhow::anyhow!("curation.mode: {e}"))?;
            }
            if footprint_radius.is_some() {
                config.curation.footprint_radius = footprint_radius;
            }
            config.validate()?;
            let tracks = commands::resolve_path(tracks, &config.paths.tracks, "tracks")?;
            let out = commands::resolve_path(common.out, &config.paths.output, "output")?;
            std::fs::create_dir_all(&out)?;
            let frames_dir = frames.or_else(|| config.paths.frames.clone());
            let size = match (width, height) {
                (Some(w), Some(h)) => Some((w, h)),
                (None, None) => None,
                _ => anyhow::bail!("--width and --height must be given together"),
            };
            commands::cmd_curate(&config, &tracks, frames_dir.as_deref(), size, &out)
        }
        Command::Align { common, colmap, depths, seed, stride, debug_scores } => {
            let mut config = PipelineConfig::load(common.config.as_deref())?;
            if let Some(v) = seed {
                config.ransac.seed = v;
            }
            if let Some(v) = stride {
                config.ransac.grid_stride = v;
            }
            config.validate()?;
            let colmap = commands::resolve_path(colmap, &config.paths.colmap, "colmap")?;
            let depths = commands::resolve_path(depths, &config.paths.depths, "depths")?;
            let out = commands::resolve_path(common.out, &config.paths.output, "output")?;
            std::fs::create_dir_all(&out)?;
            commands::cmd_align(&config, &colmap, &depths, &out, debug_scores)
        }
        Command::Warp { common, frames, depths, colmap, dst_poses, orbit_offset } => {
            let config = PipelineConfig::load(common.config.as_deref())?;
            config.validate()?;
            let frames = commands::resolve_path(frames, &config.paths.frames, "frames")?;
            let depths = commands::resolve_path(depths, &config.paths.depths, "depths")?;
            let colmap = commands::resolve_path(colmap, &config.paths.colmap, "colmap")?;
            let out = commands::resolve_path(common.out, &config.paths.output, "output")?;
            std::fs::create_dir_all(&out)?;
            commands::cmd_warp(
                &config,
                &frames,
                &depths,
                &colmap,
                dst_poses.as_deref(),
                orbit_offset,
                &out,
            )
        }
        Command::Inpaint {
            common,
            frames,
            masks,
            anchor,
            backend,
            scene,
            poses,
            colmap,
            window,
            overlap,
        } => {
            let mut config = PipelineConfig::load(common.config.as_deref())?;
            if let Some(v) = backend {
                config.backend.0 = v;
            }
            if let Some(v) = window {
                config.chunk.window = v;
            }
            if let Some(v) = overlap {
                config.chunk.overlap = v;
            }
            config.validate()?;
            let frames = commands::resolve_path(frames, &config.paths.frames, "frames")?;
            let masks_dir =
                masks.ok_or_else(|| anyhow::anyhow!("missing required path: --masks"))?;
            let anchor =
                anchor.ok_or_else(|| anyhow::anyhow!("missing required path: --anchor"))?;
            let out = commands::resolve_path(common.out, &config.paths.output, "output")?;
            std::fs::create_dir_all(&out)?;
            let scene = scene.or_else(|| config.paths.scene.clone());
            let colmap = colmap.or_else(|| config.paths.colmap.clone());
            commands::cmd_inpaint(
                &config,
                &frames,
                &masks_dir,
                &anchor,
                scene.as_deref(),
                poses.as_deref(),
                colmap.as_deref(),
                &out,
            )
        }
        Command::Augment {
            common,
            frames,
            depths,
            colmap,
            scene,
            backend,
            count,
            iterations,
            max_angle,
            seed,
            depth_provider,
        } => {
            let mut config = PipelineConfig::load(common.config.as_deref())?;
            if let Some(v) = backend {
                config.backend.0 = v;
            }
            if let Some(v) = count {
                config.targets.count = v;
            }
            if let Some(v) = iterations {
                config.targets.iterations = v;
            }
            if let Some(v) = max_angle {
                config.targets.max_angle = v;
            }
            if let Some(v) = seed {
                config.augment.seed = v;
            }
            if let Some(v) = depth_provider {
                config.augment.depth_provider = v;
            }
            config.validate()?;
            let frames = commands::resolve_path(frames, &config.paths.frames, "frames")?;
            let depths = commands::resolve_path(depths, &config.paths.depths, "depths")?;
            let colmap = commands::resolve_path(colmap, &config.paths.colmap, "colmap")?;
            let out = commands::resolve_path(common.out, &config.paths.output, "output")?;
            std::fs::create_dir_all(&out)?;
            let scene = scene.or_else(|| config.paths.scene.clone());
            commands::cmd_augment(&config, &frames, &depths, &colmap, scene.as_deref(), &out)
        }
        Command::Eval { common, rendered, target, masks, iv_radius } => {
            let mut config = PipelineConfig::load(common.config.as_deref())?;
            if let Some(v) = iv_radius {
                config.loss.iv_radius = v;
            }
            config.validate()?;
            let rendered =
                rendered.ok_or_else(|| anyhow::anyhow!("missing required path: --rendered"))?;
            let target =
                target.ok_or_else(|| anyhow::anyhow!("missing required path: --target"))?;
            let masks =
                masks.ok_or_else(|| anyhow::anyhow!("missing required path: --masks"))?;
            let out = commands::resolve_path(common.out, &config.paths.output, "output")?;
            std::fs::create_dir_all(&out)?;
            commands::cmd_eval(&config, &rendered, &target, &masks, &out)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

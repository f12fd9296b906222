//! Subcommand implementations. Every command writes its artifacts plus a
//! `report.json` carrying the resolved config echo, timings, and counts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::json;

use viewaug_core::augment::{
    run_augmentation, write_buffer, AugmentConfig, BufferEntry, OracleDepthProvider,
    PropagatedDepthProvider, TargetPoseSet,
};
use viewaug_core::depth_align::{align_depth_ransac, project_sparse};
use viewaug_core::formats::{
    poses_from_json, poses_to_json, write_colmap_text, write_depth_file, write_image_file,
    write_mask_file, write_tracks, ColmapImage, ColmapModel, ColmapPoint, DepthMap, Image,
};
use viewaug_core::geom::{orbit_targets, project, Intrinsics, Point3, Pose};
use viewaug_core::inpaint::{
    inpaint_video, BackendSpec, ExternalBackend, InpaintBackend, InpaintRequest, OracleBackend,
    PullPushBackend,
};
use viewaug_core::losses::{augmented_objective, iv_loss, masked_psnr, masked_ssim};
use viewaug_core::synth::{
    default_camera_arc, default_scene, render, sample_sparse, sample_tracks, SyntheticScene,
};
use viewaug_core::trackmask::{apply_mask, curate, masks_from_tracks};
use viewaug_core::warp::forward_warp;

use crate::config::PipelineConfig;
use crate::io_utils::{read_colmap_dir, read_depths, read_frames, read_masks};
use crate::sheet::contact_sheet;

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn write_report(out: &Path, command: &str, config: &PipelineConfig, body: serde_json::Value, started: Instant) -> Result<()> {
    let report = json!({
        "command": command,
        "elapsed_ms": started.elapsed().as_millis() as u64,
        "config": config.echo(),
        "result": body,
    });
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn scene_from_file(path: &Path) -> Result<SyntheticScene> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scene {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn cmd_synth(config: &PipelineConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let s = &config.synth;
    let k = Intrinsics::new(
        s.width as f64,
        s.width as f64,
        s.width as f64 / 2.0,
        s.height as f64 / 2.0,
        s.width,
        s.height,
    )?;
    let mut scene = default_scene(s.frames);
    if s.static_scene {
        for sphere in &mut scene.spheres {
            sphere.velocity = [0.0; 3];
        }
    }
    let poses = default_camera_arc(s.frames);

    ensure_dir(&out.join("frames"))?;
    ensure_dir(&out.join("depths"))?;
    ensure_dir(&out.join("colmap"))?;
    let rel_requested = s.rel_alpha.is_some();
    if rel_requested {
        ensure_dir(&out.join("rel_depths"))?;
    }

    for (t, pose) in poses.iter().enumerate() {
        let (image, depth) = render(&scene, pose, &k, t as f64);
        write_image_file(&out.join("frames").join(format!("frame_{t:04}.ppm")), &image)?;
        write_depth_file(&out.join("depths").join(format!("depth_{t:04}.pfm")), &depth)?;
        if let (Some(alpha), Some(beta)) = (s.rel_alpha, s.rel_beta) {
            let mut rel = DepthMap::invalid(depth.width(), depth.height());
            for y in 0..depth.height() {
                for x in 0..depth.width() {
                    if depth.is_valid(x, y) {
                        rel.set(x, y, ((depth.get(x, y) as f64 - beta) / alpha) as f32);
                    }
                }
            }
            write_depth_file(&out.join("rel_depths").join(format!("depth_{t:04}.pfm")), &rel)?;
        }
    }

    // COLMAP-style sparse model.
    let sparse = sample_sparse(&scene, &poses, &k, s.sparse_count, s.seed);
    let mut cameras = std::collections::BTreeMap::new();
    cameras.insert(1u32, k);
    let mut images = std::collections::BTreeMap::new();
    for (t, pose) in poses.iter().enumerate() {
        images.insert(
            (t + 1) as u32,
            ColmapImage { pose: *pose, camera_id: 1, name: format!("frame_{t:04}.ppm") },
        );
    }
    let points = sparse
        .iter()
        .map(|p| ColmapPoint {
            position: p.position,
            color: [
                (p.color[0] * 255.0).round() as u8,
                (p.color[1] * 255.0).round() as u8,
                (p.color[2] * 255.0).round() as u8,
            ],
            track_len: 0,
        })
        .collect();
    let model = ColmapModel { cameras, images, points, warnings: Vec::new() };
    let (cams_txt, imgs_txt, pts_txt) = write_colmap_text(&model);
    std::fs::write(out.join("colmap").join("cameras.txt"), cams_txt)?;
    std::fs::write(out.join("colmap").join("images.txt"), imgs_txt)?;
    std::fs::write(out.join("colmap").join("points3D.txt"), pts_txt)?;

    // Tracks, poses, scene.
    let tracks = sample_tracks(&scene, &poses, &k, config.curation.track_stride, s.frames);
    std::fs::write(out.join("tracks.txt"), write_tracks(&tracks))?;
    std::fs::write(out.join("poses.json"), poses_to_json(&poses))?;
    std::fs::write(out.join("scene.json"), serde_json::to_string_pretty(&scene)?)?;

    write_report(
        out,
        "synth",
        config,
        json!({
            "frames": s.frames,
            "sparse_points": sparse.len(),
            "tracks": tracks.n_tracks(),
            "rel_depths": rel_requested,
        }),
        started,
    )
}

// ---------------------------------------------------------------------------
// curate
// ---------------------------------------------------------------------------

pub fn cmd_curate(
    config: &PipelineConfig,
    tracks_path: &Path,
    frames_dir: Option<&Path>,
    size: Option<(usize, usize)>,
    out: &Path,
) -> Result<()> {
    let started = Instant::now();
    let tracks = viewaug_core::formats::read_tracks(
        &std::fs::read_to_string(tracks_path)
            .with_context(|| format!("reading {}", tracks_path.display()))?,
    )?;
    let frames = frames_dir.map(read_frames).transpose()?;
    let (width, height) = match (&frames, size) {
        (Some(frames), _) if !frames.is_empty() => (frames[0].width(), frames[0].height()),
        (_, Some(wh)) => wh,
        _ => bail!("need --frames or --width/--height to size the masks"),
    };

    let footprint = config.curation.effective_footprint();
    let masks = masks_from_tracks(&tracks, width, height, footprint);
    ensure_dir(&out.join("masks"))?;
    for (t, mask) in masks.iter().enumerate() {
        write_mask_file(&out.join("masks").join(format!("mask_{t:04}.pgm")), mask)?;
    }
    if let Some(frames) = &frames {
        if frames.len() != masks.len() {
            bail!("{} frames but {} track frames", frames.len(), masks.len());
        }
        ensure_dir(&out.join("masked"))?;
        for (t, (frame, mask)) in frames.iter().zip(&masks).enumerate() {
            let masked = apply_mask(frame, mask)?;
            write_image_file(&out.join("masked").join(format!("frame_{t:04}.ppm")), &masked)?;
        }
    }

    let report = curate(&masks, config.curation.tau, config.curation.mode)?;
    std::fs::write(out.join("curation.json"), serde_json::to_string_pretty(&report)?)?;
    write_report(
        out,
        "curate",
        config,
        json!({
            "ratio": report.ratio,
            "kept": report.kept,
            "footprint_radius": footprint,
            "n_tracks": tracks.n_tracks(),
        }),
        started,
    )
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

pub fn cmd_align(
    config: &PipelineConfig,
    colmap_dir: &Path,
    depths_dir: &Path,
    out: &Path,
    debug_scores: bool,
) -> Result<()> {
    let started = Instant::now();
    let (model, k, poses) = read_colmap_dir(colmap_dir)?;
    let rel_depths = read_depths(depths_dir)?;
    if rel_depths.len() != poses.len() {
        bail!("{} depth maps for {} posed images", rel_depths.len(), poses.len());
    }
    let sparse = model.point_positions();
    ensure_dir(&out.join("aligned"))?;
    if debug_scores {
        ensure_dir(&out.join("scores"))?;
    }

    let ransac = config.ransac.to_core();
    let mut per_frame = Vec::new();
    for (t, (pose, rel)) in poses.iter().zip(&rel_depths).enumerate() {
        let visible: Vec<Point3> = sparse
            .iter()
            .copied()
            .filter(|p| {
                project(*p, pose, &k).is_some_and(|(pix, _)| {
                    pix.u >= 0.0
                        && pix.u < k.width as f64
                        && pix.v >= 0.0
                        && pix.v < k.height as f64
                })
            })
            .collect();
        let obs = project_sparse(&sparse, pose, &k, rel)
            .with_context(|| format!("frame {t}"))?;
        let alignment = align_depth_ransac(
            &obs,
            rel,
            pose,
            &k,
            &visible,
            viewaug_core::rng::mix(config.ransac.seed, t as u64),
            &ransac,
        )
        .with_context(|| format!("frame {t}"))?;
        write_depth_file(
            &out.join("aligned").join(format!("depth_{t:04}.pfm")),
            &alignment.aligned,
        )?;
        if debug_scores {
            std::fs::write(
                out.join("scores").join(format!("scores_{t:04}.json")),
                serde_json::to_string_pretty(&alignment.candidates)?,
            )?;
        }
        per_frame.push(json!({
            "frame": t,
            "alpha": alignment.params.alpha,
            "beta": alignment.params.beta,
            "winner": alignment.winner,
            "observations": obs.len(),
        }));
    }

    write_report(out, "align", config, json!({ "frames": per_frame }), started)
}

// ---------------------------------------------------------------------------
// warp
// ---------------------------------------------------------------------------

pub fn cmd_warp(
    config: &PipelineConfig,
    frames_dir: &Path,
    depths_dir: &Path,
    colmap_dir: &Path,
    dst_poses_file: Option<&Path>,
    orbit_offset: Option<f64>,
    out: &Path,
) -> Result<()> {
    let started = Instant::now();
    let frames = read_frames(frames_dir)?;
    let depths = read_depths(depths_dir)?;
    let (_, k, poses) = read_colmap_dir(colmap_dir)?;
    if frames.len() != depths.len() || frames.len() != poses.len() {
        bail!(
            "{} frames, {} depths, {} poses",
            frames.len(),
            depths.len(),
            poses.len()
        );
    }

    let dst_poses: Vec<Pose> = match (dst_poses_file, orbit_offset) {
        (Some(path), None) => poses_from_json(&std::fs::read_to_string(path)?)?,
        (None, Some(offset)) => {
            if offset == 0.0 {
                poses.clone()
            } else {
                poses
                    .iter()
                    .zip(&depths)
                    .map(|(pose, depth)| {
                        let center_depth = depth.median_valid().unwrap_or(1.0);
                        let pair = orbit_targets(pose, &k, center_depth, 2, offset.abs());
                        if offset < 0.0 { pair[0] } else { pair[1] }
                    })
                    .collect()
            }
        }
        _ => bail!("exactly one of --dst-poses or --orbit-offset is required"),
    };
    if dst_poses.len() != frames.len() {
        bail!("{} target poses for {} frames", dst_poses.len(), frames.len());
    }

    ensure_dir(&out.join("warped"))?;
    ensure_dir(&out.join("masks"))?;
    ensure_dir(&out.join("zbuffers"))?;
    let mut warped_images = Vec::new();
    let mut covered = Vec::new();
    for (t, ((frame, depth), (src, dst))) in frames
        .iter()
        .zip(&depths)
        .zip(poses.iter().zip(&dst_poses))
        .enumerate()
    {
        let warped = forward_warp(frame, depth, src, dst, &k)?;
        write_image_file(&out.join("warped").join(format!("frame_{t:04}.ppm")), &warped.image)?;
        write_mask_file(&out.join("masks").join(format!("mask_{t:04}.pgm")), &warped.mask)?;
        write_depth_file(
            &out.join("zbuffers").join(format!("depth_{t:04}.pfm")),
            &warped.zbuffer,
        )?;
        covered.push(warped.mask.count_valid());
        warped_images.push(warped.image);
    }
    if let Some(sheet) = contact_sheet(&warped_images) {
        write_image_file(&out.join("contact_sheet.ppm"), &sheet)?;
    }
    std::fs::write(out.join("dst_poses.json"), poses_to_json(&dst_poses))?;

    write_report(
        out,
        "warp",
        config,
        json!({ "frames": frames.len(), "covered_pixels": covered }),
        started,
    )
}

// ---------------------------------------------------------------------------
// inpaint
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
pub fn cmd_inpaint(
    config: &PipelineConfig,
    frames_dir: &Path,
    masks_dir: &Path,
    anchor_dir: &Path,
    scene_file: Option<&Path>,
    poses_file: Option<&Path>,
    colmap_dir: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let started = Instant::now();
    let frames = read_frames(frames_dir)?;
    let masks = read_masks(masks_dir)?;
    let anchors = read_frames(anchor_dir)?;
    let request = InpaintRequest::new(frames, masks, anchors)?;

    let spec: BackendSpec = config.backend.0.parse()?;
    let scene;
    let dst_poses;
    let backend: Box<dyn InpaintBackend> = match &spec {
        BackendSpec::PullPush => Box::new(PullPushBackend),
        BackendSpec::Oracle => {
            let scene_path = scene_file.context("oracle backend needs --scene")?;
            let poses_path = poses_file.context("oracle backend needs --poses")?;
            let colmap = colmap_dir.context("oracle backend needs --colmap for intrinsics")?;
            scene = scene_from_file(scene_path)?;
            dst_poses = poses_from_json(&std::fs::read_to_string(poses_path)?)?;
            let (_, k, _) = read_colmap_dir(colmap)?;
            Box::new(OracleBackend { scene: &scene, poses: &dst_poses, k })
        }
        BackendSpec::External(cmd) => Box::new(ExternalBackend {
            command: cmd.clone(),
            window: config.chunk.window,
            overlap: config.chunk.overlap,
        }),
    };

    let result = inpaint_video(&request, backend.as_ref(), config.chunk.window, config.chunk.overlap)?;
    ensure_dir(&out.join("inpainted"))?;
    for (t, frame) in result.video.iter().enumerate() {
        write_image_file(&out.join("inpainted").join(format!("frame_{t:04}.ppm")), frame)?;
    }
    if let Some(sheet) = contact_sheet(&result.video) {
        write_image_file(&out.join("contact_sheet.ppm"), &sheet)?;
    }
    write_report(
        out,
        "inpaint",
        config,
        json!({ "frames": result.video.len(), "backend": config.backend.0 }),
        started,
    )
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

pub fn cmd_augment(
    config: &PipelineConfig,
    frames_dir: &Path,
    depths_dir: &Path,
    colmap_dir: &Path,
    scene_file: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let started = Instant::now();
    let frames = read_frames(frames_dir)?;
    let depths = read_depths(depths_dir)?;
    let (model, k, poses) = read_colmap_dir(colmap_dir)?;
    if frames.len() != depths.len() || frames.len() != poses.len() {
        bail!(
            "{} frames, {} depths, {} poses",
            frames.len(),
            depths.len(),
            poses.len()
        );
    }
    let entry = BufferEntry::new(frames, depths, poses, 0)?;
    let targets =
        TargetPoseSet::from_orbits(&entry, &k, config.targets.count, config.targets.max_angle)?;

    let augment_config = AugmentConfig {
        iterations: config.targets.iterations,
        seed: config.augment.seed,
        chunk_window: config.chunk.window,
        chunk_overlap: config.chunk.overlap,
        cloud_stride: config.augment.cloud_stride,
        splat_footprint: config.augment.splat_footprint,
    };

    let spec: BackendSpec = config.backend.0.parse()?;
    let scene = match (&spec, config.augment.depth_provider.as_str(), scene_file) {
        (BackendSpec::Oracle, _, Some(path)) | (_, "oracle", Some(path)) => {
            Some(scene_from_file(path)?)
        }
        (BackendSpec::Oracle, _, None) => bail!("oracle backend needs --scene"),
        (_, "oracle", None) => bail!("oracle depth provider needs --scene"),
        _ => None,
    };

    let outcome = {
        // The oracle backend receives each grouped video's poses through
        // the engine; its own pose list is unused there.
        let backend: Box<dyn InpaintBackend> = match &spec {
            BackendSpec::PullPush => Box::new(PullPushBackend),
            BackendSpec::Oracle => Box::new(OracleBackend {
                scene: scene.as_ref().expect("validated above"),
                poses: &[],
                k,
            }),
            BackendSpec::External(cmd) => Box::new(ExternalBackend {
                command: cmd.clone(),
                window: config.chunk.window,
                overlap: config.chunk.overlap,
            }),
        };
        let provider: Box<dyn viewaug_core::augment::DepthProvider> =
            match config.augment.depth_provider.as_str() {
                "oracle" => Box::new(OracleDepthProvider {
                    scene: scene.as_ref().expect("validated above"),
                }),
                _ => Box::new(PropagatedDepthProvider {
                    sparse: model.point_positions(),
                    ransac: config.ransac.to_core(),
                }),
            };
        run_augmentation(
            entry,
            targets,
            backend.as_ref(),
            provider.as_ref(),
            &k,
            &augment_config,
        )?
    };

    write_buffer(out, &outcome, &k, config.augment.seed, config.echo())?;

    // Contact sheet: first frame of every entry.
    let firsts: Vec<Image> = outcome
        .buffer
        .entries()
        .iter()
        .map(|e| e.video[0].clone())
        .collect();
    if let Some(sheet) = contact_sheet(&firsts) {
        write_image_file(&out.join("contact_sheet.ppm"), &sheet)?;
    }

    write_report(
        out,
        "augment",
        config,
        json!({
            "entries": outcome.buffer.len(),
            "frames": outcome.buffer.frame_count(),
            "all_targets_visited": outcome.targets.all_visited(),
            "visited": outcome.targets.visited_count(),
            "cloud_points": outcome.cloud.len(),
            "scene_scale": outcome.scene_scale,
            "skipped_missing_depth": outcome
                .supervision
                .iter()
                .map(|s| s.skipped_missing_depth)
                .sum::<usize>(),
        }),
        started,
    )
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

pub fn cmd_eval(
    config: &PipelineConfig,
    rendered_dir: &Path,
    target_dir: &Path,
    masks_dir: &Path,
    out: &Path,
) -> Result<()> {
    let started = Instant::now();
    let rendered = read_frames(rendered_dir)?;
    let targets = read_frames(target_dir)?;
    let masks = read_masks(masks_dir)?;
    if rendered.len() != targets.len() || rendered.len() != masks.len() {
        bail!(
            "{} rendered, {} target, {} masks",
            rendered.len(),
            targets.len(),
            masks.len()
        );
    }

    let mut frames = Vec::new();
    let mut sums = (0.0f64, 0.0f64, 0.0f64);
    let mut finite_psnr = 0usize;
    for (t, ((r, g), m)) in rendered.iter().zip(&targets).zip(&masks).enumerate() {
        let psnr = masked_psnr(r, g, m)?;
        let ssim = masked_ssim(r, g, m)?;
        let iv = iv_loss(r, g, m, config.loss.iv_radius)?.value;
        let objective =
            augmented_objective(r, g, m, &config.loss.weights(), config.loss.iv_radius, None)?;
        if psnr.is_finite() {
            sums.0 += psnr;
            finite_psnr += 1;
        }
        sums.1 += ssim;
        sums.2 += iv;
        frames.push(json!({
            "frame": t,
            "mpsnr": if psnr.is_finite() { json!(psnr) } else { json!("inf") },
            "mssim": ssim,
            "iv": iv,
            "objective": objective,
        }));
    }
    let n = rendered.len() as f64;
    let body = json!({
        "frames": frames,
        "mean": {
            "mpsnr": if finite_psnr > 0 { json!(sums.0 / finite_psnr as f64) } else { json!("inf") },
            "mssim": sums.1 / n,
            "iv": sums.2 / n,
        },
    });
    ensure_dir(out)?;
    std::fs::write(out.join("eval.json"), serde_json::to_string_pretty(&body)?)?;
    write_report(out, "eval", config, body, started)
}

// ---------------------------------------------------------------------------
// shared args plumbing
// ---------------------------------------------------------------------------

/// Resolves a path: CLI flag first, then the config's paths section.
pub fn resolve_path(flag: Option<PathBuf>, from_config: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| from_config.clone())
        .with_context(|| format!("missing required path: {what} (flag or config paths.{what})"))
}

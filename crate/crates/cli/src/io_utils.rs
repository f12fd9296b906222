//! Shared file helpers for numbered frame/depth/mask sequences.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use viewaug_core::formats::{
    read_depth_file, read_image_file, read_mask_file, BinaryMask, DepthMap, Image,
};

/// Files named `<prefix>NNNN.<ext>` in ascending numeric order.
pub fn numbered_files(dir: &Path, prefix: &str, ext: &str) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(stem) = name.strip_prefix(prefix) {
            if let Some(number) = stem.strip_suffix(&format!(".{ext}")) {
                if let Ok(index) = number.parse::<usize>() {
                    found.push((index, path.clone()));
                }
            }
        }
    }
    if found.is_empty() {
        bail!("no {prefix}*.{ext} files in {}", dir.display());
    }
    found.sort();
    for (slot, (index, path)) in found.iter().enumerate() {
        if slot != *index {
            bail!("numbering gap: expected index {slot}, found {}", path.display());
        }
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

pub fn read_frames(dir: &Path) -> Result<Vec<Image>> {
    numbered_files(dir, "frame_", "ppm")?
        .iter()
        .map(|p| read_image_file(p).with_context(|| p.display().to_string()))
        .collect()
}

pub fn read_depths(dir: &Path) -> Result<Vec<DepthMap>> {
    numbered_files(dir, "depth_", "pfm")?
        .iter()
        .map(|p| read_depth_file(p).with_context(|| p.display().to_string()))
        .collect()
}

pub fn read_masks(dir: &Path) -> Result<Vec<BinaryMask>> {
    numbered_files(dir, "mask_", "pgm")?
        .iter()
        .map(|p| read_mask_file(p).with_context(|| p.display().to_string()))
        .collect()
}

/// Parses a COLMAP text directory into the model plus per-frame poses
/// (images ordered by id) and the shared intrinsics.
pub fn read_colmap_dir(
    dir: &Path,
) -> Result<(
    viewaug_core::formats::ColmapModel,
    viewaug_core::geom::Intrinsics,
    Vec<viewaug_core::geom::Pose>,
)> {
    let read = |name: &str| -> Result<String> {
        std::fs::read_to_string(dir.join(name))
            .with_context(|| format!("reading {}", dir.join(name).display()))
    };
    let model = viewaug_core::formats::parse_colmap_text(
        &read("cameras.txt")?,
        &read("images.txt")?,
        &read("points3D.txt")?,
    )?;
    let first_image = model
        .images
        .values()
        .next()
        .context("COLMAP model has no images")?;
    let intrinsics = *model
        .cameras
        .get(&first_image.camera_id)
        .context("image references missing camera")?;
    let poses: Vec<_> = model.images.values().map(|img| img.pose).collect();
    Ok((model, intrinsics, poses))
}

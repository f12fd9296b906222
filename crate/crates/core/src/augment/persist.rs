//! Buffer persistence: the on-disk tree produced by an augmentation run.
//!
//! Layout under the buffer root:
//!
//! ```text
//! buffer.json                     manifest (below)
//! entry_000/frame_0000.ppm        input entry, then augmented entries
//!           depth_0000.pfm
//!           pose_0000.json
//! supervision/entry_001/mask_0000.pgm   per augmented entry
//! ```
//!
//! The manifest records seed, dimensions, intrinsics, a config echo, and
//! per-entry metadata. Nothing in the tree is time-stamped, so identical
//! runs produce byte-identical trees.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::formats::{
    read_depth_file, read_image_file, read_mask_file, write_depth_file, write_image_file,
    write_mask_file, FormatError, IntrinsicsRecord,
};
use crate::geom::Intrinsics;

use super::{AugmentOutcome, BufferEntry, DataBuffer, SupervisionRecord};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryManifest {
    pub dir: String,
    pub iteration_born: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupervisionManifest {
    /// Index of the buffer entry these masks belong to.
    pub entry: usize,
    pub dir: String,
    pub skipped_missing_depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BufferManifest {
    pub seed: u64,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub intrinsics: IntrinsicsRecord,
    pub scene_scale: f64,
    pub config: serde_json::Value,
    pub entries: Vec<EntryManifest>,
    pub supervision: Vec<SupervisionManifest>,
}

fn entry_dir(index: usize) -> String {
    format!("entry_{index:03}")
}

/// Writes the buffer tree; `config_echo` is embedded verbatim in the
/// manifest.
pub fn write_buffer(
    root: &Path,
    outcome: &AugmentOutcome,
    k: &Intrinsics,
    seed: u64,
    config_echo: serde_json::Value,
) -> Result<(), FormatError> {
    std::fs::create_dir_all(root)?;
    let entries = outcome.buffer.entries();
    let mut entry_manifests = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let dir = entry_dir(i);
        let path = root.join(&dir);
        std::fs::create_dir_all(&path)?;
        for t in 0..entry.frame_count() {
            write_image_file(&path.join(format!("frame_{t:04}.ppm")), &entry.video[t])?;
            write_depth_file(&path.join(format!("depth_{t:04}.pfm")), &entry.depths[t])?;
            std::fs::write(
                path.join(format!("pose_{t:04}.json")),
                crate::formats::pose_to_json(&entry.poses[t]),
            )?;
        }
        entry_manifests.push(EntryManifest { dir, iteration_born: entry.iteration_born });
    }

    let mut supervision_manifests = Vec::with_capacity(outcome.supervision.len());
    for (i, record) in outcome.supervision.iter().enumerate() {
        let entry_index = i + 1;
        let dir = PathBuf::from("supervision").join(entry_dir(entry_index));
        let path = root.join(&dir);
        std::fs::create_dir_all(&path)?;
        for (t, mask) in record.masks.iter().enumerate() {
            write_mask_file(&path.join(format!("mask_{t:04}.pgm")), mask)?;
        }
        for (t, mask) in record.pre_masks.iter().enumerate() {
            write_mask_file(&path.join(format!("premask_{t:04}.pgm")), mask)?;
        }
        supervision_manifests.push(SupervisionManifest {
            entry: entry_index,
            dir: dir.to_string_lossy().into_owned(),
            skipped_missing_depth: record.skipped_missing_depth,
        });
    }

    let manifest = BufferManifest {
        seed,
        frame_count: outcome.buffer.frame_count(),
        width: k.width,
        height: k.height,
        intrinsics: IntrinsicsRecord::from(k),
        scene_scale: outcome.scene_scale,
        config: config_echo,
        entries: entry_manifests,
        supervision: supervision_manifests,
    };
    std::fs::write(
        root.join("buffer.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(())
}

/// A buffer tree loaded back from disk.
#[derive(Debug)]
pub struct PersistedBuffer {
    pub manifest: BufferManifest,
    pub buffer: DataBuffer,
    pub supervision: Vec<SupervisionRecord>,
    pub intrinsics: Intrinsics,
}

pub fn read_buffer(root: &Path) -> Result<PersistedBuffer, FormatError> {
    let manifest: BufferManifest =
        serde_json::from_str(&std::fs::read_to_string(root.join("buffer.json"))?)?;
    let intrinsics = manifest.intrinsics.to_intrinsics()?;

    let mut entries = Vec::with_capacity(manifest.entries.len());
    for em in &manifest.entries {
        let path = root.join(&em.dir);
        let mut video = Vec::with_capacity(manifest.frame_count);
        let mut depths = Vec::with_capacity(manifest.frame_count);
        let mut poses = Vec::with_capacity(manifest.frame_count);
        for t in 0..manifest.frame_count {
            video.push(read_image_file(&path.join(format!("frame_{t:04}.ppm")))?);
            depths.push(read_depth_file(&path.join(format!("depth_{t:04}.pfm")))?);
            poses.push(crate::formats::pose_from_json(&std::fs::read_to_string(
                path.join(format!("pose_{t:04}.json")),
            )?)?);
        }
        entries.push(
            BufferEntry::new(video, depths, poses, em.iteration_born)
                .map_err(|e| FormatError::InvalidRaster(e.to_string()))?,
        );
    }
    let mut iter = entries.into_iter();
    let input = iter
        .next()
        .ok_or_else(|| FormatError::InvalidRaster("manifest lists no entries".into()))?;
    let mut buffer =
        DataBuffer::new(input).map_err(|e| FormatError::InvalidRaster(e.to_string()))?;
    for entry in iter {
        buffer
            .push(entry)
            .map_err(|e| FormatError::InvalidRaster(e.to_string()))?;
    }

    let mut supervision = Vec::with_capacity(manifest.supervision.len());
    for sm in &manifest.supervision {
        let path = root.join(&sm.dir);
        let mut masks = Vec::with_capacity(manifest.frame_count);
        let mut pre_masks = Vec::with_capacity(manifest.frame_count);
        for t in 0..manifest.frame_count {
            masks.push(read_mask_file(&path.join(format!("mask_{t:04}.pgm")))?);
            pre_masks.push(read_mask_file(&path.join(format!("premask_{t:04}.pgm")))?);
        }
        supervision.push(SupervisionRecord {
            masks,
            pre_masks,
            skipped_missing_depth: sm.skipped_missing_depth,
        });
    }

    Ok(PersistedBuffer { manifest, buffer, supervision, intrinsics })
}

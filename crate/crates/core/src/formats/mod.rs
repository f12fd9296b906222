//! File-format carriers: COLMAP sparse-reconstruction text, PFM depth maps,
//! binary PPM/PGM images, track files, and JSON pose/intrinsics records.
//!
//! All parsers are pure functions over byte or string buffers; callers own
//! file I/O (thin `*_file` helpers are provided for convenience). Readers
//! reject invalid input rather than clamping, and writers round-trip
//! bit-exactly on their valid domains.

mod colmap;
mod manifest;
mod pfm;
mod pnm;
mod raster;
mod tracks;

pub use colmap::{parse_colmap_text, write_colmap_text, ColmapImage, ColmapModel, ColmapPoint};
pub use manifest::{
    pose_from_json, pose_to_json, poses_from_json, poses_to_json, IntrinsicsRecord, PoseRecord,
};
pub use pfm::{read_pfm, write_pfm};
pub use pnm::{read_ppm, write_ppm};
pub use raster::{image_to_mask, mask_to_image, BinaryMask, DepthMap, Image};
pub use tracks::{read_tracks, write_tracks, TrackSet};

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unsupported camera model {0}")]
    UnsupportedCameraModel(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("{file} line {line}: {msg}")]
    Parse { file: &'static str, line: usize, msg: String },
    #[error("byte {offset}: {msg}")]
    ParseBytes { offset: usize, msg: String },
    #[error("invalid raster data: {0}")]
    InvalidRaster(String),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn read_image_file(path: &Path) -> Result<Image, FormatError> {
    read_ppm(&std::fs::read(path)?)
}

pub fn write_image_file(path: &Path, image: &Image) -> Result<(), FormatError> {
    Ok(std::fs::write(path, write_ppm(image))?)
}

pub fn read_depth_file(path: &Path) -> Result<DepthMap, FormatError> {
    read_pfm(&std::fs::read(path)?)
}

pub fn write_depth_file(path: &Path, depth: &DepthMap) -> Result<(), FormatError> {
    Ok(std::fs::write(path, write_pfm(depth)?)?)
}

pub fn read_mask_file(path: &Path) -> Result<BinaryMask, FormatError> {
    raster::image_to_mask(&read_ppm(&std::fs::read(path)?)?)
}

pub fn write_mask_file(path: &Path, mask: &BinaryMask) -> Result<(), FormatError> {
    Ok(std::fs::write(path, write_ppm(&raster::mask_to_image(mask)))?)
}

//! Training-mask synthesis from 2D track trajectories, plus the
//! dynamic-content curation filter.
//!
//! Masks follow the artifact-wide convention 1 = valid/tracked pixel,
//! 0 = hole. A frame's mask marks every pixel within a Chebyshev footprint
//! of a visible track point; the footprint compensates for track sampling
//! stride (points are typically seeded on a grid).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{BinaryMask, Image, TrackSet};

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("frame is {fw}x{fh} but mask is {mw}x{mh}")]
    DimensionMismatch { fw: usize, fh: usize, mw: usize, mh: usize },
    #[error("curation needs at least one mask")]
    EmptyMaskList,
    #[error("mask {index} is {w}x{h}, expected {ew}x{eh}")]
    RaggedMasks { index: usize, w: usize, h: usize, ew: usize, eh: usize },
}

/// Whether a clip survives curation at a given valid-area ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurationMode {
    /// Keep clips whose ratio is >= tau (the default reading).
    KeepIfGeq,
    /// Keep clips whose ratio is < tau.
    KeepIfLt,
}

impl std::str::FromStr for CurationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keep_if_geq" => Ok(Self::KeepIfGeq),
            "keep_if_lt" => Ok(Self::KeepIfLt),
            other => Err(format!("unknown curation mode {other:?}")),
        }
    }
}

/// Default curation threshold.
pub const DEFAULT_TAU: f64 = 0.98;

#[derive(Debug, Clone, Serialize)]
pub struct CurationReport {
    /// Mean over frames of the per-frame valid-pixel fraction.
    pub ratio: f64,
    pub kept: bool,
    pub tau: f64,
    pub mode: CurationMode,
}

/// Per-frame masks from track trajectories: pixels within `footprint_radius`
/// (Chebyshev) of a visible track point are valid, everything else is a
/// hole. Track points outside the image contribute nothing.
pub fn masks_from_tracks(
    tracks: &TrackSet,
    width: usize,
    height: usize,
    footprint_radius: usize,
) -> Vec<BinaryMask> {
    let r = footprint_radius as i64;
    (0..tracks.n_frames())
        .map(|frame| {
            let mut mask = BinaryMask::zeros(width, height);
            for track in 0..tracks.n_tracks() {
                if !tracks.visible(track, frame) {
                    continue;
                }
                let p = tracks.position(track, frame);
                let cx = p.u.round() as i64;
                let cy = p.v.round() as i64;
                for y in (cy - r).max(0)..=(cy + r).min(height as i64 - 1) {
                    for x in (cx - r).max(0)..=(cx + r).min(width as i64 - 1) {
                        mask.set(x as usize, y as usize, 1);
                    }
                }
            }
            mask
        })
        .collect()
}

/// Zeroes out hole pixels; valid pixels pass through unchanged.
pub fn apply_mask(frame: &Image, mask: &BinaryMask) -> Result<Image, MaskError> {
    if frame.width() != mask.width() || frame.height() != mask.height() {
        return Err(MaskError::DimensionMismatch {
            fw: frame.width(),
            fh: frame.height(),
            mw: mask.width(),
            mh: mask.height(),
        });
    }
    let mut out = frame.clone();
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if mask.get(x, y) == 0 {
                for c in 0..frame.channels() {
                    out.set(x, y, c, 0.0);
                }
            }
        }
    }
    Ok(out)
}

/// Mean over frames of the valid-pixel fraction.
pub fn curation_ratio(masks: &[BinaryMask]) -> Result<f64, MaskError> {
    if masks.is_empty() {
        return Err(MaskError::EmptyMaskList);
    }
    let (ew, eh) = (masks[0].width(), masks[0].height());
    for (index, m) in masks.iter().enumerate() {
        if m.width() != ew || m.height() != eh {
            return Err(MaskError::RaggedMasks {
                index,
                w: m.width(),
                h: m.height(),
                ew,
                eh,
            });
        }
    }
    Ok(masks.iter().map(|m| m.fraction_valid()).sum::<f64>() / masks.len() as f64)
}

/// Computes the clip ratio and the keep decision under the given mode.
pub fn curate(
    masks: &[BinaryMask],
    tau: f64,
    mode: CurationMode,
) -> Result<CurationReport, MaskError> {
    assert!((0.0..=1.0).contains(&tau), "tau must be in [0, 1]");
    let ratio = curation_ratio(masks)?;
    let kept = match mode {
        CurationMode::KeepIfGeq => ratio >= tau,
        CurationMode::KeepIfLt => ratio < tau,
    };
    Ok(CurationReport { ratio, kept, tau, mode })
}

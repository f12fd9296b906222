//! Pluggable video inpainting: completes masked warped videos given the
//! original video as an anchor.
//!
//! The neural inpainter itself is out of scope; this module fixes its call
//! shape (masked video, masks, anchor video) and ships two deterministic
//! backends — pull-push multiresolution fill and the synthetic-scene oracle
//! — plus a protocol for shelling out to an external process. Whatever the
//! backend returns, valid pixels are re-imposed from the masked input, so
//! completion is hole-only by construction. Long videos are processed in
//! overlapping chunks in schedule order; overlap frames take the later
//! chunk's values on hole pixels.

use std::io::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::formats::{write_ppm, BinaryMask, DepthMap, FormatError, Image};
use crate::geom::{Intrinsics, Pose};
use crate::synth::SyntheticScene;

#[derive(Debug, Error)]
pub enum InpaintError {
    #[error("unknown backend {0:?} (expected pullpush, oracle, or extern:<cmd>)")]
    UnknownBackend(String),
    #[error("backend {backend} failed at frame {frame}: {msg}")]
    Backend { backend: String, frame: usize, msg: String },
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("chunk window {window} must exceed overlap {overlap}")]
    BadSchedule { window: usize, overlap: usize },
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// A masked video to complete, with the per-frame hole masks and the anchor
/// video providing spatio-temporal context.
#[derive(Debug, Clone)]
pub struct InpaintRequest {
    masked_video: Vec<Image>,
    masks: Vec<BinaryMask>,
    anchor_video: Vec<Image>,
}

impl InpaintRequest {
    pub fn new(
        masked_video: Vec<Image>,
        masks: Vec<BinaryMask>,
        anchor_video: Vec<Image>,
    ) -> Result<Self, InpaintError> {
        if masked_video.is_empty() {
            return Err(InpaintError::BadRequest("empty video".into()));
        }
        if masked_video.len() != masks.len() || masked_video.len() != anchor_video.len() {
            return Err(InpaintError::BadRequest(format!(
                "length mismatch: {} frames, {} masks, {} anchor frames",
                masked_video.len(),
                masks.len(),
                anchor_video.len()
            )));
        }
        for (t, ((frame, mask), anchor)) in masked_video
            .iter()
            .zip(&masks)
            .zip(&anchor_video)
            .enumerate()
        {
            if frame.width() != mask.width() || frame.height() != mask.height() {
                return Err(InpaintError::BadRequest(format!(
                    "frame {t}: mask is {}x{}, frame is {}x{}",
                    mask.width(),
                    mask.height(),
                    frame.width(),
                    frame.height()
                )));
            }
            if !frame.same_shape(anchor) {
                return Err(InpaintError::BadRequest(format!(
                    "frame {t}: anchor shape differs"
                )));
            }
        }
        Ok(Self { masked_video, masks, anchor_video })
    }

    pub fn len(&self) -> usize {
        self.masked_video.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masked_video.is_empty()
    }

    pub fn masked_video(&self) -> &[Image] {
        &self.masked_video
    }

    pub fn masks(&self) -> &[BinaryMask] {
        &self.masks
    }

    pub fn anchor_video(&self) -> &[Image] {
        &self.anchor_video
    }

    fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            masked_video: self.masked_video[start..end].to_vec(),
            masks: self.masks[start..end].to_vec(),
            anchor_video: self.anchor_video[start..end].to_vec(),
        }
    }
}

/// Completed video; hole pixels filled, valid pixels untouched.
#[derive(Debug, Clone)]
pub struct InpaintResult {
    pub video: Vec<Image>,
}

/// A completion backend. `t_offset` is the global timestamp of the request's
/// first frame, letting time-aware backends (the oracle, external processes)
/// locate chunked requests within the full video.
pub trait InpaintBackend {
    fn label(&self) -> &str;

    fn complete(
        &self,
        request: &InpaintRequest,
        t_offset: usize,
    ) -> Result<Vec<Image>, InpaintError>;

    /// Completion with per-timestamp camera poses supplied by the caller
    /// (the augmentation engine passes each grouped video's own poses).
    /// Backends that do not use pose information fall through to
    /// [`Self::complete`].
    fn complete_posed(
        &self,
        request: &InpaintRequest,
        poses: Option<&[Pose]>,
        t_offset: usize,
    ) -> Result<Vec<Image>, InpaintError> {
        let _ = poses;
        self.complete(request, t_offset)
    }
}

/// Backend selector as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    PullPush,
    Oracle,
    External(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = InpaintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pullpush" => Ok(Self::PullPush),
            "oracle" => Ok(Self::Oracle),
            other => match other.strip_prefix("extern:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Self::External(cmd.to_string())),
                _ => Err(InpaintError::UnknownBackend(other.to_string())),
            },
        }
    }
}

/// Completes a request with the given backend and re-imposes every valid
/// pixel from the masked input, enforcing hole-only completion regardless
/// of what the backend returned.
pub fn inpaint(
    request: &InpaintRequest,
    backend: &dyn InpaintBackend,
) -> Result<InpaintResult, InpaintError> {
    inpaint_at(request, backend, None, 0)
}

fn inpaint_at(
    request: &InpaintRequest,
    backend: &dyn InpaintBackend,
    poses: Option<&[Pose]>,
    t_offset: usize,
) -> Result<InpaintResult, InpaintError> {
    let mut video = backend.complete_posed(request, poses, t_offset)?;
    if video.len() != request.len() {
        return Err(InpaintError::Backend {
            backend: backend.label().to_string(),
            frame: video.len(),
            msg: format!("returned {} frames for {}", video.len(), request.len()),
        });
    }
    for (t, out) in video.iter_mut().enumerate() {
        let input = &request.masked_video[t];
        if !out.same_shape(input) {
            return Err(InpaintError::Backend {
                backend: backend.label().to_string(),
                frame: t,
                msg: "returned frame shape differs from input".into(),
            });
        }
        let mask = &request.masks[t];
        for y in 0..input.height() {
            for x in 0..input.width() {
                if mask.get(x, y) == 1 {
                    for c in 0..input.channels() {
                        out.set(x, y, c, input.get(x, y, c));
                    }
                }
            }
        }
    }
    Ok(InpaintResult { video })
}

/// One slice of the sliding-window schedule; `fresh_start` is the first
/// frame not covered by the previous chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
    pub fresh_start: usize,
}

/// Sliding-window schedule for videos longer than the model window: the
/// first chunk takes up to `window` frames; each later chunk re-reads the
/// previous `overlap` frames and continues. Fresh ranges partition the
/// video.
pub fn chunk_schedule(
    total_frames: usize,
    window: usize,
    overlap: usize,
) -> Result<Vec<Chunk>, InpaintError> {
    if window <= overlap {
        return Err(InpaintError::BadSchedule { window, overlap });
    }
    if total_frames == 0 {
        return Err(InpaintError::BadRequest("empty video".into()));
    }
    let mut chunks = vec![Chunk { start: 0, end: window.min(total_frames), fresh_start: 0 }];
    while chunks.last().expect("nonempty").end < total_frames {
        let prev_end = chunks.last().expect("nonempty").end;
        let start = prev_end - overlap;
        chunks.push(Chunk {
            start,
            end: (start + window).min(total_frames),
            fresh_start: prev_end,
        });
    }
    Ok(chunks)
}

/// Chunked inpainting for arbitrarily long videos. Chunks run in schedule
/// order; on overlap frames the later chunk's hole values win (valid pixels
/// are identical across chunks by the preservation invariant).
pub fn inpaint_video(
    request: &InpaintRequest,
    backend: &dyn InpaintBackend,
    window: usize,
    overlap: usize,
) -> Result<InpaintResult, InpaintError> {
    inpaint_video_posed(request, backend, None, window, overlap)
}

/// [`inpaint_video`] with the video's per-timestamp poses available to
/// pose-aware backends.
pub fn inpaint_video_posed(
    request: &InpaintRequest,
    backend: &dyn InpaintBackend,
    poses: Option<&[Pose]>,
    window: usize,
    overlap: usize,
) -> Result<InpaintResult, InpaintError> {
    let schedule = chunk_schedule(request.len(), window, overlap)?;
    let mut video: Vec<Option<Image>> = vec![None; request.len()];
    for chunk in schedule {
        let sub = request.slice(chunk.start, chunk.end);
        let done = inpaint_at(&sub, backend, poses, chunk.start)?;
        for (i, frame) in done.video.into_iter().enumerate() {
            video[chunk.start + i] = Some(frame);
        }
    }
    Ok(InpaintResult {
        video: video.into_iter().map(|f| f.expect("schedule covers all frames")).collect(),
    })
}

// ---------------------------------------------------------------------------
// Pull-push fill
// ---------------------------------------------------------------------------

/// Fills the holes of one scalar plane by pull-push: valid samples are
/// averaged down a 2x pyramid, then holes are filled top-down by bilinear
/// upsampling. Partial-weight coarse cells blend toward the upsampled value;
/// level-0 valid samples are never touched. A fully-empty plane fills with
/// `fallback`.
pub fn pull_push_plane(
    values: &[f64],
    weights: &[f64],
    width: usize,
    height: usize,
    fallback: f64,
) -> Vec<f64> {
    assert_eq!(values.len(), width * height);
    assert_eq!(weights.len(), width * height);

    // Pull: build value/weight pyramids down to 1x1.
    let mut vals: Vec<Vec<f64>> = vec![values.to_vec()];
    let mut wts: Vec<Vec<f64>> = vec![weights.to_vec()];
    let mut dims = vec![(width, height)];
    while dims.last().expect("nonempty") != &(1, 1) {
        let (w, h) = *dims.last().expect("nonempty");
        let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
        let prev_v = vals.last().expect("nonempty");
        let prev_w = wts.last().expect("nonempty");
        let mut nv = vec![0.0; nw * nh];
        let mut nwt = vec![0.0; nw * nh];
        for y in 0..nh {
            for x in 0..nw {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let (sx, sy) = (x * 2 + dx, y * 2 + dy);
                        if sx < w && sy < h {
                            let wgt = prev_w[sy * w + sx];
                            acc += wgt * prev_v[sy * w + sx];
                            wsum += wgt;
                        }
                    }
                }
                if wsum > 0.0 {
                    nv[y * nw + x] = acc / wsum;
                }
                nwt[y * nw + x] = wsum.min(1.0);
            }
        }
        vals.push(nv);
        wts.push(nwt);
        dims.push((nw, nh));
    }

    // Push: top-down fill.
    let top = vals.len() - 1;
    if wts[top][0] == 0.0 {
        vals[top][0] = fallback;
        wts[top][0] = 1.0;
    }
    for level in (0..top).rev() {
        let (w, h) = dims[level];
        let (cw, ch) = dims[level + 1];
        let coarse = vals[level + 1].clone();
        let sample = |fx: f64, fy: f64| -> f64 {
            let cx = (fx.clamp(0.0, cw as f64 - 1.0)).floor() as usize;
            let cy = (fy.clamp(0.0, ch as f64 - 1.0)).floor() as usize;
            let x1 = (cx + 1).min(cw - 1);
            let y1 = (cy + 1).min(ch - 1);
            let tx = (fx - cx as f64).clamp(0.0, 1.0);
            let ty = (fy - cy as f64).clamp(0.0, 1.0);
            let v00 = coarse[cy * cw + cx];
            let v10 = coarse[cy * cw + x1];
            let v01 = coarse[y1 * cw + cx];
            let v11 = coarse[y1 * cw + x1];
            (v00 * (1.0 - tx) + v10 * tx) * (1.0 - ty) + (v01 * (1.0 - tx) + v11 * tx) * ty
        };
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let wgt = wts[level][i];
                if wgt >= 1.0 {
                    continue;
                }
                let up = sample((x as f64 + 0.5) / 2.0 - 0.5, (y as f64 + 0.5) / 2.0 - 0.5);
                vals[level][i] = if level == 0 || wgt == 0.0 {
                    // Level 0 weights are binary; holes take the upsampled
                    // value outright.
                    if wgt == 0.0 { up } else { vals[level][i] }
                } else {
                    wgt * vals[level][i] + (1.0 - wgt) * up
                };
                wts[level][i] = 1.0;
            }
        }
    }
    vals.into_iter().next().expect("level 0 exists")
}

/// Pull-push over every channel of an image; `fallback` per channel is used
/// when the whole frame is a hole.
pub fn pull_push_fill_image(image: &Image, mask: &BinaryMask, fallback: &[f64]) -> Image {
    let (w, h) = (image.width(), image.height());
    let weights: Vec<f64> = mask.data().iter().map(|m| *m as f64).collect();
    let mut out = image.clone();
    for c in 0..image.channels() {
        let plane: Vec<f64> = (0..w * h)
            .map(|i| image.data()[i * image.channels() + c] as f64)
            .collect();
        let filled = pull_push_plane(&plane, &weights, w, h, fallback[c.min(fallback.len() - 1)]);
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) == 0 {
                    out.set(x, y, c, filled[y * w + x].clamp(0.0, 1.0) as f32);
                }
            }
        }
    }
    out
}

/// Pull-push over a depth map's invalid entries.
pub fn pull_push_fill_depth(depth: &DepthMap, fallback: f64) -> DepthMap {
    let (w, h) = (depth.width(), depth.height());
    let mut values = vec![0.0f64; w * h];
    let mut weights = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            if depth.is_valid(x, y) {
                values[y * w + x] = depth.get(x, y) as f64;
                weights[y * w + x] = 1.0;
            }
        }
    }
    let filled = pull_push_plane(&values, &weights, w, h, fallback);
    let mut out = depth.clone();
    for y in 0..h {
        for x in 0..w {
            if !depth.is_valid(x, y) {
                let v = filled[y * w + x];
                out.set(x, y, if v > 0.0 && v.is_finite() { v as f32 } else { 0.0 });
            }
        }
    }
    out
}

/// Deterministic spatial fill: per frame, holes are completed by pull-push
/// interpolation of the frame's own valid pixels; an entirely-hole frame
/// falls back to the mean color of the anchor frame at the same timestamp.
#[derive(Debug, Clone, Copy, Default)]
pub struct PullPushBackend;

impl InpaintBackend for PullPushBackend {
    fn label(&self) -> &str {
        "pullpush"
    }

    fn complete(
        &self,
        request: &InpaintRequest,
        _t_offset: usize,
    ) -> Result<Vec<Image>, InpaintError> {
        let mut out = Vec::with_capacity(request.len());
        for t in 0..request.len() {
            let frame = &request.masked_video[t];
            let anchor = &request.anchor_video[t];
            let channels = frame.channels();
            let n = (anchor.width() * anchor.height()) as f64;
            let mean: Vec<f64> = (0..channels)
                .map(|c| {
                    anchor
                        .data()
                        .iter()
                        .skip(c)
                        .step_by(channels)
                        .map(|v| *v as f64)
                        .sum::<f64>()
                        / n
                })
                .collect();
            out.push(pull_push_fill_image(frame, &request.masks[t], &mean));
        }
        Ok(out)
    }
}

/// Perfect inpainter for tests: fills holes from the analytic render of the
/// scene at the frame's pose and timestamp.
#[derive(Debug, Clone)]
pub struct OracleBackend<'a> {
    pub scene: &'a SyntheticScene,
    /// Pose per global timestamp of the video being completed.
    pub poses: &'a [Pose],
    pub k: Intrinsics,
}

impl InpaintBackend for OracleBackend<'_> {
    fn label(&self) -> &str {
        "oracle"
    }

    fn complete(
        &self,
        request: &InpaintRequest,
        t_offset: usize,
    ) -> Result<Vec<Image>, InpaintError> {
        self.complete_posed(request, None, t_offset)
    }

    fn complete_posed(
        &self,
        request: &InpaintRequest,
        poses: Option<&[Pose]>,
        t_offset: usize,
    ) -> Result<Vec<Image>, InpaintError> {
        let pose_list = poses.unwrap_or(self.poses);
        let mut out = Vec::with_capacity(request.len());
        for i in 0..request.len() {
            let t = t_offset + i;
            let Some(pose) = pose_list.get(t) else {
                return Err(InpaintError::Backend {
                    backend: "oracle".into(),
                    frame: i,
                    msg: format!("no pose for timestamp {t}"),
                });
            };
            let frame = &request.masked_video[i];
            if frame.width() != self.k.width
                || frame.height() != self.k.height
                || frame.channels() != 3
            {
                return Err(InpaintError::Backend {
                    backend: "oracle".into(),
                    frame: i,
                    msg: format!(
                        "frame is {}x{}x{}, oracle renders {}x{}x3",
                        frame.width(),
                        frame.height(),
                        frame.channels(),
                        self.k.width,
                        self.k.height
                    ),
                });
            }
            let (render, _) = crate::synth::render(self.scene, pose, &self.k, t as f64);
            out.push(render);
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct ExternalRequest {
    #[serde(rename = "T")]
    t: usize,
    width: usize,
    height: usize,
    window: usize,
    overlap: usize,
}

/// Shells out to an external completion process.
///
/// The command line is split on whitespace and invoked with one extra
/// argument: a working directory containing `frame_%04d.ppm` (masked
/// frames), `mask_%04d.pgm`, `anchor_%04d.ppm`, and `request.json` with
/// `{T, width, height, window, overlap}`. The process must write
/// `out_%04d.ppm` for every frame and exit 0.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    pub command: String,
    pub window: usize,
    pub overlap: usize,
}

impl InpaintBackend for ExternalBackend {
    fn label(&self) -> &str {
        "extern"
    }

    fn complete(
        &self,
        request: &InpaintRequest,
        _t_offset: usize,
    ) -> Result<Vec<Image>, InpaintError> {
        let fail = |frame: usize, msg: String| InpaintError::Backend {
            backend: format!("extern:{}", self.command),
            frame,
            msg,
        };
        let dir = tempfile::tempdir().map_err(|e| fail(0, format!("tempdir: {e}")))?;
        for t in 0..request.len() {
            let write = |name: String, bytes: Vec<u8>| -> Result<(), InpaintError> {
                let mut f = std::fs::File::create(dir.path().join(name))
                    .map_err(|e| fail(t, e.to_string()))?;
                f.write_all(&bytes).map_err(|e| fail(t, e.to_string()))
            };
            write(format!("frame_{t:04}.ppm"), write_ppm(&request.masked_video[t]))?;
            write(
                format!("mask_{t:04}.pgm"),
                write_ppm(&crate::formats::mask_to_image(&request.masks[t])),
            )?;
            write(format!("anchor_{t:04}.ppm"), write_ppm(&request.anchor_video[t]))?;
        }
        let meta = ExternalRequest {
            t: request.len(),
            width: request.masked_video[0].width(),
            height: request.masked_video[0].height(),
            window: self.window,
            overlap: self.overlap,
        };
        std::fs::write(
            dir.path().join("request.json"),
            serde_json::to_string_pretty(&meta).expect("request serializes"),
        )
        .map_err(|e| fail(0, e.to_string()))?;

        let parts: Vec<&str> = self.command.split_whitespace().collect();
        if parts.is_empty() {
            return Err(InpaintError::UnknownBackend("extern:".into()));
        }
        let output = std::process::Command::new(parts[0])
            .args(&parts[1..])
            .arg(dir.path())
            .output()
            .map_err(|e| fail(0, format!("spawn failed: {e}")))?;
        if !output.status.success() {
            return Err(fail(
                0,
                format!(
                    "exit status {:?}: {}",
                    output.status.code(),
                    String::from_utf8_lossy(&output.stderr)
                ),
            ));
        }
        let mut frames = Vec::with_capacity(request.len());
        for t in 0..request.len() {
            let path = dir.path().join(format!("out_{t:04}.ppm"));
            let bytes = std::fs::read(&path)
                .map_err(|e| fail(t, format!("missing output frame: {e}")))?;
            let image = crate::formats::read_ppm(&bytes).map_err(|e| fail(t, e.to_string()))?;
            frames.push(image);
        }
        Ok(frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::Image;

    fn flat_request(w: usize, h: usize, color: f32, mask: BinaryMask) -> InpaintRequest {
        let frame = crate::trackmask::apply_mask(&Image::filled(w, h, 3, color), &mask).unwrap();
        let anchor = Image::filled(w, h, 3, color);
        InpaintRequest::new(vec![frame], vec![mask], vec![anchor]).unwrap()
    }

    #[test]
    fn chunk_schedule_paper_example() {
        let chunks = chunk_schedule(28, 16, 4).unwrap();
        assert_eq!(
            chunks,
            vec![
                Chunk { start: 0, end: 16, fresh_start: 0 },
                Chunk { start: 12, end: 28, fresh_start: 16 },
            ]
        );
    }

    #[test]
    fn chunk_schedule_short_and_exact() {
        assert_eq!(
            chunk_schedule(10, 16, 4).unwrap(),
            vec![Chunk { start: 0, end: 10, fresh_start: 0 }]
        );
        assert_eq!(
            chunk_schedule(16, 16, 4).unwrap(),
            vec![Chunk { start: 0, end: 16, fresh_start: 0 }]
        );
    }

    #[test]
    fn chunk_schedule_rejects_window_at_most_overlap() {
        assert!(matches!(
            chunk_schedule(20, 4, 4),
            Err(InpaintError::BadSchedule { .. })
        ));
        assert!(matches!(
            chunk_schedule(20, 3, 4),
            Err(InpaintError::BadSchedule { .. })
        ));
    }

    #[test]
    fn fresh_ranges_partition_exhaustively() {
        for total in 1..=64 {
            let chunks = chunk_schedule(total, 16, 4).unwrap();
            let mut covered = vec![0usize; total];
            for (i, c) in chunks.iter().enumerate() {
                assert!(c.end - c.start <= 16);
                assert!(c.fresh_start >= c.start && c.fresh_start < c.end);
                if i > 0 {
                    let prev = &chunks[i - 1];
                    assert_eq!(prev.end - c.start, 4.min(prev.end - prev.start));
                    assert_eq!(c.fresh_start, prev.end);
                }
                for f in c.fresh_start..c.end {
                    covered[f] += 1;
                }
            }
            assert!(covered.iter().all(|c| *c == 1), "T = {total}");
        }
    }

    #[test]
    fn all_ones_mask_is_identity_for_any_backend() {
        let req = flat_request(8, 8, 0.4, BinaryMask::ones(8, 8));
        let out = inpaint(&req, &PullPushBackend).unwrap();
        assert_eq!(out.video[0], req.masked_video[0]);
    }

    #[test]
    fn all_zero_mask_fills_every_pixel_from_anchor_mean() {
        let req = flat_request(8, 8, 0.4, BinaryMask::zeros(8, 8));
        let out = inpaint(&req, &PullPushBackend).unwrap();
        for v in out.video[0].data() {
            assert!((v - 0.4).abs() < 1e-6);
        }
    }

    #[test]
    fn hole_in_constant_field_fills_exactly() {
        let mut mask = BinaryMask::ones(16, 16);
        for y in 6..10 {
            for x in 6..10 {
                mask.set(x, y, 0);
            }
        }
        let req = flat_request(16, 16, 0.7, mask);
        let out = inpaint(&req, &PullPushBackend).unwrap();
        for v in out.video[0].data() {
            assert!((v - 0.7).abs() < 1e-6);
        }
    }

    #[test]
    fn single_pixel_hole_fill_is_convex_combination() {
        // Left half 0.2, right half 0.8, hole on the boundary.
        let mut frame = Image::filled(16, 16, 3, 0.2);
        for y in 0..16 {
            for x in 8..16 {
                for c in 0..3 {
                    frame.set(x, y, c, 0.8);
                }
            }
        }
        let mut mask = BinaryMask::ones(16, 16);
        mask.set(8, 8, 0);
        for c in 0..3 {
            frame.set(8, 8, c, 0.0);
        }
        let req = InpaintRequest::new(
            vec![frame.clone()],
            vec![mask],
            vec![Image::filled(16, 16, 3, 0.5)],
        )
        .unwrap();
        let out = inpaint(&req, &PullPushBackend).unwrap();
        let fill = out.video[0].get(8, 8, 0);
        assert!(
            (0.2..=0.8).contains(&fill),
            "fill {fill} outside the convex hull of valid colors"
        );
    }

    #[test]
    fn linear_gradient_fill_within_ten_percent() {
        // Horizontal gradient 0.1..0.9 with a centered hole.
        let (w, h) = (32, 32);
        let mut frame = Image::filled(w, h, 1, 0.0);
        for y in 0..h {
            for x in 0..w {
                frame.set(x, y, 0, 0.1 + 0.8 * x as f32 / (w - 1) as f32);
            }
        }
        let reference = frame.clone();
        let mut mask = BinaryMask::ones(w, h);
        for y in 13..19 {
            for x in 13..19 {
                mask.set(x, y, 0);
                frame.set(x, y, 0, 0.0);
            }
        }
        let anchor = Image::filled(w, h, 1, 0.5);
        let req = InpaintRequest::new(vec![frame], vec![mask], vec![anchor]).unwrap();
        let out = inpaint(&req, &PullPushBackend).unwrap();
        for y in 13..19 {
            for x in 13..19 {
                let got = out.video[0].get(x, y, 0);
                let want = reference.get(x, y, 0);
                assert!(
                    (got - want).abs() / want < 0.10,
                    "({x},{y}): filled {got}, analytic {want}"
                );
            }
        }
    }

    #[test]
    fn valid_pixels_survive_any_backend_output() {
        // A backend that maliciously rewrites everything.
        struct Vandal;
        impl InpaintBackend for Vandal {
            fn label(&self) -> &str {
                "vandal"
            }
            fn complete(
                &self,
                request: &InpaintRequest,
                _t: usize,
            ) -> Result<Vec<Image>, InpaintError> {
                Ok(request
                    .masked_video
                    .iter()
                    .map(|f| Image::filled(f.width(), f.height(), f.channels(), 1.0))
                    .collect())
            }
        }
        let mut mask = BinaryMask::ones(8, 8);
        mask.set(3, 3, 0);
        let req = flat_request(8, 8, 0.25, mask.clone());
        let out = inpaint(&req, &Vandal).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let expected = if mask.get(x, y) == 1 { 0.25 } else { 1.0 };
                assert_eq!(out.video[0].get(x, y, 0), expected);
            }
        }
    }

    #[test]
    fn unknown_backend_spec_is_an_error() {
        assert!("pullpush".parse::<BackendSpec>().is_ok());
        assert!("oracle".parse::<BackendSpec>().is_ok());
        assert_eq!(
            "extern:cp -r".parse::<BackendSpec>().unwrap(),
            BackendSpec::External("cp -r".into())
        );
        assert!(matches!(
            "diffusion".parse::<BackendSpec>(),
            Err(InpaintError::UnknownBackend(_))
        ));
        assert!("extern:".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn request_validation_catches_mismatches() {
        let frame = Image::filled(8, 8, 3, 0.5);
        let mask = BinaryMask::ones(8, 8);
        assert!(InpaintRequest::new(vec![], vec![], vec![]).is_err());
        assert!(InpaintRequest::new(
            vec![frame.clone()],
            vec![mask.clone(), mask.clone()],
            vec![frame.clone()]
        )
        .is_err());
        assert!(InpaintRequest::new(
            vec![frame.clone()],
            vec![BinaryMask::ones(4, 4)],
            vec![frame.clone()]
        )
        .is_err());
        assert!(InpaintRequest::new(
            vec![frame.clone()],
            vec![mask],
            vec![Image::filled(8, 8, 1, 0.5)]
        )
        .is_err());
    }

    #[test]
    fn chunked_inpaint_covers_long_video() {
        let t_total = 28;
        let mut mask = BinaryMask::ones(8, 8);
        mask.set(4, 4, 0);
        let frames: Vec<Image> = (0..t_total)
            .map(|t| {
                let shade = 0.1 + 0.8 * (t as f32) / (t_total as f32);
                crate::trackmask::apply_mask(&Image::filled(8, 8, 3, shade), &mask).unwrap()
            })
            .collect();
        let anchors: Vec<Image> = (0..t_total)
            .map(|t| Image::filled(8, 8, 3, 0.1 + 0.8 * (t as f32) / (t_total as f32)))
            .collect();
        let req =
            InpaintRequest::new(frames, vec![mask.clone(); t_total], anchors).unwrap();
        let out = inpaint_video(&req, &PullPushBackend, 16, 4).unwrap();
        assert_eq!(out.video.len(), t_total);
        for (t, frame) in out.video.iter().enumerate() {
            let shade = 0.1 + 0.8 * (t as f32) / (t_total as f32);
            // Hole filled from this frame's own constant surround.
            assert!((frame.get(4, 4, 0) - shade).abs() < 1e-5, "frame {t}");
        }
    }

    #[test]
    fn chunk_overlap_takes_the_later_chunks_hole_values() {
        // A backend whose fill value encodes the chunk it ran in, making
        // the overlap policy observable.
        struct ChunkStamp;
        impl InpaintBackend for ChunkStamp {
            fn label(&self) -> &str {
                "stamp"
            }
            fn complete(
                &self,
                request: &InpaintRequest,
                t_offset: usize,
            ) -> Result<Vec<Image>, InpaintError> {
                let shade = if t_offset == 0 { 0.25 } else { 0.75 };
                Ok(request
                    .masked_video
                    .iter()
                    .map(|f| Image::filled(f.width(), f.height(), f.channels(), shade))
                    .collect())
            }
        }
        let mut mask = BinaryMask::ones(4, 4);
        mask.set(1, 1, 0);
        let frames: Vec<Image> = (0..12)
            .map(|_| {
                crate::trackmask::apply_mask(&Image::filled(4, 4, 3, 0.5), &mask).unwrap()
            })
            .collect();
        let anchors = vec![Image::filled(4, 4, 3, 0.5); 12];
        let req = InpaintRequest::new(frames, vec![mask; 12], anchors).unwrap();
        // Chunks: (0,8,0) and (6,12,8); frames 6 and 7 overlap.
        let out = inpaint_video(&req, &ChunkStamp, 8, 2).unwrap();
        for (t, frame) in out.video.iter().enumerate() {
            let expected = if t < 6 { 0.25 } else { 0.75 };
            assert_eq!(frame.get(1, 1, 0), expected, "frame {t}");
            // Valid pixels always come from the input.
            assert_eq!(frame.get(0, 0, 0), 0.5);
        }
    }

    #[test]
    fn external_backend_round_trips_through_the_protocol() {
        // A fake inpainter: copy each anchor frame to the output slot.
        // Command splitting is whitespace-based, so ship the logic as a
        // script file instead of playing quoting games.
        let script = "for f in \"$1\"/anchor_*.ppm; do \
             out=$(echo \"$f\" | sed 's/anchor_/out_/'); cp \"$f\" \"$out\"; done";
        let dir = tempfile::tempdir().unwrap();
        let script_path = dir.path().join("fake_inpaint.sh");
        std::fs::write(&script_path, format!("#!/bin/sh\n{script}\n")).unwrap();
        let backend = ExternalBackend {
            command: format!("sh {}", script_path.display()),
            window: 16,
            overlap: 4,
        };

        // 0.2 and 0.8 survive the 8-bit PPM round trip exactly (51/255 and
        // 204/255).
        let mut mask = BinaryMask::ones(8, 8);
        mask.set(2, 5, 0);
        let masked =
            crate::trackmask::apply_mask(&Image::filled(8, 8, 3, 0.2), &mask).unwrap();
        let anchor = Image::filled(8, 8, 3, 0.8);
        let req = InpaintRequest::new(vec![masked], vec![mask], vec![anchor]).unwrap();
        let out = inpaint(&req, &backend).unwrap();
        // Hole came from the anchor copy; valid pixels preserved.
        assert_eq!(out.video[0].get(2, 5, 0), 0.8);
        assert_eq!(out.video[0].get(0, 0, 0), 0.2);
    }

    #[test]
    fn failing_external_command_propagates() {
        let backend = ExternalBackend { command: "false".into(), window: 16, overlap: 4 };
        let req = flat_request(4, 4, 0.5, BinaryMask::ones(4, 4));
        assert!(matches!(
            inpaint(&req, &backend),
            Err(InpaintError::Backend { .. })
        ));
    }
}

//! Iterative view augmentation: data buffer growth, peripheral-frame
//! selection, target-pose assignment, warp-distance-rank grouping,
//! inpainting dispatch, and supervision-mask bookkeeping.
//!
//! Starting from a buffer holding only the input video, each iteration
//! warps the most peripheral buffered frames at every timestamp to the
//! closest still-unvisited target poses, groups the warped frames by warp
//! distance rank into `h = H / N` videos, completes them with the
//! inpainting backend (anchored on the original input video), estimates
//! their depths, updates per-pixel supervision masks against a global point
//! cloud that records inpainting history (first inpaint wins), and appends
//! the finished videos to the buffer. After `N` iterations every target
//! pose has been visited exactly once per timestamp and the buffer holds
//! `1 + H` entries.

mod persist;

pub use persist::{read_buffer, write_buffer, BufferManifest, PersistedBuffer};

use thiserror::Error;

use crate::depth_align::{
    align_depth_ransac, project_sparse, AlignError, RansacConfig,
};
use crate::formats::{BinaryMask, DepthMap, Image};
use crate::geom::{backproject, pose_distance, project, Intrinsics, Pixel, Point3, Pose};
use crate::inpaint::{
    inpaint_video_posed, pull_push_fill_depth, InpaintBackend, InpaintError, InpaintRequest,
};
use crate::rng::mix;
use crate::synth::SyntheticScene;
use crate::warp::{forward_warp, WarpError, WarpedFrame};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("invalid buffer entry: {0}")]
    InvalidEntry(String),
    #[error("{total} target poses not divisible by {iterations} iterations")]
    PlanInfeasible { total: usize, iterations: usize },
    #[error("timestamp {t}: need {need} unvisited target poses, have {have}")]
    NotEnoughUnvisited { t: usize, need: usize, have: usize },
    #[error("timestamp {t}: {found} warps, expected {expected}")]
    RaggedWarps { t: usize, found: usize, expected: usize },
    #[error("iteration {iteration} video {video}: {source}")]
    Inpaint { iteration: usize, video: usize, source: InpaintError },
    #[error("iteration {iteration} video {video} frame {frame}: {source}")]
    Depth { iteration: usize, video: usize, frame: usize, source: AlignError },
    #[error(transparent)]
    Warp(#[from] WarpError),
}

/// One video in the buffer: frames, aligned metric depths, and poses, all
/// of equal length, plus the iteration that produced it (0 = input).
#[derive(Debug, Clone)]
pub struct BufferEntry {
    pub video: Vec<Image>,
    pub depths: Vec<DepthMap>,
    pub poses: Vec<Pose>,
    pub iteration_born: usize,
}

impl BufferEntry {
    pub fn new(
        video: Vec<Image>,
        depths: Vec<DepthMap>,
        poses: Vec<Pose>,
        iteration_born: usize,
    ) -> Result<Self, AugmentError> {
        if video.is_empty() {
            return Err(AugmentError::InvalidEntry("entry has no frames".into()));
        }
        if video.len() != depths.len() || video.len() != poses.len() {
            return Err(AugmentError::InvalidEntry(format!(
                "lengths differ: {} frames, {} depths, {} poses",
                video.len(),
                depths.len(),
                poses.len()
            )));
        }
        for (t, (frame, depth)) in video.iter().zip(&depths).enumerate() {
            if frame.width() != depth.width() || frame.height() != depth.height() {
                return Err(AugmentError::InvalidEntry(format!(
                    "frame {t}: image {}x{} vs depth {}x{}",
                    frame.width(),
                    frame.height(),
                    depth.width(),
                    depth.height()
                )));
            }
        }
        Ok(Self { video, depths, poses, iteration_born })
    }

    pub fn frame_count(&self) -> usize {
        self.video.len()
    }
}

/// The growing set of (video, depths, poses) entries across augmentation
/// iterations. Entry 0 is the input and is never mutated.
#[derive(Debug, Clone)]
pub struct DataBuffer {
    entries: Vec<BufferEntry>,
    frame_count: usize,
}

impl DataBuffer {
    pub fn new(input: BufferEntry) -> Result<Self, AugmentError> {
        if input.iteration_born != 0 {
            return Err(AugmentError::InvalidEntry(
                "input entry must have iteration_born 0".into(),
            ));
        }
        let frame_count = input.frame_count();
        Ok(Self { entries: vec![input], frame_count })
    }

    pub fn push(&mut self, entry: BufferEntry) -> Result<(), AugmentError> {
        if entry.frame_count() != self.frame_count {
            return Err(AugmentError::InvalidEntry(format!(
                "entry has {} frames, buffer has {}",
                entry.frame_count(),
                self.frame_count
            )));
        }
        if entry.iteration_born < self.entries.last().expect("nonempty").iteration_born {
            return Err(AugmentError::InvalidEntry(
                "iteration_born must be nondecreasing".into(),
            ));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Pre-computed target poses, per timestamp, with visited flags.
#[derive(Debug, Clone)]
pub struct TargetPoseSet {
    poses: Vec<Vec<Pose>>,
    visited: Vec<Vec<bool>>,
}

impl TargetPoseSet {
    pub fn new(poses: Vec<Vec<Pose>>) -> Self {
        let visited = poses.iter().map(|p| vec![false; p.len()]).collect();
        Self { poses, visited }
    }

    /// Orbit arcs around each input frame's own look-at point, at that
    /// frame's median valid depth.
    pub fn from_orbits(
        entry: &BufferEntry,
        k: &Intrinsics,
        count: usize,
        max_angle: f64,
    ) -> Result<Self, AugmentError> {
        let global_median = entry
            .depths
            .iter()
            .find_map(|d| d.median_valid())
            .ok_or_else(|| {
                AugmentError::InvalidEntry("no valid depth anywhere in the input".into())
            })?;
        let poses = entry
            .poses
            .iter()
            .zip(&entry.depths)
            .map(|(pose, depth)| {
                let center_depth = depth.median_valid().unwrap_or(global_median);
                crate::geom::orbit_targets(pose, k, center_depth, count, max_angle)
            })
            .collect();
        Ok(Self::new(poses))
    }

    pub fn frame_count(&self) -> usize {
        self.poses.len()
    }

    /// H, the number of target poses per timestamp.
    pub fn count_per_timestamp(&self) -> usize {
        self.poses.first().map_or(0, Vec::len)
    }

    pub fn pose(&self, t: usize, index: usize) -> &Pose {
        &self.poses[t][index]
    }

    pub fn unvisited(&self, t: usize) -> Vec<usize> {
        self.visited[t]
            .iter()
            .enumerate()
            .filter_map(|(i, v)| (!v).then_some(i))
            .collect()
    }

    pub fn mark_visited(&mut self, t: usize, index: usize) {
        self.visited[t][index] = true;
    }

    pub fn all_visited(&self) -> bool {
        self.visited.iter().all(|v| v.iter().all(|x| *x))
    }

    pub fn visited_count(&self) -> usize {
        self.visited
            .iter()
            .map(|v| v.iter().filter(|x| **x).count())
            .sum()
    }
}

/// Validates the iteration plan and returns h = H / N.
pub fn videos_per_iteration(total: usize, iterations: usize) -> Result<usize, AugmentError> {
    if iterations == 0 || total == 0 || total % iterations != 0 {
        return Err(AugmentError::PlanInfeasible { total, iterations });
    }
    Ok(total / iterations)
}

/// A colored world point with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct CloudPoint {
    pub position: Point3,
    pub color: [f32; 3],
    pub frame: usize,
    pub iteration: usize,
}

/// Fused point cloud tracking which scene regions have been seen or
/// inpainted; rendered per frame to decide supervision validity.
#[derive(Debug, Clone, Default)]
pub struct GlobalPointCloud {
    pub points: Vec<CloudPoint>,
}

impl GlobalPointCloud {
    /// Back-projects every valid-depth pixel of the entry (on a stride
    /// grid) into the cloud.
    pub fn from_entry(entry: &BufferEntry, k: &Intrinsics, stride: usize) -> Self {
        let stride = stride.max(1);
        let mut points = Vec::new();
        for (t, (frame, depth)) in entry.video.iter().zip(&entry.depths).enumerate() {
            let pose = &entry.poses[t];
            let mut y = 0;
            while y < depth.height() {
                let mut x = 0;
                while x < depth.width() {
                    if depth.is_valid(x, y) {
                        let position = backproject(
                            Pixel::new(x as f64, y as f64),
                            depth.get(x, y) as f64,
                            pose,
                            k,
                        )
                        .expect("valid depth is positive and finite");
                        let mut color = [0.0f32; 3];
                        for (c, out) in color.iter_mut().enumerate().take(frame.channels()) {
                            *out = frame.get(x, y, c);
                        }
                        points.push(CloudPoint {
                            position,
                            color,
                            frame: t,
                            iteration: entry.iteration_born,
                        });
                    }
                    x += stride;
                }
                y += stride;
            }
        }
        Self { points }
    }

    /// Coverage mask of the cloud splatted into a view with a Chebyshev
    /// footprint: 1 marks pixels the cloud reaches.
    pub fn render_visibility(
        &self,
        pose: &Pose,
        k: &Intrinsics,
        footprint: usize,
    ) -> BinaryMask {
        let mut mask = BinaryMask::zeros(k.width, k.height);
        let r = footprint as i64;
        for point in &self.points {
            let Some((pixel, _)) = project(point.position, pose, k) else {
                continue;
            };
            let cx = pixel.u.round() as i64;
            let cy = pixel.v.round() as i64;
            for y in (cy - r).max(0)..=(cy + r).min(k.height as i64 - 1) {
                for x in (cx - r).max(0)..=(cx + r).min(k.width as i64 - 1) {
                    mask.set(x as usize, y as usize, 1);
                }
            }
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The two buffered entries most distant from the input pose at timestamp
/// `t` (ties by entry index; a single-entry buffer returns it twice).
pub fn select_peripheral(buffer: &DataBuffer, t: usize, scene_scale: f64) -> (usize, usize) {
    let base = &buffer.entries()[0].poses[t];
    let mut scored: Vec<(f64, usize)> = buffer
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| (pose_distance(&e.poses[t], base, scene_scale), i))
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("pose distances are finite")
            .then(a.1.cmp(&b.1))
    });
    let first = scored[0].1;
    let second = scored.get(1).map_or(first, |s| s.1);
    (first, second)
}

/// A target pose paired with its warp source.
#[derive(Debug, Clone, Copy)]
pub struct TargetAssignment {
    pub pose_index: usize,
    pub target: Pose,
    pub source_entry: usize,
    /// Distance from the target to its (closer) source pose.
    pub warp_distance: f64,
}

/// Picks the `h` unvisited target poses closest to either peripheral frame
/// at timestamp `t`, each paired with the closer peripheral as its warp
/// source, and marks them visited. Ties break by pose index; a source tie
/// prefers the first peripheral.
pub fn assign_targets(
    buffer: &DataBuffer,
    t: usize,
    targets: &mut TargetPoseSet,
    h: usize,
    scene_scale: f64,
) -> Result<Vec<TargetAssignment>, AugmentError> {
    let unvisited = targets.unvisited(t);
    if unvisited.len() < h {
        return Err(AugmentError::NotEnoughUnvisited { t, need: h, have: unvisited.len() });
    }
    let (pa, pb) = select_peripheral(buffer, t, scene_scale);
    let pose_a = &buffer.entries()[pa].poses[t];
    let pose_b = &buffer.entries()[pb].poses[t];

    let mut scored: Vec<TargetAssignment> = unvisited
        .into_iter()
        .map(|i| {
            let target = targets.pose(t, i);
            let da = pose_distance(target, pose_a, scene_scale);
            let db = pose_distance(target, pose_b, scene_scale);
            let (source_entry, warp_distance) = if da <= db { (pa, da) } else { (pb, db) };
            TargetAssignment { pose_index: i, target: *target, source_entry, warp_distance }
        })
        .collect();
    scored.sort_by(|a, b| {
        a.warp_distance
            .partial_cmp(&b.warp_distance)
            .expect("pose distances are finite")
            .then(a.pose_index.cmp(&b.pose_index))
    });
    scored.truncate(h);
    for a in &scored {
        targets.mark_visited(t, a.pose_index);
    }
    Ok(scored)
}

/// One warped frame with its assignment metadata.
#[derive(Debug, Clone)]
pub struct RankedWarp {
    pub warped: WarpedFrame,
    pub assignment: TargetAssignment,
}

/// Groups per-timestamp warps into `h` temporally coherent videos: video
/// `l` collects the rank-`l` least distant warp of every timestamp (ties by
/// pose index).
pub fn group_by_rank(
    per_timestamp: Vec<Vec<RankedWarp>>,
) -> Result<Vec<Vec<RankedWarp>>, AugmentError> {
    let h = per_timestamp.first().map_or(0, Vec::len);
    for (t, warps) in per_timestamp.iter().enumerate() {
        if warps.len() != h {
            return Err(AugmentError::RaggedWarps { t, found: warps.len(), expected: h });
        }
    }
    let frame_count = per_timestamp.len();
    let mut videos: Vec<Vec<RankedWarp>> = vec![Vec::with_capacity(frame_count); h];
    for warps in per_timestamp {
        let mut order: Vec<usize> = (0..h).collect();
        order.sort_by(|&a, &b| {
            warps[a]
                .warp_distance()
                .partial_cmp(&warps[b].warp_distance())
                .expect("distances are finite")
                .then(warps[a].assignment.pose_index.cmp(&warps[b].assignment.pose_index))
        });
        let mut slots: Vec<Option<RankedWarp>> = warps.into_iter().map(Some).collect();
        for (rank, &idx) in order.iter().enumerate() {
            videos[rank].push(slots[idx].take().expect("each slot taken once"));
        }
    }
    Ok(videos)
}

impl RankedWarp {
    fn warp_distance(&self) -> f64 {
        self.assignment.warp_distance
    }
}

/// Supervision masks for one augmented video, the pre-inpainting warp
/// masks they were derived from, and a tally of hole pixels that could not
/// join the cloud for lack of depth.
#[derive(Debug, Clone)]
pub struct SupervisionRecord {
    pub masks: Vec<BinaryMask>,
    pub pre_masks: Vec<BinaryMask>,
    pub skipped_missing_depth: usize,
}

/// Builds supervision masks for an inpainted video and folds its
/// newly-inpainted pixels into the cloud.
///
/// Per frame, the cloud is rendered to the frame's pose as a visibility
/// mask V. Pre-mask-valid pixels always supervise (S = 1). A hole pixel not
/// yet visible (V = 0) is first-inpainted here: S = 1 and the pixel is
/// back-projected into the cloud (visible to all later frames, including
/// later frames of this same call). A hole pixel already visible (V = 1)
/// was inpainted before: S = 0. Hole pixels without valid depth cannot join
/// the cloud; they get S = 0 and are tallied.
pub fn update_supervision(
    inpainted: &[Image],
    pre_masks: &[BinaryMask],
    poses: &[Pose],
    k: &Intrinsics,
    cloud: &mut GlobalPointCloud,
    depths: &[DepthMap],
    iteration: usize,
    footprint: usize,
) -> SupervisionRecord {
    assert_eq!(inpainted.len(), pre_masks.len());
    assert_eq!(inpainted.len(), poses.len());
    assert_eq!(inpainted.len(), depths.len());

    let mut masks = Vec::with_capacity(inpainted.len());
    let mut skipped = 0usize;
    for (t, frame) in inpainted.iter().enumerate() {
        let visibility = cloud.render_visibility(&poses[t], k, footprint);
        let pre = &pre_masks[t];
        let depth = &depths[t];
        let mut s = BinaryMask::zeros(frame.width(), frame.height());
        for y in 0..frame.height() {
            for x in 0..frame.width() {
                if pre.get(x, y) == 1 {
                    s.set(x, y, 1);
                    continue;
                }
                if visibility.get(x, y) == 1 {
                    continue; // already inpainted elsewhere: S = 0
                }
                if !depth.is_valid(x, y) {
                    skipped += 1;
                    continue;
                }
                s.set(x, y, 1);
                let position = backproject(
                    Pixel::new(x as f64, y as f64),
                    depth.get(x, y) as f64,
                    &poses[t],
                    k,
                )
                .expect("valid depth is positive and finite");
                let mut color = [0.0f32; 3];
                for (c, out) in color.iter_mut().enumerate().take(frame.channels()) {
                    *out = frame.get(x, y, c);
                }
                cloud.points.push(CloudPoint { position, color, frame: t, iteration });
            }
        }
        masks.push(s);
    }
    SupervisionRecord { masks, pre_masks: pre_masks.to_vec(), skipped_missing_depth: skipped }
}

/// Supplies aligned metric depth maps for a freshly inpainted video.
/// (Depth re-estimation networks are outside this artifact; these providers
/// keep the pipeline shape.)
pub trait DepthProvider {
    fn depths_for(
        &self,
        video: &[Image],
        warped: &[WarpedFrame],
        poses: &[Pose],
        k: &Intrinsics,
        iteration: usize,
        video_index: usize,
        seed: u64,
    ) -> Result<Vec<DepthMap>, AugmentError>;
}

/// Exact depth from the synthetic scene (scene time = frame index).
#[derive(Debug, Clone)]
pub struct OracleDepthProvider<'a> {
    pub scene: &'a SyntheticScene,
}

impl DepthProvider for OracleDepthProvider<'_> {
    fn depths_for(
        &self,
        _video: &[Image],
        _warped: &[WarpedFrame],
        poses: &[Pose],
        k: &Intrinsics,
        _iteration: usize,
        _video_index: usize,
        _seed: u64,
    ) -> Result<Vec<DepthMap>, AugmentError> {
        Ok(poses
            .iter()
            .enumerate()
            .map(|(t, pose)| crate::synth::render(self.scene, pose, k, t as f64).1)
            .collect())
    }
}

/// Geometric propagation: the warp's z-buffer is already metric depth in
/// the target view; holes are pull-push filled and the result re-aligned
/// against the sparse cloud with the usual RANSAC fit.
#[derive(Debug, Clone)]
pub struct PropagatedDepthProvider {
    pub sparse: Vec<Point3>,
    pub ransac: RansacConfig,
}

impl DepthProvider for PropagatedDepthProvider {
    fn depths_for(
        &self,
        _video: &[Image],
        warped: &[WarpedFrame],
        poses: &[Pose],
        k: &Intrinsics,
        iteration: usize,
        video_index: usize,
        seed: u64,
    ) -> Result<Vec<DepthMap>, AugmentError> {
        let mut out = Vec::with_capacity(warped.len());
        for (t, w) in warped.iter().enumerate() {
            let wrap = |source: AlignError| AugmentError::Depth {
                iteration,
                video: video_index,
                frame: t,
                source,
            };
            let fallback = w.zbuffer.median_valid().unwrap_or(1.0);
            let filled = pull_push_fill_depth(&w.zbuffer, fallback);
            // Sparse points actually visible in this view.
            let visible: Vec<Point3> = self
                .sparse
                .iter()
                .copied()
                .filter(|p| {
                    project(*p, &poses[t], k).is_some_and(|(pix, _)| {
                        pix.u >= 0.0
                            && pix.u < k.width as f64
                            && pix.v >= 0.0
                            && pix.v < k.height as f64
                    })
                })
                .collect();
            let obs = project_sparse(&self.sparse, &poses[t], k, &filled).map_err(wrap)?;
            let alignment = align_depth_ransac(
                &obs,
                &filled,
                &poses[t],
                k,
                &visible,
                mix(seed, t as u64),
                &self.ransac,
            )
            .map_err(wrap)?;
            out.push(alignment.aligned);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct AugmentConfig {
    /// N, the number of augmentation iterations.
    pub iterations: usize,
    pub seed: u64,
    /// Inpainting chunk window and overlap.
    pub chunk_window: usize,
    pub chunk_overlap: usize,
    /// Stride of the initial supervision cloud built from the input video.
    pub cloud_stride: usize,
    /// Chebyshev splat radius for supervision visibility rendering.
    pub splat_footprint: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            iterations: 6,
            seed: 0,
            chunk_window: 16,
            chunk_overlap: 4,
            cloud_stride: 1,
            splat_footprint: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub buffer: DataBuffer,
    /// One record per augmented entry, in buffer order (entry i + 1).
    pub supervision: Vec<SupervisionRecord>,
    pub cloud: GlobalPointCloud,
    pub scene_scale: f64,
    /// The target set after the run; every pose is visited.
    pub targets: TargetPoseSet,
}

/// Runs the full N-iteration view augmentation.
///
/// The anchor passed to every inpaint call is the original input video.
/// Videos within an iteration are processed in rank order and frames in
/// time order, which fixes the cloud growth order and makes the run
/// byte-for-byte deterministic for a fixed seed.
pub fn run_augmentation(
    input: BufferEntry,
    mut targets: TargetPoseSet,
    backend: &dyn InpaintBackend,
    depth_provider: &dyn DepthProvider,
    k: &Intrinsics,
    config: &AugmentConfig,
) -> Result<AugmentOutcome, AugmentError> {
    let total = targets.count_per_timestamp();
    let h = videos_per_iteration(total, config.iterations)?;
    if targets.frame_count() != input.frame_count() {
        return Err(AugmentError::InvalidEntry(format!(
            "{} target timestamps for {} frames",
            targets.frame_count(),
            input.frame_count()
        )));
    }
    let scene_scale = input.depths[0].median_valid().ok_or_else(|| {
        AugmentError::InvalidEntry("first input depth map has no valid pixels".into())
    })?;

    let anchor = input.video.clone();
    let mut cloud = GlobalPointCloud::from_entry(&input, k, config.cloud_stride);
    let mut buffer = DataBuffer::new(input)?;
    let frame_count = buffer.frame_count();
    let mut supervision = Vec::with_capacity(total);

    for iteration in 1..=config.iterations {
        // Per-timestamp selection, assignment, and warping.
        let mut per_timestamp = Vec::with_capacity(frame_count);
        for t in 0..frame_count {
            let assignments = assign_targets(&buffer, t, &mut targets, h, scene_scale)?;
            let mut warps = Vec::with_capacity(h);
            for assignment in assignments {
                let entry = &buffer.entries()[assignment.source_entry];
                let warped = forward_warp(
                    &entry.video[t],
                    &entry.depths[t],
                    &entry.poses[t],
                    &assignment.target,
                    k,
                )?;
                warps.push(RankedWarp { warped, assignment });
            }
            per_timestamp.push(warps);
        }

        // Rank-grouped videos, completed and appended one at a time.
        for (video_index, ranked) in group_by_rank(per_timestamp)?.into_iter().enumerate() {
            let poses: Vec<Pose> = ranked.iter().map(|r| r.assignment.target).collect();
            let masks: Vec<BinaryMask> = ranked.iter().map(|r| r.warped.mask.clone()).collect();
            let frames: Vec<Image> = ranked.iter().map(|r| r.warped.image.clone()).collect();
            let warped: Vec<WarpedFrame> = ranked.into_iter().map(|r| r.warped).collect();

            let request = InpaintRequest::new(frames, masks.clone(), anchor.clone())
                .map_err(|source| AugmentError::Inpaint { iteration, video: video_index, source })?;
            let completed = inpaint_video_posed(
                &request,
                backend,
                Some(&poses),
                config.chunk_window,
                config.chunk_overlap,
            )
            .map_err(|source| AugmentError::Inpaint { iteration, video: video_index, source })?;

            let depth_seed = mix(config.seed, ((iteration as u64) << 32) | video_index as u64);
            let depths = depth_provider.depths_for(
                &completed.video,
                &warped,
                &poses,
                k,
                iteration,
                video_index,
                depth_seed,
            )?;

            let record = update_supervision(
                &completed.video,
                &masks,
                &poses,
                k,
                &mut cloud,
                &depths,
                iteration,
                config.splat_footprint,
            );
            supervision.push(record);
            buffer.push(BufferEntry::new(completed.video, depths, poses, iteration)?)?;
        }
    }

    debug_assert!(targets.all_visited());
    Ok(AugmentOutcome { buffer, supervision, cloud, scene_scale, targets })
}

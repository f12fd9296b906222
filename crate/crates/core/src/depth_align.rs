//! Metric scale alignment of relative depth maps.
//!
//! Each frame's monocular depth is related to metric depth by an affine map
//! `d = alpha * d_rel + beta`. The parameters are fitted by closed-form
//! least squares inside a RANSAC loop: 100 candidates of 10 sampled sparse
//! observations each, scored by the Chamfer distance between the
//! back-projected aligned depth and the sparse points visible in the frame,
//! keeping the minimum-score candidate.

use thiserror::Error;

use crate::formats::DepthMap;
use crate::geom::{backproject, project, Intrinsics, Pixel, Point3, Pose};
use crate::rng::{mix, Xorshift64Star};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("need at least {need} observations, found {found}")]
    InsufficientObservations { found: usize, need: usize },
    #[error("degenerate sample: relative depths are all equal")]
    DegenerateSample,
    #[error("alignment failed: no candidate produced a positive scale")]
    AlignmentFailed,
    #[error("chamfer distance needs nonempty point sets")]
    EmptyPointSet,
}

/// Per-frame affine depth correction: metric = alpha * relative + beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineDepthParams {
    pub alpha: f64,
    pub beta: f64,
}

/// One sparse point observed in a frame: where it projects, its metric
/// depth from the reconstruction, and the relative depth sampled there.
#[derive(Debug, Clone, Copy)]
pub struct SparseObservation {
    pub pixel: Pixel,
    pub metric_depth: f64,
    pub relative_depth: f64,
}

/// Minimum observation count; RANSAC needs its sample size.
pub const MIN_OBSERVATIONS: usize = 10;

/// Projects sparse world points into a frame and samples the relative depth
/// map at the nearest pixel. Points behind the camera, outside the image,
/// or landing on invalid relative depth are dropped.
pub fn project_sparse(
    points: &[Point3],
    pose: &Pose,
    k: &Intrinsics,
    rel_depth: &DepthMap,
) -> Result<Vec<SparseObservation>, AlignError> {
    let mut obs = Vec::new();
    for point in points {
        let Some((pixel, depth)) = project(*point, pose, k) else {
            continue;
        };
        if pixel.u < 0.0 || pixel.u >= k.width as f64 || pixel.v < 0.0 || pixel.v >= k.height as f64
        {
            continue;
        }
        let x = (pixel.u.round() as usize).min(k.width - 1);
        let y = (pixel.v.round() as usize).min(k.height - 1);
        if !rel_depth.is_valid(x, y) {
            continue;
        }
        obs.push(SparseObservation {
            pixel,
            metric_depth: depth,
            relative_depth: rel_depth.get(x, y) as f64,
        });
    }
    if obs.len() < MIN_OBSERVATIONS {
        return Err(AlignError::InsufficientObservations {
            found: obs.len(),
            need: MIN_OBSERVATIONS,
        });
    }
    Ok(obs)
}

/// Closed-form normal-equation solve of
/// argmin_{alpha,beta} sum (alpha * rel + beta - metric)^2
/// over `(relative, metric)` pairs.
pub fn fit_affine_ls(samples: &[(f64, f64)]) -> Result<AffineDepthParams, AlignError> {
    if samples.len() < 2 {
        return Err(AlignError::InsufficientObservations { found: samples.len(), need: 2 });
    }
    let n = samples.len() as f64;
    let sum_x: f64 = samples.iter().map(|(x, _)| x).sum();
    let sum_y: f64 = samples.iter().map(|(_, y)| y).sum();
    let sum_xx: f64 = samples.iter().map(|(x, _)| x * x).sum();
    let sum_xy: f64 = samples.iter().map(|(x, y)| x * y).sum();
    let det = n * sum_xx - sum_x * sum_x;
    // det = n^2 * variance(x); vanishes when all relative depths coincide.
    if det.abs() < 1e-12 * n * n {
        return Err(AlignError::DegenerateSample);
    }
    let alpha = (n * sum_xy - sum_x * sum_y) / det;
    let beta = (sum_y - alpha * sum_x) / n;
    Ok(AffineDepthParams { alpha, beta })
}

fn squared_dist(a: Point3, b: Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Multiplicative hasher for packed voxel keys; the default SipHash is the
/// bottleneck at millions of probes per alignment.
#[derive(Default)]
struct CellHasher(u64);

impl std::hash::Hasher for CellHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, _: &[u8]) {
        unreachable!("voxel keys hash via write_u64");
    }

    fn write_u64(&mut self, v: u64) {
        let mut h = v.wrapping_mul(0x9E3779B97F4A7C15);
        h ^= h >> 29;
        self.0 = h;
    }
}

type CellMap = std::collections::HashMap<u64, Vec<u32>, std::hash::BuildHasherDefault<CellHasher>>;

/// Packs cell coordinates into one key (21 bits per axis). A packing
/// collision would only merge two buckets, adding spurious candidates to a
/// probe; the nearest-neighbor result stays exact either way.
fn pack_cell(key: [i64; 3]) -> u64 {
    ((key[0] as u64 & 0x1F_FFFF) << 42)
        | ((key[1] as u64 & 0x1F_FFFF) << 21)
        | (key[2] as u64 & 0x1F_FFFF)
}

/// Uniform voxel grid over a point set for exact nearest-neighbor queries.
/// Search expands Chebyshev cell rings outward; after finishing ring r every
/// unvisited point is at least `r * cell` away, so the scan stops as soon as
/// the best squared distance is within that bound. Results are identical to
/// brute force.
struct VoxelGrid<'a> {
    points: &'a [Point3],
    cell: f64,
    cells: CellMap,
    cell_min: [i64; 3],
    cell_max: [i64; 3],
}

impl<'a> VoxelGrid<'a> {
    fn build(points: &'a [Point3], cell: f64) -> Self {
        let mut cells = CellMap::default();
        let mut cell_min = [i64::MAX; 3];
        let mut cell_max = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let key = Self::key(p, cell);
            for axis in 0..3 {
                cell_min[axis] = cell_min[axis].min(key[axis]);
                cell_max[axis] = cell_max[axis].max(key[axis]);
            }
            cells.entry(pack_cell(key)).or_default().push(i as u32);
        }
        Self { points, cell, cells, cell_min, cell_max }
    }

    fn key(p: &Point3, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    fn probe(&self, q: Point3, key: [i64; 3], best: &mut f64) {
        if let Some(indices) = self.cells.get(&pack_cell(key)) {
            for &i in indices {
                let d = squared_dist(q, self.points[i as usize]);
                if d < *best {
                    *best = d;
                }
            }
        }
    }

    /// Scans the shell at Chebyshev cell radius `r`, restricted to the
    /// occupied-cell bounding box.
    fn scan_shell(&self, q: Point3, center: [i64; 3], r: i64, best: &mut f64) {
        let lo = |axis: usize, bound: i64| (center[axis] - bound).max(self.cell_min[axis]);
        let hi = |axis: usize, bound: i64| (center[axis] + bound).min(self.cell_max[axis]);
        if r == 0 {
            self.probe(q, center, best);
            return;
        }
        // Two x faces.
        for &x in &[center[0] - r, center[0] + r] {
            if x < self.cell_min[0] || x > self.cell_max[0] {
                continue;
            }
            for y in lo(1, r)..=hi(1, r) {
                for z in lo(2, r)..=hi(2, r) {
                    self.probe(q, [x, y, z], best);
                }
            }
        }
        // Two y faces (x interior).
        for &y in &[center[1] - r, center[1] + r] {
            if y < self.cell_min[1] || y > self.cell_max[1] {
                continue;
            }
            for x in lo(0, r - 1)..=hi(0, r - 1) {
                for z in lo(2, r)..=hi(2, r) {
                    self.probe(q, [x, y, z], best);
                }
            }
        }
        // Two z faces (x and y interior).
        for &z in &[center[2] - r, center[2] + r] {
            if z < self.cell_min[2] || z > self.cell_max[2] {
                continue;
            }
            for x in lo(0, r - 1)..=hi(0, r - 1) {
                for y in lo(1, r - 1)..=hi(1, r - 1) {
                    self.probe(q, [x, y, z], best);
                }
            }
        }
    }

    fn nearest_sq(&self, q: Point3) -> f64 {
        let center = Self::key(&q, self.cell);
        // Rings below the box distance are empty; rings beyond the far
        // corner add nothing.
        let mut first_ring: i64 = 0;
        let mut last_ring: i64 = 0;
        for axis in 0..3 {
            let below = self.cell_min[axis] - center[axis];
            let above = center[axis] - self.cell_max[axis];
            first_ring = first_ring.max(below).max(above);
            last_ring = last_ring
                .max((center[axis] - self.cell_min[axis]).abs())
                .max((self.cell_max[axis] - center[axis]).abs());
        }
        let mut best = f64::INFINITY;
        for r in first_ring..=last_ring {
            self.scan_shell(q, center, r, &mut best);
            // After finishing ring r every unvisited point differs from q
            // by at least r*cell on some axis.
            let bound = r as f64 * self.cell;
            if best <= bound * bound {
                break;
            }
        }
        best
    }
}

/// Point count below which Chamfer queries fall back to brute force.
const BRUTE_FORCE_LIMIT: usize = 256;

/// Builds the query accelerator for a target set, or `None` when brute
/// force is the better (or only) choice. Cell size aims for on the order of
/// one point per occupied cell; ring search is exact for any cell size, so
/// this only tunes probe counts.
fn nn_grid_for(to: &[Point3]) -> Option<VoxelGrid<'_>> {
    if to.len() < BRUTE_FORCE_LIMIT {
        return None;
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in to {
        for (i, v) in p.to_array().into_iter().enumerate() {
            min[i] = min[i].min(v);
            max[i] = max[i].max(v);
        }
    }
    let diag = ((max[0] - min[0]).powi(2)
        + (max[1] - min[1]).powi(2)
        + (max[2] - min[2]).powi(2))
    .sqrt();
    if diag < 1e-12 {
        // All target points coincide; brute force handles it.
        return None;
    }
    let cells_per_axis = (to.len() as f64).cbrt().clamp(4.0, 32.0);
    Some(VoxelGrid::build(to, diag / cells_per_axis))
}

fn mean_sq_nn_with(from: &[Point3], to: &[Point3], grid: Option<&VoxelGrid<'_>>) -> f64 {
    let total: f64 = match grid {
        Some(grid) => from.iter().map(|p| grid.nearest_sq(*p)).sum(),
        None => from
            .iter()
            .map(|p| {
                to.iter()
                    .map(|q| squared_dist(*p, *q))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum(),
    };
    total / from.len() as f64
}

fn mean_sq_nn(from: &[Point3], to: &[Point3]) -> f64 {
    mean_sq_nn_with(from, to, nn_grid_for(to).as_ref())
}

/// Symmetric Chamfer distance: the mean squared nearest-neighbor distance
/// in both directions, summed.
pub fn chamfer_distance(a: &[Point3], b: &[Point3]) -> Result<f64, AlignError> {
    if a.is_empty() || b.is_empty() {
        return Err(AlignError::EmptyPointSet);
    }
    Ok(mean_sq_nn(a, b) + mean_sq_nn(b, a))
}

#[derive(Debug, Clone)]
pub struct RansacConfig {
    /// Number of candidate fits.
    pub iterations: usize,
    /// Observations per candidate fit.
    pub sample_size: usize,
    /// Pixel-grid stride for the back-projected scoring cloud. 1 scores
    /// every valid pixel.
    pub grid_stride: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { iterations: 100, sample_size: 10, grid_stride: 8 }
    }
}

/// One candidate's record: fitted parameters and Chamfer score. Candidates
/// that were degenerate or had nonpositive scale carry no score.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CandidateScore {
    pub alpha: f64,
    pub beta: f64,
    pub chamfer: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub params: AffineDepthParams,
    pub aligned: DepthMap,
    /// All candidate records, in iteration order.
    pub candidates: Vec<CandidateScore>,
    pub winner: usize,
}

/// Applies `alpha * rel + beta`, marking nonpositive results (and invalid
/// relative entries) invalid.
pub fn apply_affine(rel_depth: &DepthMap, params: &AffineDepthParams) -> DepthMap {
    let mut out = DepthMap::invalid(rel_depth.width(), rel_depth.height());
    for y in 0..rel_depth.height() {
        for x in 0..rel_depth.width() {
            if rel_depth.is_valid(x, y) {
                let d = params.alpha * rel_depth.get(x, y) as f64 + params.beta;
                if d > 0.0 && d.is_finite() {
                    out.set(x, y, d as f32);
                }
            }
        }
    }
    out
}

/// Back-projects a strided pixel grid of an aligned depth map to world
/// points.
fn backproject_grid(
    depth: &DepthMap,
    pose: &Pose,
    k: &Intrinsics,
    stride: usize,
) -> Vec<Point3> {
    let mut cloud = Vec::new();
    let mut y = 0;
    while y < depth.height() {
        let mut x = 0;
        while x < depth.width() {
            if depth.is_valid(x, y) {
                let p = backproject(
                    Pixel::new(x as f64, y as f64),
                    depth.get(x, y) as f64,
                    pose,
                    k,
                )
                .expect("valid depth entries are positive and finite");
                cloud.push(p);
            }
            x += stride;
        }
        y += stride;
    }
    cloud
}

/// RANSAC-robust affine alignment of one frame's relative depth map.
///
/// Runs exactly `cfg.iterations` candidate fits over `cfg.sample_size`
/// observations each. Candidate sampling derives from
/// `(seed, candidate_index)` only, so candidates may be evaluated in any
/// order with identical results. Candidates with nonpositive scale are
/// discarded before scoring; the winner is the minimum Chamfer score with
/// index tie-breaking.
pub fn align_depth_ransac(
    obs: &[SparseObservation],
    rel_depth: &DepthMap,
    pose: &Pose,
    k: &Intrinsics,
    sparse_visible: &[Point3],
    seed: u64,
    cfg: &RansacConfig,
) -> Result<Alignment, AlignError> {
    if obs.len() < cfg.sample_size {
        return Err(AlignError::InsufficientObservations {
            found: obs.len(),
            need: cfg.sample_size,
        });
    }
    if sparse_visible.is_empty() {
        return Err(AlignError::EmptyPointSet);
    }

    // The sparse side of every candidate's Chamfer score is the same set;
    // build its accelerator once.
    let sparse_grid = nn_grid_for(sparse_visible);

    let mut candidates = Vec::with_capacity(cfg.iterations);
    for index in 0..cfg.iterations {
        let mut rng = Xorshift64Star::new(mix(seed, index as u64));
        let picks = rng.sample_distinct(obs.len(), cfg.sample_size);
        let sample: Vec<(f64, f64)> = picks
            .iter()
            .map(|&i| (obs[i].relative_depth, obs[i].metric_depth))
            .collect();
        let record = match fit_affine_ls(&sample) {
            Ok(params) if params.alpha > 0.0 => {
                let aligned = apply_affine(rel_depth, &params);
                let cloud = backproject_grid(&aligned, pose, k, cfg.grid_stride);
                if cloud.is_empty() {
                    CandidateScore { alpha: params.alpha, beta: params.beta, chamfer: None }
                } else {
                    let cd = mean_sq_nn_with(&cloud, sparse_visible, sparse_grid.as_ref())
                        + mean_sq_nn(sparse_visible, &cloud);
                    CandidateScore { alpha: params.alpha, beta: params.beta, chamfer: Some(cd) }
                }
            }
            Ok(params) => {
                CandidateScore { alpha: params.alpha, beta: params.beta, chamfer: None }
            }
            Err(_) => CandidateScore { alpha: 0.0, beta: 0.0, chamfer: None },
        };
        candidates.push(record);
    }

    let winner = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.chamfer.map(|cd| (i, cd)))
        .min_by(|(ia, a), (ib, b)| a.partial_cmp(b).expect("finite scores").then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .ok_or(AlignError::AlignmentFailed)?;

    let params = AffineDepthParams {
        alpha: candidates[winner].alpha,
        beta: candidates[winner].beta,
    };
    let aligned = apply_affine(rel_depth, &params);
    Ok(Alignment { params, aligned, candidates, winner })
}

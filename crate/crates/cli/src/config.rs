//! Pipeline configuration: one JSON file, overridable per flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub frames: Option<PathBuf>,
    pub colmap: Option<PathBuf>,
    pub depths: Option<PathBuf>,
    pub tracks: Option<PathBuf>,
    pub scene: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { frames: None, colmap: None, depths: None, tracks: None, scene: None, output: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetsConfig {
    /// H, the number of pre-defined target poses per timestamp.
    pub count: usize,
    /// N, the number of augmentation iterations.
    pub iterations: usize,
    /// Extreme azimuth of the target arc, radians.
    pub max_angle: f64,
}

impl Default for TargetsConfig {
    fn default() -> Self {
        Self { count: 6, iterations: 6, max_angle: 0.35 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub tau: f64,
    pub mode: viewaug_core::trackmask::CurationMode,
    /// Chebyshev footprint radius around each track point; defaults to
    /// half the track grid stride.
    pub footprint_radius: Option<usize>,
    pub track_stride: usize,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            tau: viewaug_core::trackmask::DEFAULT_TAU,
            mode: viewaug_core::trackmask::CurationMode::KeepIfGeq,
            footprint_radius: None,
            track_stride: 8,
        }
    }
}

impl CurationConfig {
    pub fn effective_footprint(&self) -> usize {
        self.footprint_radius.unwrap_or(self.track_stride / 2)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacSection {
    pub seed: u64,
    pub iterations: usize,
    pub sample_size: usize,
    pub grid_stride: usize,
}

impl Default for RansacSection {
    fn default() -> Self {
        let d = viewaug_core::depth_align::RansacConfig::default();
        Self {
            seed: 7,
            iterations: d.iterations,
            sample_size: d.sample_size,
            grid_stride: d.grid_stride,
        }
    }
}

impl RansacSection {
    pub fn to_core(&self) -> viewaug_core::depth_align::RansacConfig {
        viewaug_core::depth_align::RansacConfig {
            iterations: self.iterations,
            sample_size: self.sample_size,
            grid_stride: self.grid_stride,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkConfig {
    pub window: usize,
    pub overlap: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self { window: 16, overlap: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_r: f64,
    pub lambda_s: f64,
    pub lambda_l: f64,
    pub iv_radius: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        let w = viewaug_core::losses::LossWeights::default();
        Self { lambda_r: w.lambda_r, lambda_s: w.lambda_s, lambda_l: w.lambda_l, iv_radius: 1 }
    }
}

impl LossConfig {
    pub fn weights(&self) -> viewaug_core::losses::LossWeights {
        viewaug_core::losses::LossWeights {
            lambda_r: self.lambda_r,
            lambda_s: self.lambda_s,
            lambda_l: self.lambda_l,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub seed: u64,
    pub cloud_stride: usize,
    pub splat_footprint: usize,
    /// "oracle" (needs a scene file) or "propagate".
    pub depth_provider: String,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self { seed: 7, cloud_stride: 1, splat_footprint: 1, depth_provider: "propagate".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    pub sparse_count: usize,
    /// When set, also writes relative depth maps distorted so that
    /// `metric = rel_alpha * rel + rel_beta`.
    pub rel_alpha: Option<f64>,
    pub rel_beta: Option<f64>,
    /// Freeze all scene motion (every surface then has sparse support,
    /// which per-frame depth alignment needs).
    pub static_scene: bool,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            frames: 16,
            seed: 7,
            sparse_count: 1500,
            rel_alpha: None,
            rel_beta: None,
            static_scene: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub targets: TargetsConfig,
    pub curation: CurationConfig,
    pub ransac: RansacSection,
    pub chunk: ChunkConfig,
    pub loss: LossConfig,
    pub backend: BackendField,
    pub augment: AugmentSection,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BackendField(pub String);

impl Default for BackendField {
    fn default() -> Self {
        Self("pullpush".into())
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                let config: Self = serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?;
                Ok(config)
            }
            None => Ok(Self::default()),
        }
    }

    /// Field-path validation, reported before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.targets.count == 0 || self.targets.iterations == 0 {
            bail!("targets.count and targets.iterations must be positive");
        }
        if self.targets.count % self.targets.iterations != 0 {
            bail!(
                "targets.count ({}) must be divisible by targets.iterations ({})",
                self.targets.count,
                self.targets.iterations
            );
        }
        if !(0.0 < self.targets.max_angle && self.targets.max_angle < std::f64::consts::PI) {
            bail!("targets.max_angle must be in (0, pi), got {}", self.targets.max_angle);
        }
        if !(0.0..=1.0).contains(&self.curation.tau) {
            bail!("curation.tau must be in [0, 1], got {}", self.curation.tau);
        }
        if self.ransac.sample_size < 2 {
            bail!("ransac.sample_size must be at least 2");
        }
        if self.ransac.iterations == 0 {
            bail!("ransac.iterations must be positive");
        }
        if self.ransac.grid_stride == 0 {
            bail!("ransac.grid_stride must be positive");
        }
        if self.chunk.window <= self.chunk.overlap {
            bail!(
                "chunk.window ({}) must exceed chunk.overlap ({})",
                self.chunk.window,
                self.chunk.overlap
            );
        }
        if self.loss.lambda_r < 0.0 || self.loss.lambda_s < 0.0 || self.loss.lambda_l < 0.0 {
            bail!("loss weights must be nonnegative");
        }
        self.backend.0.parse::<viewaug_core::inpaint::BackendSpec>().map_err(|e| {
            anyhow::anyhow!("backend: {e}")
        })?;
        match self.augment.depth_provider.as_str() {
            "oracle" | "propagate" => {}
            other => bail!("augment.depth_provider must be oracle or propagate, got {other:?}"),
        }
        if self.augment.cloud_stride == 0 {
            bail!("augment.cloud_stride must be positive");
        }
        if self.synth.width == 0 || self.synth.height == 0 || self.synth.frames == 0 {
            bail!("synth.width/height/frames must be positive");
        }
        if self.synth.rel_alpha.is_some() != self.synth.rel_beta.is_some() {
            bail!("synth.rel_alpha and synth.rel_beta must be set together");
        }
        if let Some(a) = self.synth.rel_alpha {
            if !(a.is_finite() && a > 0.0) {
                bail!("synth.rel_alpha must be positive, got {a}");
            }
        }
        Ok(())
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

//! JSON records for poses and intrinsics used by manifests and the CLI.

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::geom::{Intrinsics, Mat3, Pose};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&Pose> for PoseRecord {
    fn from(pose: &Pose) -> Self {
        Self { rotation: pose.rotation().0, translation: pose.translation() }
    }
}

impl PoseRecord {
    pub fn to_pose(&self) -> Result<Pose, FormatError> {
        Ok(Pose::from_rotation_translation(Mat3(self.rotation), self.translation)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntrinsicsRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl From<&Intrinsics> for IntrinsicsRecord {
    fn from(k: &Intrinsics) -> Self {
        Self { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, width: k.width, height: k.height }
    }
}

impl IntrinsicsRecord {
    pub fn to_intrinsics(&self) -> Result<Intrinsics, FormatError> {
        Ok(Intrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)?)
    }
}

pub fn pose_to_json(pose: &Pose) -> String {
    serde_json::to_string_pretty(&PoseRecord::from(pose)).expect("pose serializes")
}

pub fn pose_from_json(text: &str) -> Result<Pose, FormatError> {
    serde_json::from_str::<PoseRecord>(text)?.to_pose()
}

pub fn poses_to_json(poses: &[Pose]) -> String {
    let records: Vec<PoseRecord> = poses.iter().map(PoseRecord::from).collect();
    serde_json::to_string_pretty(&records).expect("poses serialize")
}

pub fn poses_from_json(text: &str) -> Result<Vec<Pose>, FormatError> {
    serde_json::from_str::<Vec<PoseRecord>>(text)?
        .iter()
        .map(PoseRecord::to_pose)
        .collect()
}

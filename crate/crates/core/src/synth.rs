//! Analytic synthetic scene generator and ray-cast renderer.
//!
//! Scenes are built from textured planes and spheres with closed-form ray
//! intersections, so every rendered depth and color has an exact analytic
//! value. One sphere may carry a velocity, translating rigidly over time.
//! This module is the ground-truth oracle for the warping, alignment,
//! inpainting, and augmentation tests; it stands in for a real capture
//! (frames, depths, poses, sparse cloud, tracks).

use serde::{Deserialize, Serialize};

use crate::formats::{DepthMap, Image, TrackSet};
use crate::geom::{
    add, cross, dot, normalize, project, scale, sub, Intrinsics, Pixel, Point3, Pose,
};
use crate::rng::Xorshift64Star;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TextureKind {
    Checker,
    Gradient,
}

/// Procedural 2-color texture over surface coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Texture {
    pub kind: TextureKind,
    pub frequency: f64,
    pub colors: [[f32; 3]; 2],
}

impl Texture {
    fn color_at(&self, a: f64, b: f64) -> [f32; 3] {
        match self.kind {
            TextureKind::Checker => {
                let cell = (a * self.frequency).floor() + (b * self.frequency).floor();
                let idx = (cell.rem_euclid(2.0)) as usize;
                self.colors[idx]
            }
            TextureKind::Gradient => {
                let t = 0.5
                    + 0.25 * (std::f64::consts::TAU * self.frequency * a).sin()
                    + 0.25 * (std::f64::consts::TAU * self.frequency * b).sin();
                let mut out = [0.0f32; 3];
                for c in 0..3 {
                    let lo = self.colors[0][c] as f64;
                    let hi = self.colors[1][c] as f64;
                    out[c] = (lo + (hi - lo) * t) as f32;
                }
                out
            }
        }
    }
}

/// Finite textured rectangle: a point, two orthonormal in-plane axes, and
/// half extents along them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneSurface {
    pub origin: [f64; 3],
    pub u_axis: [f64; 3],
    pub v_axis: [f64; 3],
    pub half_u: f64,
    pub half_v: f64,
    pub texture: Texture,
}

/// Textured sphere; a nonzero velocity makes it translate rigidly over time
/// (center at time t is `center + velocity * t`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereSurface {
    pub center: [f64; 3],
    pub radius: f64,
    pub velocity: [f64; 3],
    pub texture: Texture,
}

impl SphereSurface {
    pub fn center_at(&self, t: f64) -> [f64; 3] {
        add(self.center, scale(self.velocity, t))
    }

    pub fn is_static(&self) -> bool {
        self.velocity == [0.0, 0.0, 0.0]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub planes: Vec<PlaneSurface>,
    pub spheres: Vec<SphereSurface>,
    pub background: [f32; 3],
    pub frames: usize,
}

/// Nearest-surface hit along a ray at time `t`.
#[derive(Debug, Clone, Copy)]
pub struct Hit {
    /// Ray parameter; with an unnormalized camera-ray direction whose
    /// camera-frame z is 1, this equals the camera-frame depth.
    pub s: f64,
    pub color: [f32; 3],
    pub is_static: bool,
}

const RAY_EPS: f64 = 1e-9;

fn hit_plane(plane: &PlaneSurface, origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
    let n = cross(plane.u_axis, plane.v_axis);
    let denom = dot(dir, n);
    if denom.abs() < 1e-12 {
        return None;
    }
    let s = dot(sub(plane.origin, origin), n) / denom;
    if s <= RAY_EPS {
        return None;
    }
    let p = add(origin, scale(dir, s));
    let rel = sub(p, plane.origin);
    let a = dot(rel, plane.u_axis);
    let b = dot(rel, plane.v_axis);
    if a.abs() > plane.half_u || b.abs() > plane.half_v {
        return None;
    }
    Some(Hit { s, color: plane.texture.color_at(a, b), is_static: true })
}

fn hit_sphere(sphere: &SphereSurface, origin: [f64; 3], dir: [f64; 3], t: f64) -> Option<Hit> {
    let c = sphere.center_at(t);
    let oc = sub(origin, c);
    let a = dot(dir, dir);
    let b = 2.0 * dot(oc, dir);
    let cc = dot(oc, oc) - sphere.radius * sphere.radius;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut s = (-b - sq) / (2.0 * a);
    if s <= RAY_EPS {
        s = (-b + sq) / (2.0 * a);
    }
    if s <= RAY_EPS {
        return None;
    }
    let p = add(origin, scale(dir, s));
    let n = normalize(sub(p, c));
    let ta = n[2].atan2(n[0]) / std::f64::consts::TAU + 0.5;
    let tb = n[1].clamp(-1.0, 1.0).acos() / std::f64::consts::PI;
    Some(Hit { s, color: sphere.texture.color_at(ta, tb), is_static: sphere.is_static() })
}

impl SyntheticScene {
    /// Nearest intersection along `origin + s * dir` at time `t`.
    pub fn cast(&self, origin: [f64; 3], dir: [f64; 3], t: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for plane in &self.planes {
            if let Some(hit) = hit_plane(plane, origin, dir) {
                if best.as_ref().is_none_or(|b| hit.s < b.s) {
                    best = Some(hit);
                }
            }
        }
        for sphere in &self.spheres {
            if let Some(hit) = hit_sphere(sphere, origin, dir, t) {
                if best.as_ref().is_none_or(|b| hit.s < b.s) {
                    best = Some(hit);
                }
            }
        }
        best
    }

    /// True when the world point is unobstructed from the camera at time
    /// `t` (the nearest surface along the ray to the point is the point's
    /// own surface).
    pub fn point_visible(&self, point: [f64; 3], pose: &Pose, t: f64) -> bool {
        let origin = pose.center();
        let dir = sub(point, origin);
        // The point itself sits at ray parameter 1.
        match self.cast(origin, dir, t) {
            Some(hit) => hit.s >= 1.0 - 1e-6,
            None => false,
        }
    }
}

/// Ray-casts every pixel; returns the image and the exact camera-frame
/// depth map (invalid where the ray escapes to the background).
pub fn render(scene: &SyntheticScene, pose: &Pose, k: &Intrinsics, t: f64) -> (Image, DepthMap) {
    let origin = pose.center();
    let rt = pose.rotation().transpose();
    let mut image = Image::filled(k.width, k.height, 3, 0.0);
    let mut depth = DepthMap::invalid(k.width, k.height);
    for y in 0..k.height {
        for x in 0..k.width {
            let dir_cam = [
                (x as f64 - k.cx) / k.fx,
                (y as f64 - k.cy) / k.fy,
                1.0,
            ];
            let dir = rt.mul_vec(dir_cam);
            match scene.cast(origin, dir, t) {
                Some(hit) => {
                    for c in 0..3 {
                        image.set(x, y, c, hit.color[c].clamp(0.0, 1.0));
                    }
                    depth.set(x, y, hit.s as f32);
                }
                None => {
                    for c in 0..3 {
                        image.set(x, y, c, scene.background[c]);
                    }
                }
            }
        }
    }
    (image, depth)
}

#[derive(Debug, Clone, Copy)]
pub struct SparsePoint {
    pub position: Point3,
    pub color: [f32; 3],
}

/// Ray-casts random pixels across the capture and keeps hits on static
/// geometry, mimicking a sparse reconstruction of the rigid scene.
pub fn sample_sparse(
    scene: &SyntheticScene,
    poses: &[Pose],
    k: &Intrinsics,
    count: usize,
    seed: u64,
) -> Vec<SparsePoint> {
    assert!(!poses.is_empty());
    let mut rng = Xorshift64Star::new(seed);
    let mut points = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let max_attempts = count.saturating_mul(10_000).max(10_000);
    while points.len() < count {
        attempts += 1;
        assert!(
            attempts < max_attempts,
            "scene has too little static geometry to sample {count} points"
        );
        let frame = rng.next_index(poses.len());
        let u = rng.next_range(0.0, k.width as f64);
        let v = rng.next_range(0.0, k.height as f64);
        let pose = &poses[frame];
        let origin = pose.center();
        let dir_cam = [(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0];
        let dir = pose.rotation().transpose().mul_vec(dir_cam);
        if let Some(hit) = scene.cast(origin, dir, frame as f64) {
            if hit.is_static {
                let position = Point3::from_array(add(origin, scale(dir, hit.s)));
                points.push(SparsePoint { position, color: hit.color });
            }
        }
    }
    points
}

/// Seeds a pixel grid in the first frame and propagates each point by exact
/// 3D correspondence, with per-frame visibility from occlusion and bounds
/// tests. Points on the dynamic sphere translate rigidly with it.
pub fn sample_tracks(
    scene: &SyntheticScene,
    poses: &[Pose],
    k: &Intrinsics,
    grid_stride: usize,
    frames: usize,
) -> TrackSet {
    assert!(grid_stride >= 1);
    assert!(frames >= 1 && frames <= poses.len());

    enum Anchor {
        Static([f64; 3]),
        OnSphere { sphere: usize, offset: [f64; 3] },
    }

    let seed_pose = &poses[0];
    let origin0 = seed_pose.center();
    let rt0 = seed_pose.rotation().transpose();
    let mut anchors = Vec::new();

    let mut y = grid_stride / 2;
    while y < k.height {
        let mut x = grid_stride / 2;
        while x < k.width {
            let dir_cam = [(x as f64 - k.cx) / k.fx, (y as f64 - k.cy) / k.fy, 1.0];
            let dir = rt0.mul_vec(dir_cam);
            if let Some(hit) = scene.cast(origin0, dir, 0.0) {
                let point = add(origin0, scale(dir, hit.s));
                if hit.is_static {
                    anchors.push(Anchor::Static(point));
                } else {
                    // Attribute the point to the sphere whose surface it is on.
                    let sphere = scene
                        .spheres
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| !s.is_static())
                        .min_by(|(_, a), (_, b)| {
                            let da = (crate::geom::norm(sub(point, a.center_at(0.0)))
                                - a.radius)
                                .abs();
                            let db = (crate::geom::norm(sub(point, b.center_at(0.0)))
                                - b.radius)
                                .abs();
                            da.partial_cmp(&db).expect("finite distances")
                        })
                        .map(|(i, _)| i)
                        .expect("dynamic hit implies a dynamic sphere");
                    let offset = sub(point, scene.spheres[sphere].center_at(0.0));
                    anchors.push(Anchor::OnSphere { sphere, offset });
                }
            }
            x += grid_stride;
        }
        y += grid_stride;
    }

    let n_tracks = anchors.len();
    let mut positions = vec![Pixel::new(0.0, 0.0); n_tracks * frames];
    let mut visibility = vec![0u8; n_tracks * frames];
    for (i, anchor) in anchors.iter().enumerate() {
        for t in 0..frames {
            let world = match anchor {
                Anchor::Static(p) => *p,
                Anchor::OnSphere { sphere, offset } => {
                    add(scene.spheres[*sphere].center_at(t as f64), *offset)
                }
            };
            let pose = &poses[t];
            let idx = i * frames + t;
            if let Some((pixel, _)) = project(Point3::from_array(world), pose, k) {
                let in_bounds = pixel.u >= 0.0
                    && pixel.u < k.width as f64
                    && pixel.v >= 0.0
                    && pixel.v < k.height as f64;
                positions[idx] = pixel;
                if in_bounds && scene.point_visible(world, pose, t as f64) {
                    visibility[idx] = 1;
                }
            }
        }
    }
    TrackSet::new(n_tracks, frames, positions, visibility).expect("seeded tracks are valid")
}

/// Desk-scale default: a background plane, a slanted side wall, and a
/// textured sphere drifting across the view.
pub fn default_scene(frames: usize) -> SyntheticScene {
    SyntheticScene {
        planes: vec![
            PlaneSurface {
                origin: [0.0, 0.0, 4.0],
                u_axis: [1.0, 0.0, 0.0],
                v_axis: [0.0, 1.0, 0.0],
                half_u: 8.0,
                half_v: 8.0,
                texture: Texture {
                    kind: TextureKind::Gradient,
                    frequency: 0.35,
                    colors: [[0.15, 0.25, 0.5], [0.85, 0.8, 0.55]],
                },
            },
            PlaneSurface {
                origin: [1.9, 0.0, 2.8],
                u_axis: [0.0, 1.0, 0.0],
                v_axis: normalize([-0.35, 0.0, 1.0]),
                half_u: 3.0,
                half_v: 1.6,
                texture: Texture {
                    kind: TextureKind::Gradient,
                    frequency: 0.8,
                    colors: [[0.55, 0.3, 0.2], [0.9, 0.75, 0.4]],
                },
            },
        ],
        spheres: vec![SphereSurface {
            center: [-0.75, 0.1, 2.1],
            radius: 0.45,
            velocity: [0.09, 0.0, 0.0],
            texture: Texture {
                kind: TextureKind::Gradient,
                frequency: 1.4,
                colors: [[0.75, 0.2, 0.25], [0.95, 0.85, 0.3]],
            },
        }],
        background: [0.02, 0.02, 0.03],
        frames,
    }
}

/// Gentle horizontal arc of camera poses aimed at the scene center,
/// matching a casual monocular capture.
pub fn default_camera_arc(frames: usize) -> Vec<Pose> {
    let look_at = [0.0, 0.0, 2.6];
    let base_eye = [0.0, 0.0, 0.0];
    let up = [0.0, -1.0, 0.0];
    let arm = sub(base_eye, look_at);
    (0..frames)
        .map(|t| {
            let phi = if frames == 1 {
                0.0
            } else {
                -0.1 + 0.2 * t as f64 / (frames - 1) as f64
            };
            let rot = crate::geom::Mat3::from_axis_angle(up, phi);
            let eye = add(look_at, rot.mul_vec(arm));
            Pose::look_at(eye, look_at, [0.0, 1.0, 0.0])
        })
        .collect()
}

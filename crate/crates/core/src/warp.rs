//! Depth-guided forward warping into novel viewpoints.
//!
//! Every source pixel with valid depth is back-projected to a world point
//! and re-projected into the target view, splatting onto the nearest integer
//! pixel. Conflicts resolve by z-buffer: the smaller target depth wins, with
//! exact-z ties broken by the smaller source row-major index, which makes
//! the result independent of traversal order. Uncovered target pixels stay
//! black with mask 0 and an invalid z-buffer entry.

use thiserror::Error;

use crate::formats::{BinaryMask, DepthMap, Image};
use crate::geom::{backproject, project, Intrinsics, Pixel, Pose};

#[derive(Debug, Error)]
pub enum WarpError {
    #[error("image is {iw}x{ih} but depth is {dw}x{dh}")]
    DimensionMismatch { iw: usize, ih: usize, dw: usize, dh: usize },
    #[error("intrinsics are {kw}x{kh} but frame is {iw}x{ih}")]
    IntrinsicsMismatch { kw: usize, kh: usize, iw: usize, ih: usize },
    #[error("{frames} frames but {poses} target poses")]
    LengthMismatch { frames: usize, poses: usize },
}

/// A frame re-rendered from a new viewpoint: colors where source splats
/// landed, a validity mask (1 = covered), and the target-view depth of the
/// winning splat per pixel.
#[derive(Debug, Clone)]
pub struct WarpedFrame {
    pub image: Image,
    pub mask: BinaryMask,
    pub zbuffer: DepthMap,
}

/// One source pixel landing on a target pixel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Splat {
    pub target: usize,
    pub depth: f64,
    pub source: usize,
    pub color: [f32; 3],
}

pub(crate) fn collect_splats(
    src: &Image,
    depth: &DepthMap,
    src_pose: &Pose,
    dst_pose: &Pose,
    k: &Intrinsics,
) -> Vec<Splat> {
    let (w, h) = (src.width(), src.height());
    let mut splats = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !depth.is_valid(x, y) {
                continue;
            }
            let world = backproject(
                Pixel::new(x as f64, y as f64),
                depth.get(x, y) as f64,
                src_pose,
                k,
            )
            .expect("valid depth entries are positive and finite");
            let Some((pixel, d)) = project(world, dst_pose, k) else {
                continue;
            };
            let tx = pixel.u.round();
            let ty = pixel.v.round();
            if tx < 0.0 || tx >= w as f64 || ty < 0.0 || ty >= h as f64 {
                continue;
            }
            let mut color = [0.0f32; 3];
            for (c, out) in color.iter_mut().enumerate().take(src.channels()) {
                *out = src.get(x, y, c);
            }
            splats.push(Splat {
                target: ty as usize * w + tx as usize,
                depth: d,
                source: y * w + x,
                color,
            });
        }
    }
    splats
}

/// Deterministic reduction: per target pixel the minimum (depth, source)
/// splat wins, regardless of the order splats arrive in.
pub(crate) fn reduce_splats(
    splats: &[Splat],
    width: usize,
    height: usize,
    channels: usize,
) -> WarpedFrame {
    let n = width * height;
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    let mut colors: Vec<[f32; 3]> = vec![[0.0; 3]; n];
    for s in splats {
        let better = match best[s.target] {
            None => true,
            Some((d, src)) => (s.depth, s.source) < (d, src),
        };
        if better {
            best[s.target] = Some((s.depth, s.source));
            colors[s.target] = s.color;
        }
    }

    let mut image = Image::filled(width, height, channels, 0.0);
    let mut mask = BinaryMask::zeros(width, height);
    let mut zbuffer = DepthMap::invalid(width, height);
    for (i, slot) in best.iter().enumerate() {
        if let Some((d, _)) = slot {
            let (x, y) = (i % width, i / width);
            mask.set(x, y, 1);
            zbuffer.set(x, y, *d as f32);
            for c in 0..channels {
                image.set(x, y, c, colors[i][c]);
            }
        }
    }
    WarpedFrame { image, mask, zbuffer }
}

/// Warps one frame from its source pose into a target pose.
pub fn forward_warp(
    src: &Image,
    depth: &DepthMap,
    src_pose: &Pose,
    dst_pose: &Pose,
    k: &Intrinsics,
) -> Result<WarpedFrame, WarpError> {
    if src.width() != depth.width() || src.height() != depth.height() {
        return Err(WarpError::DimensionMismatch {
            iw: src.width(),
            ih: src.height(),
            dw: depth.width(),
            dh: depth.height(),
        });
    }
    if src.width() != k.width || src.height() != k.height {
        return Err(WarpError::IntrinsicsMismatch {
            kw: k.width,
            kh: k.height,
            iw: src.width(),
            ih: src.height(),
        });
    }
    let splats = collect_splats(src, depth, src_pose, dst_pose, k);
    Ok(reduce_splats(&splats, src.width(), src.height(), src.channels()))
}

/// Per-timestamp warp: `frames[t]` goes to `dst_poses[t]`.
pub fn warp_video(
    frames: &[(Image, DepthMap, Pose)],
    dst_poses: &[Pose],
    k: &Intrinsics,
) -> Result<Vec<WarpedFrame>, WarpError> {
    if frames.len() != dst_poses.len() {
        return Err(WarpError::LengthMismatch { frames: frames.len(), poses: dst_poses.len() });
    }
    frames
        .iter()
        .zip(dst_poses)
        .map(|((image, depth, pose), dst)| forward_warp(image, depth, pose, dst, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose;
    use crate::rng::Xorshift64Star;

    fn k() -> Intrinsics {
        Intrinsics::new(64.0, 64.0, 32.0, 32.0, 64, 64).unwrap()
    }

    fn random_frame(seed: u64) -> (Image, DepthMap) {
        let mut rng = Xorshift64Star::new(seed);
        let data: Vec<f32> = (0..64 * 64 * 3)
            .map(|_| (rng.next_index(256) as f32) / 255.0)
            .collect();
        let image = Image::new(64, 64, 3, data).unwrap();
        let depth_data: Vec<f32> = (0..64 * 64)
            .map(|i| {
                // A band of invalid pixels.
                if i % 17 == 0 {
                    0.0
                } else {
                    2.0 + rng.next_f64() as f32
                }
            })
            .collect();
        let depth = DepthMap::new(64, 64, depth_data).unwrap();
        (image, depth)
    }

    #[test]
    fn identity_warp_reproduces_valid_pixels() {
        let (image, depth) = random_frame(1);
        let pose = Pose::identity();
        let out = forward_warp(&image, &depth, &pose, &pose, &k()).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                if depth.is_valid(x, y) {
                    assert_eq!(out.mask.get(x, y), 1);
                    assert_eq!(out.image.pixel(x, y), image.pixel(x, y));
                    assert!((out.zbuffer.get(x, y) - depth.get(x, y)).abs() < 1e-6);
                } else {
                    assert_eq!(out.mask.get(x, y), 0);
                    assert_eq!(out.image.pixel(x, y), &[0.0, 0.0, 0.0]);
                    assert!(!out.zbuffer.is_valid(x, y));
                }
            }
        }
    }

    #[test]
    fn single_source_pixel_lands_at_hand_computed_target() {
        let mut image = Image::filled(64, 64, 3, 0.0);
        image.set(20, 30, 0, 1.0);
        let mut depth = DepthMap::invalid(64, 64);
        depth.set(20, 30, 2.0);
        let src_pose = Pose::identity();
        // Translate the camera 0.1 to the right: the point shifts left in
        // the image by fx * 0.1 / depth = 64 * 0.1 / 2 = 3.2 px.
        let dst_pose = Pose::from_rotation_translation(
            crate::geom::Mat3::IDENTITY,
            [-0.1, 0.0, 0.0],
        )
        .unwrap();
        let out = forward_warp(&image, &depth, &src_pose, &dst_pose, &k()).unwrap();
        assert_eq!(out.mask.count_valid(), 1);
        // Hand reprojection: world point = ((20-32)/64*2, (30-32)/64*2, 2),
        // camera point x' = x - 0.1 -> u = 64*(x-0.1)/2 + 32 = 16.8 -> 17.
        let expected_u: f64 = ((20.0 - 32.0) / 64.0 * 2.0 - 0.1) / 2.0 * 64.0 + 32.0;
        assert_eq!(expected_u.round(), 17.0);
        assert_eq!(out.mask.get(17, 30), 1);
        assert_eq!(out.image.get(17, 30, 0), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let image = Image::filled(64, 64, 3, 0.0);
        let depth = DepthMap::invalid(32, 32);
        assert!(matches!(
            forward_warp(&image, &depth, &Pose::identity(), &Pose::identity(), &k()),
            Err(WarpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn warp_video_requires_equal_lengths() {
        let (image, depth) = random_frame(2);
        let frames = vec![(image, depth, Pose::identity())];
        assert!(matches!(
            warp_video(&frames, &[], &k()),
            Err(WarpError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn warp_video_singleton_equals_forward_warp() {
        let (image, depth) = random_frame(3);
        let pose = Pose::identity();
        let dst = Pose::from_axis_angle([0.0, 1.0, 0.0], 0.05, [0.0; 3]);
        let direct = forward_warp(&image, &depth, &pose, &dst, &k()).unwrap();
        let via_video =
            warp_video(&[(image.clone(), depth.clone(), pose)], &[dst], &k()).unwrap();
        assert_eq!(via_video.len(), 1);
        assert_eq!(via_video[0].image, direct.image);
        assert_eq!(via_video[0].mask, direct.mask);
        assert_eq!(via_video[0].zbuffer, direct.zbuffer);
    }

    #[test]
    fn result_is_independent_of_splat_order() {
        let (image, depth) = random_frame(4);
        let src = Pose::identity();
        let dst = Pose::from_axis_angle([0.0, 1.0, 0.0], 0.12, [0.05, 0.0, 0.0]);
        let splats = collect_splats(&image, &depth, &src, &dst, &k());
        let forward = reduce_splats(&splats, 64, 64, 3);

        let mut shuffled = splats.clone();
        let mut rng = Xorshift64Star::new(9);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.next_index(i + 1));
        }
        let reordered = reduce_splats(&shuffled, 64, 64, 3);
        assert_eq!(forward.image, reordered.image);
        assert_eq!(forward.mask, reordered.mask);
        assert_eq!(forward.zbuffer, reordered.zbuffer);
    }

    #[test]
    fn zbuffer_keeps_the_nearest_splat() {
        let (image, depth) = random_frame(5);
        let src = Pose::identity();
        let dst = Pose::from_axis_angle([0.0, 1.0, 0.0], 0.15, [0.0; 3]);
        let splats = collect_splats(&image, &depth, &src, &dst, &k());
        let out = reduce_splats(&splats, 64, 64, 3);
        // No discarded splat may beat the winner (the stored z-buffer is
        // f32, so allow its quantization).
        for s in &splats {
            let (x, y) = (s.target % 64, s.target / 64);
            assert_eq!(out.mask.get(x, y), 1);
            let winner_z = out.zbuffer.get(x, y) as f64;
            assert!(
                s.depth >= winner_z * (1.0 - 1e-6),
                "splat at ({x},{y}) depth {} beats winner {winner_z}",
                s.depth
            );
        }
    }

    #[test]
    fn no_color_invention() {
        let (image, depth) = random_frame(6);
        let src = Pose::identity();
        let dst = Pose::from_axis_angle([0.0, 1.0, 0.0], 0.1, [0.02, 0.01, 0.0]);
        let out = forward_warp(&image, &depth, &src, &dst, &k()).unwrap();
        use std::collections::HashSet;
        let source_colors: HashSet<[u32; 3]> = (0..64 * 64)
            .map(|i| {
                let (x, y) = (i % 64, i / 64);
                [
                    image.get(x, y, 0).to_bits(),
                    image.get(x, y, 1).to_bits(),
                    image.get(x, y, 2).to_bits(),
                ]
            })
            .collect();
        for y in 0..64 {
            for x in 0..64 {
                if out.mask.get(x, y) == 1 {
                    let key = [
                        out.image.get(x, y, 0).to_bits(),
                        out.image.get(x, y, 1).to_bits(),
                        out.image.get(x, y, 2).to_bits(),
                    ];
                    assert!(source_colors.contains(&key), "invented color at ({x},{y})");
                }
            }
        }
    }
}

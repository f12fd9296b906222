//! Reconstruction losses and masked image metrics.
//!
//! The IV loss is the robust photometric term for augmented-view
//! supervision: per masked pixel it takes the minimum mean-absolute color
//! difference against a small neighborhood of the target image, absorbing
//! slight geometric misalignment. The argmin offset per pixel is returned so
//! a downstream trainer can route gradients through the winning pixel only.

use thiserror::Error;

use crate::formats::{BinaryMask, Image};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("images are {aw}x{ah} and {bw}x{bh}")]
    DimensionMismatch { aw: usize, ah: usize, bw: usize, bh: usize },
    #[error("mask is {mw}x{mh}, expected {ew}x{eh}")]
    MaskMismatch { mw: usize, mh: usize, ew: usize, eh: usize },
    #[error("channel counts differ: {a} vs {b}")]
    ChannelMismatch { a: usize, b: usize },
    #[error("metric needs at least one valid mask pixel")]
    EmptyMask,
}

/// Loss weights for the augmented-view objective.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub lambda_r: f64,
    pub lambda_s: f64,
    pub lambda_l: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_r: 1.0, lambda_s: 0.2, lambda_l: 0.0 }
    }
}

/// IV loss output: the mean minimum neighborhood error over masked pixels,
/// and per pixel the offset `(dv, du)` of the winning target pixel.
#[derive(Debug, Clone)]
pub struct IvLoss {
    pub value: f64,
    /// Row-major per-pixel winning offset; `(0, 0)` for unmasked pixels.
    pub argmin: Vec<(i32, i32)>,
    /// Set when the mask had no valid pixels (value is defined as 0).
    pub empty_mask: bool,
}

fn check_pair(a: &Image, b: &Image) -> Result<(), LossError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(LossError::DimensionMismatch {
            aw: a.width(),
            ah: a.height(),
            bw: b.width(),
            bh: b.height(),
        });
    }
    if a.channels() != b.channels() {
        return Err(LossError::ChannelMismatch { a: a.channels(), b: b.channels() });
    }
    Ok(())
}

fn check_mask(a: &Image, mask: &BinaryMask) -> Result<(), LossError> {
    if mask.width() != a.width() || mask.height() != a.height() {
        return Err(LossError::MaskMismatch {
            mw: mask.width(),
            mh: mask.height(),
            ew: a.width(),
            eh: a.height(),
        });
    }
    Ok(())
}

/// Mean absolute difference over channels between `rendered(x, y)` and
/// `target(tx, ty)`.
fn pixel_abs_diff(rendered: &Image, target: &Image, x: usize, y: usize, tx: usize, ty: usize) -> f64 {
    let channels = rendered.channels();
    let mut acc = 0.0;
    for c in 0..channels {
        acc += (rendered.get(x, y, c) as f64 - target.get(tx, ty, c) as f64).abs();
    }
    acc / channels as f64
}

/// Robust neighborhood-minimum L1 loss.
///
/// For each masked pixel p, the contribution is the minimum over in-bounds
/// offsets o in [-radius, radius]^2 of the mean-channel absolute difference
/// |rendered(p) - target(p + o)|; the total is averaged over masked pixels.
/// Ties pick the first offset in row-major offset order. The search
/// neighborhood is on the target side only, so the loss is deliberately
/// asymmetric in its arguments.
pub fn iv_loss(
    rendered: &Image,
    target: &Image,
    mask: &BinaryMask,
    radius: usize,
) -> Result<IvLoss, LossError> {
    check_pair(rendered, target)?;
    check_mask(rendered, mask)?;
    let (w, h) = (rendered.width(), rendered.height());
    let r = radius as i32;
    let mut argmin = vec![(0i32, 0i32); w * h];
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut best_offset = (0i32, 0i32);
            for dv in -r..=r {
                let ty = y as i32 + dv;
                if ty < 0 || ty >= h as i32 {
                    continue;
                }
                for du in -r..=r {
                    let tx = x as i32 + du;
                    if tx < 0 || tx >= w as i32 {
                        continue;
                    }
                    let d = pixel_abs_diff(rendered, target, x, y, tx as usize, ty as usize);
                    if d < best {
                        best = d;
                        best_offset = (dv, du);
                    }
                }
            }
            argmin[y * w + x] = best_offset;
            total += best;
            count += 1;
        }
    }
    if count == 0 {
        return Ok(IvLoss { value: 0.0, argmin, empty_mask: true });
    }
    Ok(IvLoss { value: total / count as f64, argmin, empty_mask: false })
}

/// Plain masked mean-absolute error (the radius-0 special case of
/// [`iv_loss`]).
pub fn masked_l1(rendered: &Image, target: &Image, mask: &BinaryMask) -> Result<f64, LossError> {
    Ok(iv_loss(rendered, target, mask, 0)?.value)
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// SSIM of the masked images: both inputs are multiplied by the mask and
/// compared with the standard 11x11 Gaussian window (sigma 1.5, K1 = 0.01,
/// K2 = 0.03, dynamic range 1), averaged over channels. Near borders (and
/// for images smaller than the window) the window is truncated and
/// renormalized.
pub fn masked_ssim(a: &Image, b: &Image, mask: &BinaryMask) -> Result<f64, LossError> {
    check_pair(a, b)?;
    check_mask(a, mask)?;
    let (w, h) = (a.width(), a.height());
    let kernel = gaussian_kernel();
    let half = SSIM_WINDOW as i32 / 2;
    let c1 = (SSIM_K1 * 1.0) * (SSIM_K1 * 1.0);
    let c2 = (SSIM_K2 * 1.0) * (SSIM_K2 * 1.0);

    let mut channel_means = Vec::with_capacity(a.channels());
    for c in 0..a.channels() {
        // Masked channel planes.
        let plane = |img: &Image| -> Vec<f64> {
            let mut out = vec![0.0; w * h];
            for y in 0..h {
                for x in 0..w {
                    if mask.get(x, y) == 1 {
                        out[y * w + x] = img.get(x, y, c) as f64;
                    }
                }
            }
            out
        };
        let pa = plane(a);
        let pb = plane(b);

        // Separable truncated-normalized Gaussian blur.
        let blur = |src: &[f64]| -> Vec<f64> {
            let mut tmp = vec![0.0; w * h];
            for y in 0..h {
                for x in 0..w {
                    let mut acc = 0.0;
                    let mut wsum = 0.0;
                    for (i, kv) in kernel.iter().enumerate() {
                        let sx = x as i32 + i as i32 - half;
                        if sx >= 0 && sx < w as i32 {
                            acc += kv * src[y * w + sx as usize];
                            wsum += kv;
                        }
                    }
                    tmp[y * w + x] = acc / wsum;
                }
            }
            let mut out = vec![0.0; w * h];
            for y in 0..h {
                for x in 0..w {
                    let mut acc = 0.0;
                    let mut wsum = 0.0;
                    for (i, kv) in kernel.iter().enumerate() {
                        let sy = y as i32 + i as i32 - half;
                        if sy >= 0 && sy < h as i32 {
                            acc += kv * tmp[sy as usize * w + x];
                            wsum += kv;
                        }
                    }
                    out[y * w + x] = acc / wsum;
                }
            }
            out
        };

        let sq: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let mu_a = blur(&pa);
        let mu_b = blur(&pb);
        let ea2 = blur(&sq);
        let eb2 = blur(&pb.iter().map(|v| v * v).collect::<Vec<_>>());
        let eab = blur(&pa.iter().zip(&pb).map(|(x, y)| x * y).collect::<Vec<_>>());

        let mut sum = 0.0;
        for i in 0..w * h {
            let va = (ea2[i] - mu_a[i] * mu_a[i]).max(0.0);
            let vb = (eb2[i] - mu_b[i] * mu_b[i]).max(0.0);
            let cov = eab[i] - mu_a[i] * mu_b[i];
            let s = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2))
                / ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
            sum += s;
        }
        channel_means.push(sum / (w * h) as f64);
    }
    Ok(channel_means.iter().sum::<f64>() / channel_means.len() as f64)
}

/// PSNR over mask-valid pixels, in dB. Identical masked content yields the
/// +infinity sentinel; an empty mask is an error.
pub fn masked_psnr(a: &Image, b: &Image, mask: &BinaryMask) -> Result<f64, LossError> {
    check_pair(a, b)?;
    check_mask(a, mask)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in 0..a.height() {
        for x in 0..a.width() {
            if mask.get(x, y) == 0 {
                continue;
            }
            for c in 0..a.channels() {
                let d = a.get(x, y, c) as f64 - b.get(x, y, c) as f64;
                sum += d * d;
            }
            count += a.channels();
        }
    }
    if count == 0 {
        return Err(LossError::EmptyMask);
    }
    let mse = sum / count as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Optional perceptual-metric hook; receives the two masked images.
pub type PerceptualHook<'a> = &'a dyn Fn(&Image, &Image) -> f64;

/// Combined augmented-view objective for one frame:
/// `lambda_r * IV + lambda_s * (1 - SSIM) + lambda_l * perceptual`,
/// all computed on the supervision-masked pair. Without a hook the
/// perceptual term is 0.
pub fn augmented_objective(
    rendered: &Image,
    target: &Image,
    supervision_mask: &BinaryMask,
    weights: &LossWeights,
    radius: usize,
    perceptual: Option<PerceptualHook<'_>>,
) -> Result<f64, LossError> {
    let iv = iv_loss(rendered, target, supervision_mask, radius)?.value;
    let ssim = masked_ssim(rendered, target, supervision_mask)?;
    let lpips = match perceptual {
        Some(hook) => {
            let ma = crate::trackmask::apply_mask(rendered, supervision_mask)
                .expect("dimensions already checked");
            let mb = crate::trackmask::apply_mask(target, supervision_mask)
                .expect("dimensions already checked");
            hook(&ma, &mb)
        }
        None => 0.0,
    };
    Ok(weights.lambda_r * iv + weights.lambda_s * (1.0 - ssim) + weights.lambda_l * lpips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xorshift64Star;
    use approx::assert_relative_eq;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = Xorshift64Star::new(seed);
        let data = (0..w * h * 3).map(|_| rng.next_f64() as f32).collect();
        Image::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn iv_loss_of_identical_images_is_zero() {
        let img = random_image(8, 8, 1);
        let out = iv_loss(&img, &img, &BinaryMask::ones(8, 8), 1).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(!out.empty_mask);
        assert!(out.argmin.iter().all(|o| *o == (0, 0)));
    }

    #[test]
    fn one_pixel_shift_is_absorbed_on_interior() {
        let target = random_image(10, 10, 2);
        // rendered(x, y) = target(x+1, y): searching target at offset
        // (0, +1) from p recovers the exact pixel.
        let mut rendered = Image::filled(10, 10, 3, 0.0);
        for y in 0..10 {
            for x in 0..9 {
                for c in 0..3 {
                    rendered.set(x, y, c, target.get(x + 1, y, c));
                }
            }
        }
        // Interior mask avoids the right border column where the shifted
        // source does not exist.
        let mut mask = BinaryMask::zeros(10, 10);
        for y in 1..9 {
            for x in 1..9 {
                mask.set(x, y, 1);
            }
        }
        let out = iv_loss(&rendered, &target, &mask, 1).unwrap();
        assert_eq!(out.value, 0.0);
        // Winning offsets point one pixel right: (dv, du) = (0, 1).
        for y in 1..9 {
            for x in 1..9 {
                assert_eq!(out.argmin[y * 10 + x], (0, 1));
            }
        }
    }

    /// Straightforward reimplementation used as the exhaustive oracle.
    fn iv_brute(rendered: &Image, target: &Image, mask: &BinaryMask, radius: i32) -> f64 {
        let (w, h) = (rendered.width(), rendered.height());
        let mut total = 0.0;
        let mut n = 0;
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                if mask.get(x as usize, y as usize) == 0 {
                    continue;
                }
                let mut best = f64::INFINITY;
                for dv in -radius..=radius {
                    for du in -radius..=radius {
                        let (tx, ty) = (x + du, y + dv);
                        if tx < 0 || ty < 0 || tx >= w as i32 || ty >= h as i32 {
                            continue;
                        }
                        let mut d = 0.0;
                        for c in 0..3 {
                            d += (rendered.get(x as usize, y as usize, c) as f64
                                - target.get(tx as usize, ty as usize, c) as f64)
                                .abs();
                        }
                        best = best.min(d / 3.0);
                    }
                }
                total += best;
                n += 1;
            }
        }
        total / n as f64
    }

    #[test]
    fn iv_loss_matches_exhaustive_oracle() {
        for seed in 0..100 {
            let a = random_image(6, 6, 1000 + seed);
            let b = random_image(6, 6, 2000 + seed);
            let mask = BinaryMask::ones(6, 6);
            let got = iv_loss(&a, &b, &mask, 1).unwrap().value;
            let want = iv_brute(&a, &b, &mask, 1);
            assert_eq!(got, want, "seed {seed}");
        }
    }

    #[test]
    fn iv_loss_bounded_by_masked_l1() {
        for seed in 0..50 {
            let a = random_image(7, 5, 3000 + seed);
            let b = random_image(7, 5, 4000 + seed);
            let mask = BinaryMask::ones(7, 5);
            let iv = iv_loss(&a, &b, &mask, 1).unwrap().value;
            let l1 = masked_l1(&a, &b, &mask).unwrap();
            assert!(iv <= l1 + 1e-15);
        }
    }

    #[test]
    fn iv_radius_zero_equals_masked_l1() {
        let a = random_image(9, 9, 7);
        let b = random_image(9, 9, 8);
        let mask = BinaryMask::new(9, 9, (0..81).map(|i| (i % 2) as u8).collect()).unwrap();
        let iv = iv_loss(&a, &b, &mask, 0).unwrap().value;
        let l1 = masked_l1(&a, &b, &mask).unwrap();
        assert_eq!(iv, l1);
    }

    #[test]
    fn iv_loss_is_asymmetric() {
        // rendered constant, target has one bright pixel: from the rendered
        // side every pixel finds a perfect match except near the bright
        // spot; swapping the arguments searches the constant image instead
        // and the bright pixel never finds a match.
        let flat = Image::filled(5, 5, 3, 0.2);
        let mut spot = Image::filled(5, 5, 3, 0.2);
        for c in 0..3 {
            spot.set(2, 2, c, 1.0);
        }
        let mask = BinaryMask::ones(5, 5);
        let a = iv_loss(&flat, &spot, &mask, 1).unwrap().value;
        let b = iv_loss(&spot, &flat, &mask, 1).unwrap().value;
        assert_ne!(a, b);
        assert_eq!(a, 0.0); // flat pixels always find a flat neighbor
        assert!(b > 0.0); // the spot finds no bright neighbor in flat
    }

    #[test]
    fn iv_empty_mask_is_flagged_zero() {
        let img = random_image(4, 4, 9);
        let out = iv_loss(&img, &img, &BinaryMask::zeros(4, 4), 1).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.empty_mask);
    }

    #[test]
    fn ssim_self_similarity_is_one() {
        let img = random_image(16, 16, 10);
        let s = masked_ssim(&img, &img, &BinaryMask::ones(16, 16)).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        // a = 0, b = 1, full mask: mu_a = 0, mu_b = 1, zero variances.
        // SSIM = (2*0*1 + C1)(2*0 + C2) / ((0 + 1 + C1)(0 + 0 + C2))
        //      = C1 / (1 + C1).
        let a = Image::filled(16, 16, 1, 0.0);
        let b = Image::filled(16, 16, 1, 1.0);
        let c1 = 0.01f64 * 0.01;
        let expected = c1 / (1.0 + c1);
        let s = masked_ssim(&a, &b, &BinaryMask::ones(16, 16)).unwrap();
        assert_relative_eq!(s, expected, epsilon = 1e-12);
    }

    #[test]
    fn ssim_masking_erases_differences() {
        let a = random_image(16, 16, 11);
        let mut b = a.clone();
        // Differ only inside a block, then mask that block out.
        let mut mask = BinaryMask::ones(16, 16);
        for y in 4..8 {
            for x in 4..8 {
                for c in 0..3 {
                    b.set(x, y, c, 1.0 - a.get(x, y, c));
                }
                mask.set(x, y, 0);
            }
        }
        let s = masked_ssim(&a, &b, &mask).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_tiny_image_uses_truncated_window() {
        let a = Image::filled(3, 3, 1, 0.5);
        let s = masked_ssim(&a, &a, &BinaryMask::ones(3, 3)).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psnr_identical_images_hit_sentinel() {
        let img = random_image(8, 8, 12);
        let p = masked_psnr(&img, &img, &BinaryMask::ones(8, 8)).unwrap();
        assert!(p.is_infinite() && p > 0.0);
    }

    #[test]
    fn psnr_uniform_difference_arithmetic() {
        let a = Image::filled(8, 8, 3, 0.5);
        let b = Image::filled(8, 8, 3, 0.6);
        let p = masked_psnr(&a, &b, &BinaryMask::ones(8, 8)).unwrap();
        // |diff| = 0.1 everywhere -> MSE = 0.01 -> 20 dB. The f32 samples
        // make the difference inexact at the 1e-8 level.
        assert_relative_eq!(p, 20.0, epsilon = 1e-5);
    }

    #[test]
    fn psnr_mask_hiding_differences_hits_sentinel() {
        let a = Image::filled(8, 8, 3, 0.5);
        let mut b = a.clone();
        for y in 0..8 {
            for x in 0..4 {
                for c in 0..3 {
                    b.set(x, y, c, 0.9);
                }
            }
        }
        let mut mask = BinaryMask::zeros(8, 8);
        for y in 0..8 {
            for x in 4..8 {
                mask.set(x, y, 1);
            }
        }
        let p = masked_psnr(&a, &b, &mask).unwrap();
        assert!(p.is_infinite());
    }

    #[test]
    fn psnr_empty_mask_is_error() {
        let img = random_image(4, 4, 13);
        assert!(matches!(
            masked_psnr(&img, &img, &BinaryMask::zeros(4, 4)),
            Err(LossError::EmptyMask)
        ));
    }

    #[test]
    fn objective_reductions() {
        let a = random_image(12, 12, 14);
        let b = random_image(12, 12, 15);
        let mask = BinaryMask::ones(12, 12);

        // Identical images, any weights: 0.
        let w = LossWeights::default();
        let z = augmented_objective(&a, &a, &mask, &w, 1, None).unwrap();
        assert!(z.abs() < 1e-12);

        // (1, 0, 0) reduces to the IV loss.
        let w = LossWeights { lambda_r: 1.0, lambda_s: 0.0, lambda_l: 0.0 };
        let o = augmented_objective(&a, &b, &mask, &w, 1, None).unwrap();
        assert_eq!(o, iv_loss(&a, &b, &mask, 1).unwrap().value);

        // (0, 1, 0) on identical images: SSIM = 1 so the term vanishes.
        let w = LossWeights { lambda_r: 0.0, lambda_s: 1.0, lambda_l: 0.0 };
        let o = augmented_objective(&a, &a, &mask, &w, 1, None).unwrap();
        assert!(o.abs() < 1e-12);
    }

    #[test]
    fn objective_uses_perceptual_hook() {
        let a = random_image(6, 6, 16);
        let mask = BinaryMask::ones(6, 6);
        let hook = |_: &Image, _: &Image| 0.7;
        let w = LossWeights { lambda_r: 0.0, lambda_s: 0.0, lambda_l: 2.0 };
        let o = augmented_objective(&a, &a, &mask, &w, 1, Some(&hook)).unwrap();
        assert_relative_eq!(o, 1.4, epsilon = 1e-12);
    }
}

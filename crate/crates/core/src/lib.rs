//! Geometric view augmentation for monocular 4D capture.
//!
//! The pipeline takes a posed monocular video with relative depth maps and
//! grows it into a multi-view data buffer: depth maps are aligned to metric
//! scale against a sparse reconstruction ([`depth_align`]), frames are
//! forward-warped into novel viewpoints ([`warp`]), the resulting holes are
//! completed by a pluggable inpainter ([`inpaint`]), and an iterative
//! scheduler expands the viewpoint ring while keeping per-pixel supervision
//! bookkeeping consistent ([`augment`]). Robust reconstruction losses and
//! masked image metrics live in [`losses`], training-mask synthesis from 2D
//! tracks in [`trackmask`], and file-format carriers (COLMAP text, PFM,
//! PPM/PGM, track files) in [`formats`]. [`synth`] provides an analytic
//! ray-cast scene used as the ground-truth oracle throughout the test
//! suite.

pub mod augment;
pub mod depth_align;
pub mod formats;
pub mod geom;
pub mod inpaint;
pub mod losses;
pub mod rng;
pub mod synth;
pub mod trackmask;
pub mod warp;

//! Contact-sheet diagnostics: a grid montage of frames in one PPM.

use viewaug_core::formats::Image;

/// Tiles images (all the same shape) into a grid, row-major.
pub fn contact_sheet(images: &[Image]) -> Option<Image> {
    let first = images.first()?;
    let (w, h, channels) = (first.width(), first.height(), first.channels());
    let cols = (images.len() as f64).sqrt().ceil() as usize;
    let rows = images.len().div_ceil(cols);
    let mut sheet = Image::filled(cols * w, rows * h, channels, 0.0);
    for (i, img) in images.iter().enumerate() {
        if img.width() != w || img.height() != h || img.channels() != channels {
            return None;
        }
        let (cx, cy) = ((i % cols) * w, (i / cols) * h);
        for y in 0..h {
            for x in 0..w {
                for c in 0..channels {
                    sheet.set(cx + x, cy + y, c, img.get(x, y, c));
                }
            }
        }
    }
    Some(sheet)
}

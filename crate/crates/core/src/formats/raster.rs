//! In-memory raster grids: images, depth maps, and binary masks.

use super::FormatError;

/// Row-major image with samples in [0, 1]; 1 (gray) or 3 (rgb) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self, FormatError> {
        if channels != 1 && channels != 3 {
            return Err(FormatError::InvalidRaster(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(FormatError::InvalidRaster(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FormatError::InvalidRaster(format!(
                "sample {bad} outside [0, 1]"
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("filled image is valid by construction")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        debug_assert!((0.0..=1.0).contains(&value), "sample {value} outside [0,1]");
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    /// All channel samples of one pixel.
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let base = (y * self.width + x) * self.channels;
        &self.data[base..base + self.channels]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
    }
}

/// Row-major depth map in meters. Entries that are nonpositive or nonfinite
/// mark invalid pixels; valid entries are finite and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, FormatError> {
        if data.len() != width * height {
            return Err(FormatError::InvalidRaster(format!(
                "depth data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// A map with every pixel marked invalid.
    pub fn invalid(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        self.data[y * self.width + x] = value;
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        let v = self.get(x, y);
        v.is_finite() && v > 0.0
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f32> + '_ {
        self.data.iter().copied().filter(|v| v.is_finite() && *v > 0.0)
    }

    /// Median of the valid entries, if any.
    pub fn median_valid(&self) -> Option<f64> {
        let mut values: Vec<f32> = self.valid_values().collect();
        if values.is_empty() {
            return None;
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("valid depths are finite"));
        let n = values.len();
        Some(if n % 2 == 1 {
            values[n / 2] as f64
        } else {
            (values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0
        })
    }
}

/// Row-major binary mask; 1 = valid/known pixel, 0 = hole.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, FormatError> {
        if data.len() != width * height {
            return Err(FormatError::InvalidRaster(format!(
                "mask data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| **v > 1) {
            return Err(FormatError::InvalidRaster(format!(
                "mask value {bad} outside {{0, 1}}"
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![1; width * height] }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        debug_assert!(value <= 1);
        self.data[y * self.width + x] = value;
    }

    pub fn count_valid(&self) -> usize {
        self.data.iter().filter(|v| **v == 1).count()
    }

    pub fn fraction_valid(&self) -> f64 {
        self.count_valid() as f64 / (self.width * self.height) as f64
    }
}

/// Mask as a grayscale image (1 -> 1.0, 0 -> 0.0) for PGM output.
pub fn mask_to_image(mask: &BinaryMask) -> Image {
    let data = mask.data().iter().map(|v| *v as f32).collect();
    Image::new(mask.width(), mask.height(), 1, data).expect("mask samples are 0/1")
}

/// Grayscale image back to a mask; rejects samples that are not 0 or 1.
pub fn image_to_mask(image: &Image) -> Result<BinaryMask, FormatError> {
    if image.channels() != 1 {
        return Err(FormatError::InvalidRaster(format!(
            "mask image must be single-channel, got {}",
            image.channels()
        )));
    }
    let data = image
        .data()
        .iter()
        .map(|v| {
            if *v == 0.0 {
                Ok(0u8)
            } else if *v == 1.0 {
                Ok(1u8)
            } else {
                Err(FormatError::InvalidRaster(format!(
                    "mask sample {v} is neither 0 nor 1"
                )))
            }
        })
        .collect::<Result<Vec<u8>, _>>()?;
    BinaryMask::new(image.width(), image.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_bad_shape_and_range() {
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(Image::new(2, 2, 3, vec![0.0; 11]).is_err());
        assert!(Image::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.5; 4]).is_ok());
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(BinaryMask::new(2, 1, vec![0, 2]).is_err());
        assert!(BinaryMask::new(2, 1, vec![0, 1]).is_ok());
    }

    #[test]
    fn depth_median_handles_invalid_entries() {
        let d = DepthMap::new(2, 2, vec![1.0, -1.0, 3.0, f32::NAN]).unwrap();
        assert_eq!(d.median_valid(), Some(2.0));
        assert!(!d.is_valid(1, 0));
        assert!(!d.is_valid(1, 1));
        assert!(d.is_valid(0, 0));
        assert_eq!(DepthMap::invalid(2, 2).median_valid(), None);
    }

    #[test]
    fn mask_image_round_trip() {
        let mask = BinaryMask::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        let back = image_to_mask(&mask_to_image(&mask)).unwrap();
        assert_eq!(back, mask);
    }
}

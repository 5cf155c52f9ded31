//! Pixel kernels shared by the measurement and perturbation stages.
//!
//! Coordinates are always `(row, col)` with row 0 at the top. Images are
//! stored row-major.

mod components;
mod edt;
mod morphology;
mod resample;
mod skeleton;

pub use components::{count_components, Connectivity};
pub use edt::{edt, DistanceMap};
pub use morphology::{dilate_disc, disc_offsets, erode_disc};
pub use resample::{
    binarize, bicubic_sample, downscale, downscale_binary, gaussian_smooth, keys_weight,
    upscale, warp_backward,
};
pub use skeleton::{skeletonize, Skeleton};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RasterError {
    #[error("scale factor must be at least 1")]
    InvalidFactor,
    #[error("image of {height}x{width} is not divisible by factor {factor}")]
    NonDivisibleDimensions {
        height: usize,
        width: usize,
        factor: usize,
    },
    #[error("image has no intensity range (flat image)")]
    FlatImage,
    #[error("image has no background pixels")]
    NoBackground,
    #[error("image has no foreground pixels")]
    EmptyForeground,
}

/// Working-precision grayscale raster. Canonical input range is `[0, 255]`,
/// but intermediate results (e.g. bicubic overshoot) may leave it.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), height * width, "pixel buffer size");
        debug_assert!(pixels.iter().all(|v| v.is_finite()), "non-finite intensity");
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn from_u8(height: usize, width: usize, bytes: &[u8]) -> Self {
        Self::new(height, width, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    /// Reads with coordinates clamped to the border.
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.height, self.width, self.pixels.iter().map(|&v| f(v)).collect())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    /// Rounds half away from zero and clamps to `[0, 255]`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn mirror_horizontal(&self) -> Self {
        Self::from_fn(self.height, self.width, |r, c| self.get(r, self.width - 1 - c))
    }

    /// Surrounds the image with `pad` background rows/columns on every side.
    pub fn padded(&self, pad: usize, value: f64) -> Self {
        let (h, w) = (self.height + 2 * pad, self.width + 2 * pad);
        Self::from_fn(h, w, |r, c| {
            if r < pad || c < pad || r >= pad + self.height || c >= pad + self.width {
                value
            } else {
                self.get(r - pad, c - pad)
            }
        })
    }
}

/// Boolean raster, `true` is foreground (ink).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    height: usize,
    width: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    pub fn new(height: usize, width: usize, pixels: Vec<bool>) -> Self {
        assert_eq!(pixels.len(), height * width, "pixel buffer size");
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self::new(height, width, vec![false; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    /// Out-of-bounds reads return background.
    pub fn get_or_bg(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.get(row as usize, col as usize)
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn complement(&self) -> Self {
        Self::new(self.height, self.width, self.pixels.iter().map(|p| !p).collect())
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.dims() == other.dims()
            && self
                .pixels
                .iter()
                .zip(&other.pixels)
                .all(|(&a, &b)| !a || b)
    }

    /// Lifts to intensities `{0, 255}`.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(
            self.height,
            self.width,
            self.pixels
                .iter()
                .map(|&p| if p { 255.0 } else { 0.0 })
                .collect(),
        )
    }
}

//! Shape attributes of a glyph: stroke length and thickness, slant, width
//! and height. Lengths are reported in original-resolution pixels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::raster::{
    binarize, edt, skeletonize, upscale, BinaryImage, DistanceMap, GrayImage, RasterError,
    Skeleton,
};

pub const DEFAULT_SCALE: usize = 4;
/// Fraction of image mass kept inside the bounding parallelogram.
pub const DEFAULT_MASS: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("skeleton is empty")]
    EmptySkeleton,
    #[error("image has zero total intensity")]
    ZeroMass,
    #[error("all image mass lies on a single row")]
    DegenerateRow,
    #[error("mass fraction must lie in (0, 1], got {0}")]
    InvalidMass(f64),
}

impl MeasureError {
    /// Short stable identifier, used in CSV error columns.
    pub fn code(&self) -> &'static str {
        match self {
            MeasureError::Raster(RasterError::FlatImage) => "flat_image",
            MeasureError::Raster(RasterError::EmptyForeground) => "empty_foreground",
            MeasureError::Raster(RasterError::NoBackground) => "no_background",
            MeasureError::Raster(_) => "raster",
            MeasureError::EmptySkeleton => "empty_skeleton",
            MeasureError::ZeroMass => "zero_mass",
            MeasureError::DegenerateRow => "degenerate_row",
            MeasureError::InvalidMass(_) => "invalid_mass",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Length,
    Thickness,
    Slant,
    Width,
    Height,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Length,
        Attribute::Thickness,
        Attribute::Slant,
        Attribute::Width,
        Attribute::Height,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Length => "length",
            Attribute::Thickness => "thickness",
            Attribute::Slant => "slant",
            Attribute::Width => "width",
            Attribute::Height => "height",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A measurement failure tagged with the attribute that could not be computed.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{attribute}: {source}")]
pub struct AttributeError {
    pub attribute: Attribute,
    pub source: MeasureError,
}

impl AttributeError {
    pub fn code(&self) -> String {
        format!("{}:{}", self.attribute, self.source.code())
    }
}

/// The five attributes of one glyph. Lengths in original pixels, slant in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphometryRecord {
    pub length: f64,
    pub thickness: f64,
    pub slant: f64,
    pub width: f64,
    pub height: f64,
}

impl MorphometryRecord {
    pub fn get(&self, attribute: Attribute) -> f64 {
        match attribute {
            Attribute::Length => self.length,
            Attribute::Thickness => self.thickness,
            Attribute::Slant => self.slant,
            Attribute::Width => self.width,
            Attribute::Height => self.height,
        }
    }
}

/// Intermediate products of the high-resolution pipeline.
#[derive(Debug, Clone)]
pub struct PipelineProducts {
    pub factor: usize,
    pub binary: BinaryImage,
    pub distance: DistanceMap,
    pub skeleton: Skeleton,
}

impl PipelineProducts {
    /// Distance map and skeleton of an already binarised high-resolution image.
    pub fn from_binary(binary: BinaryImage, factor: usize) -> Result<Self, MeasureError> {
        let distance = edt(&binary)?;
        let skeleton = skeletonize(&binary, &distance)?;
        Ok(Self {
            factor,
            binary,
            distance,
            skeleton,
        })
    }

    /// Thickness in high-resolution pixels: twice the mean EDT over the skeleton.
    pub fn thickness_hi(&self) -> Result<f64, MeasureError> {
        let d = self.skeleton.distances();
        if d.is_empty() {
            return Err(MeasureError::EmptySkeleton);
        }
        Ok(2.0 * d.iter().sum::<f64>() / d.len() as f64)
    }
}

/// Upscale, binarise, distance transform, skeletonise.
pub fn run_pipeline(image: &GrayImage, factor: usize) -> Result<PipelineProducts, MeasureError> {
    let high = upscale(image, factor)?;
    let binary = binarize(&high)?;
    PipelineProducts::from_binary(binary, factor)
}

/// Skeleton length: centre distances of 8-adjacent skeleton pairs, each pair
/// counted once, divided by the scale factor.
pub fn stroke_length(products: &PipelineProducts) -> Result<f64, MeasureError> {
    let skeleton = &products.skeleton;
    if skeleton.is_empty() {
        return Err(MeasureError::EmptySkeleton);
    }
    let total: f64 = skeleton
        .edges()
        .map(|((r0, c0), (r1, c1))| {
            if r0 != r1 && c0 != c1 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            }
        })
        .sum();
    Ok(total / products.factor as f64)
}

pub fn stroke_thickness(products: &PipelineProducts) -> Result<f64, MeasureError> {
    Ok(products.thickness_hi()? / products.factor as f64)
}

struct Moments {
    total: f64,
    mean_row: f64,
    s12: f64,
    s22: f64,
}

fn moments(image: &GrayImage) -> Result<Moments, MeasureError> {
    let total = image.sum();
    if !(total > 0.0) {
        return Err(MeasureError::ZeroMass);
    }
    let (h, w) = image.dims();
    let (mut sum_col, mut sum_row) = (0.0, 0.0);
    for r in 0..h {
        for c in 0..w {
            let x = image.get(r, c);
            sum_col += x * c as f64;
            sum_row += x * r as f64;
        }
    }
    let (mean_col, mean_row) = (sum_col / total, sum_row / total);
    let (mut s12, mut s22) = (0.0, 0.0);
    for r in 0..h {
        let dj = r as f64 - mean_row;
        for c in 0..w {
            let x = image.get(r, c);
            s12 += x * (c as f64 - mean_col) * dj;
            s22 += x * dj * dj;
        }
    }
    Ok(Moments {
        total,
        mean_row,
        s12,
        s22,
    })
}

/// Horizontal-shear slant `atan(-S12 / S22)` from intensity-weighted second
/// moments (column `i`, row `j`). Positive values lean forward.
pub fn slant(image: &GrayImage) -> Result<f64, MeasureError> {
    let m = moments(image)?;
    if m.s22 <= 0.0 {
        return Err(MeasureError::DegenerateRow);
    }
    Ok((-m.s12 / m.s22).atan())
}

/// Lower and upper bounds of the equal-tailed interval holding `mass` of a
/// histogram with unit bins starting at `origin`; density is uniform within a bin.
fn equal_tailed_interval(bins: &[f64], origin: f64, mass: f64) -> (f64, f64) {
    let total: f64 = bins.iter().sum();
    let tail = (1.0 - mass) / 2.0 * total;
    let mut lo = origin;
    let mut cum = 0.0;
    for (k, &m) in bins.iter().enumerate() {
        if m > 0.0 && cum + m > tail {
            lo = origin + k as f64 + (tail - cum) / m;
            break;
        }
        cum += m;
    }
    let mut hi = origin + bins.len() as f64;
    cum = 0.0;
    for (k, &m) in bins.iter().enumerate().rev() {
        if m > 0.0 && cum + m > tail {
            hi = origin + (k + 1) as f64 - (tail - cum) / m;
            break;
        }
        cum += m;
    }
    (lo, hi)
}

/// Width and height of the bounding parallelogram with horizontal top/bottom
/// and sides slanted at `alpha`, each holding `mass` of the intensity with
/// equal tails trimmed on both sides.
pub fn bounding_parallelogram(image: &GrayImage, alpha: f64, mass: f64) -> Result<(f64, f64), MeasureError> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(MeasureError::InvalidMass(mass));
    }
    let m = moments(image)?;
    let (h, w) = image.dims();

    let row_mass: Vec<f64> = (0..h)
        .map(|r| (0..w).map(|c| image.get(r, c)).sum())
        .collect();
    let (top, bottom) = equal_tailed_interval(&row_mass, -0.5, mass);

    // each pixel's mass goes to the unit bin containing its deslanted abscissa
    let shear = alpha.tan();
    let bin = |r: usize, c: usize| (c as f64 + (r as f64 - m.mean_row) * shear + 0.5).floor() as i64;
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for r in 0..h {
        for c in 0..w {
            if image.get(r, c) != 0.0 {
                lo = lo.min(bin(r, c));
                hi = hi.max(bin(r, c));
            }
        }
    }
    let mut col_mass = vec![0.0; (hi - lo + 1) as usize];
    for r in 0..h {
        for c in 0..w {
            let x = image.get(r, c);
            if x != 0.0 {
                col_mass[(bin(r, c) - lo) as usize] += x;
            }
        }
    }
    let origin = lo as f64 - 0.5;
    let (left, right) = equal_tailed_interval(&col_mass, origin, mass);
    debug_assert!(m.total > 0.0);
    Ok((right - left, bottom - top))
}

/// All five attributes. Slant and the parallelogram use the original image;
/// length and thickness use the upscaled pipeline products.
pub fn measure(image: &GrayImage, factor: usize) -> Result<MorphometryRecord, AttributeError> {
    let tag = |attribute| move |source| AttributeError { attribute, source };
    let slant = slant(image).map_err(tag(Attribute::Slant))?;
    let (width, height) =
        bounding_parallelogram(image, slant, DEFAULT_MASS).map_err(tag(Attribute::Width))?;
    let products = run_pipeline(image, factor).map_err(tag(Attribute::Length))?;
    let length = stroke_length(&products).map_err(tag(Attribute::Length))?;
    let thickness = stroke_thickness(&products).map_err(tag(Attribute::Thickness))?;
    Ok(MorphometryRecord {
        length,
        thickness,
        slant,
        width,
        height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn products_from_mask(mask: BinaryImage, factor: usize) -> PipelineProducts {
        let distance = edt(&mask).unwrap();
        // the mask is already one pixel wide
        let skeleton = skeletonize(&mask, &distance).unwrap();
        PipelineProducts {
            factor,
            binary: mask,
            distance,
            skeleton,
        }
    }

    #[test]
    fn length_of_straight_runs() {
        let horizontal = BinaryImage::from_fn(5, 50, |r, c| r == 2 && (3..44).contains(&c));
        let p = products_from_mask(horizontal, 4);
        assert_eq!(p.skeleton.len(), 41);
        assert_eq!(stroke_length(&p).unwrap(), 10.0);

        let n = 17;
        let diagonal = BinaryImage::from_fn(20, 20, |r, c| r == c && r < n);
        let p = products_from_mask(diagonal, 4);
        let expected = (n - 1) as f64 * std::f64::consts::SQRT_2 / 4.0;
        assert!((stroke_length(&p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn single_pixel_skeleton_has_zero_length() {
        let mut mask = BinaryImage::empty(5, 5);
        mask.set(2, 2, true);
        assert_eq!(stroke_length(&products_from_mask(mask, 4)).unwrap(), 0.0);
    }

    #[test]
    fn blank_image_is_flat() {
        let img = GrayImage::filled(28, 28, 0.0);
        assert!(matches!(
            run_pipeline(&img, 4),
            Err(MeasureError::Raster(RasterError::FlatImage))
        ));
        let err = measure(&img, 4).unwrap_err();
        assert_eq!(err.attribute, Attribute::Slant);
        assert_eq!(err.code(), "slant:zero_mass");
    }

    #[test]
    fn pipeline_resolution() {
        let img = synth::solid_box(28, 28, 4, 12, 20, 3);
        let p = run_pipeline(&img, 4).unwrap();
        assert_eq!(p.binary.dims(), (112, 112));
        let p1 = run_pipeline(&img, 1).unwrap();
        assert_eq!(p1.binary.dims(), (28, 28));
    }

    #[test]
    fn symmetric_image_has_zero_slant() {
        let img = synth::disc(28, 28, (13.0, 13.5), 6.0);
        assert!(slant(&img).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_row_is_degenerate() {
        let img = GrayImage::from_fn(5, 5, |r, c| if r == 2 && c > 0 { 9.0 } else { 0.0 });
        assert_eq!(slant(&img), Err(MeasureError::DegenerateRow));
    }

    #[test]
    fn full_mass_box() {
        let img = synth::solid_box(28, 28, 4, 12, 20, 4);
        assert_eq!(bounding_parallelogram(&img, 0.0, 1.0).unwrap(), (4.0, 20.0));
        let (w, h) = bounding_parallelogram(&img, 0.0, 0.98).unwrap();
        // 1% of mass per side: 0.2 of a row (5% each), 0.04 of a column (25% each)
        assert!((h - 19.6).abs() < 1e-9, "{h}");
        assert!((w - 3.92).abs() < 1e-9, "{w}");
        assert!(bounding_parallelogram(&img, 0.0, 0.0).is_err());
    }

    #[test]
    fn measurement_is_deterministic() {
        let img = synth::sheared_bar(28, 28, 3.0, 18.0, 0.3);
        assert_eq!(measure(&img, 4).unwrap(), measure(&img, 4).unwrap());
    }
}

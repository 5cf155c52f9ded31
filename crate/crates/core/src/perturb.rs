//! Perturbations applied to the high-resolution binary glyph: thinning,
//! thickening, local swelling and fractures, plus mixed-dataset assembly.
//!
//! All length parameters are given in original-resolution pixels and are
//! multiplied by the scale factor before use.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::idx::{ByteImage, ImageDataset, LabelVector};
use crate::morphometry::{run_pipeline, MeasureError, PipelineProducts};
use crate::raster::{
    dilate_disc, downscale, erode_disc, warp_backward, BinaryImage, GrayImage,
};
use crate::synth::segment_distance;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerturbError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("skeleton is empty")]
    EmptySkeleton,
    #[error("perturbation removed every foreground pixel")]
    EmptyResult,
    #[error("no skeleton pixel is far enough from tips and forks")]
    NoCandidateSites,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl PerturbError {
    pub fn code(&self) -> &'static str {
        match self {
            PerturbError::Measure(e) => e.code(),
            PerturbError::EmptySkeleton => "empty_skeleton",
            PerturbError::EmptyResult => "empty_result",
            PerturbError::NoCandidateSites => "no_candidate_sites",
            PerturbError::InvalidParameter(_) => "invalid_parameter",
        }
    }
}

pub const THIN_STRENGTH: f64 = 0.7;
pub const THICKEN_STRENGTH: f64 = 1.0;
pub const SWELL_STRENGTH: f64 = 7.0;
pub const SWELL_RADIUS_COEF: f64 = 1.5;

/// A perturbation request. Lengths are in original-resolution pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerturbSpec {
    Identity,
    /// Erosion by a disc of radius `strength * thickness / 2`.
    Thin { strength: f64 },
    /// Dilation by a disc of radius `strength * thickness / 2`.
    Thicken { strength: f64 },
    /// Radial power warp of exponent `strength` inside radius
    /// `radius_coef * sqrt(thickness)`.
    Swell { strength: f64, radius_coef: f64 },
    Fracture {
        count: usize,
        thickness: f64,
        min_distance: f64,
        window: f64,
        extension: f64,
    },
}

impl PerturbSpec {
    pub fn thin() -> Self {
        PerturbSpec::Thin {
            strength: THIN_STRENGTH,
        }
    }

    pub fn thicken() -> Self {
        PerturbSpec::Thicken {
            strength: THICKEN_STRENGTH,
        }
    }

    pub fn swell() -> Self {
        PerturbSpec::Swell {
            strength: SWELL_STRENGTH,
            radius_coef: SWELL_RADIUS_COEF,
        }
    }

    pub fn fracture() -> Self {
        PerturbSpec::Fracture {
            count: 3,
            thickness: 1.5,
            min_distance: 2.0,
            window: 5.0,
            extension: 0.5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PerturbSpec::Identity => "identity",
            PerturbSpec::Thin { .. } => "thin",
            PerturbSpec::Thicken { .. } => "thicken",
            PerturbSpec::Swell { .. } => "swell",
            PerturbSpec::Fracture { .. } => "fracture",
        }
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PerturbError::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            PerturbSpec::Identity => Ok(()),
            PerturbSpec::Thin { strength } | PerturbSpec::Thicken { strength } => {
                positive("strength", strength)
            }
            PerturbSpec::Swell {
                strength,
                radius_coef,
            } => {
                if !(strength > 1.0 && strength.is_finite()) {
                    return Err(PerturbError::InvalidParameter(format!(
                        "swelling strength must exceed 1, got {strength}"
                    )));
                }
                positive("radius_coef", radius_coef)
            }
            PerturbSpec::Fracture {
                thickness,
                min_distance,
                window,
                extension,
                ..
            } => {
                positive("thickness", thickness)?;
                positive("min_distance", min_distance)?;
                positive("window", window)?;
                positive("extension", extension)
            }
        }
    }
}

/// Where one fracture was drawn, in high-resolution pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractureSite {
    pub row: usize,
    pub col: usize,
    /// Direction of the erased segment, radians from the column axis
    /// towards increasing rows.
    pub angle: f64,
    pub half_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum OutcomeDetail {
    Morphology { radius: f64 },
    Swell {
        center: (usize, usize),
        radius: f64,
        strength: f64,
    },
    Fracture {
        requested: usize,
        sites: Vec<FractureSite>,
    },
}

/// Audit record of one perturbation: what was asked, what happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbOutcome {
    pub spec: PerturbSpec,
    pub seed: u64,
    pub applied: bool,
    /// Error code when the perturbation fell back to identity.
    pub failure: Option<String>,
    pub detail: Option<OutcomeDetail>,
}

/// Either kind of high-resolution result; swelling yields intensities.
#[derive(Debug, Clone, PartialEq)]
pub enum HighRes {
    Binary(BinaryImage),
    Gray(GrayImage),
}

impl HighRes {
    pub fn to_gray(&self) -> GrayImage {
        match self {
            HighRes::Binary(b) => b.to_gray(),
            HighRes::Gray(g) => g.clone(),
        }
    }
}

fn morph_radius(products: &PipelineProducts, strength: f64) -> Result<f64, PerturbError> {
    let theta = products
        .thickness_hi()
        .map_err(|_| PerturbError::EmptySkeleton)?;
    Ok(strength * theta / 2.0)
}

pub fn thin(products: &PipelineProducts, strength: f64) -> Result<(BinaryImage, f64), PerturbError> {
    let radius = morph_radius(products, strength)?;
    let out = erode_disc(&products.binary, radius);
    if out.count_foreground() == 0 {
        return Err(PerturbError::EmptyResult);
    }
    Ok((out, radius))
}

pub fn thicken(products: &PipelineProducts, strength: f64) -> Result<(BinaryImage, f64), PerturbError> {
    let radius = morph_radius(products, strength)?;
    Ok((dilate_disc(&products.binary, radius), radius))
}

/// Swelling radius in high-resolution pixels: `coef * sqrt(θ) * f` with θ in
/// original pixels.
pub fn swell_radius(products: &PipelineProducts, radius_coef: f64) -> Result<f64, PerturbError> {
    let f = products.factor as f64;
    let theta = products
        .thickness_hi()
        .map_err(|_| PerturbError::EmptySkeleton)?
        / f;
    Ok(radius_coef * theta.sqrt() * f)
}

/// Radial power warp around `center`: inside `radius` the output at `r`
/// samples the source at `c + (r - c) (|r - c| / R)^(γ - 1)`; outside it the
/// input is copied. Any `strength >= 1` is accepted; 1 is the identity.
pub fn swell_at(image: &GrayImage, center: (usize, usize), radius: f64, strength: f64) -> GrayImage {
    let (cr, cc) = (center.0 as f64, center.1 as f64);
    let warped = warp_backward(image, |r, c| {
        let (dr, dc) = (r as f64 - cr, c as f64 - cc);
        let dist = (dr * dr + dc * dc).sqrt();
        if dist >= radius {
            return (r as f64, c as f64);
        }
        let scale = (dist / radius).powf(strength - 1.0);
        (cr + dr * scale, cc + dc * scale)
    });
    GrayImage::from_fn(image.height(), image.width(), |r, c| {
        let (dr, dc) = (r as f64 - cr, c as f64 - cc);
        if (dr * dr + dc * dc).sqrt() >= radius {
            image.get(r, c)
        } else {
            warped.get(r, c)
        }
    })
}

pub fn swell(
    products: &PipelineProducts,
    strength: f64,
    radius_coef: f64,
    rng: &mut impl Rng,
) -> Result<(GrayImage, OutcomeDetail), PerturbError> {
    let skeleton = &products.skeleton;
    if skeleton.is_empty() {
        return Err(PerturbError::EmptySkeleton);
    }
    let radius = swell_radius(products, radius_coef)?;
    let center = skeleton.pixels()[rng.random_range(0..skeleton.len())];
    let out = swell_at(&products.binary.to_gray(), center, radius, strength);
    Ok((
        out,
        OutcomeDetail::Swell {
            center,
            radius,
            strength,
        },
    ))
}

/// Skeleton pixels farther than `min_distance` (high-res px) from every tip and fork.
pub fn fracture_candidates(products: &PipelineProducts, min_distance: f64) -> Vec<(usize, usize)> {
    let skeleton = &products.skeleton;
    let mut ends = skeleton.tips();
    ends.extend(skeleton.forks());
    let limit2 = min_distance * min_distance;
    skeleton
        .pixels()
        .iter()
        .copied()
        .filter(|&(r, c)| {
            ends.iter().all(|&(er, ec)| {
                let (dr, dc) = (r as f64 - er as f64, c as f64 - ec as f64);
                dr * dr + dc * dc > limit2
            })
        })
        .collect()
}

/// Principal direction (radians from the column axis towards increasing
/// rows) of the skeleton pixels inside the square of side `window` centred
/// on `site`, clipped to the image.
pub fn local_direction(products: &PipelineProducts, site: (usize, usize), window: f64) -> f64 {
    let half = window / 2.0;
    let near: Vec<(f64, f64)> = products
        .skeleton
        .pixels()
        .iter()
        .map(|&(r, c)| (r as f64 - site.0 as f64, c as f64 - site.1 as f64))
        .filter(|&(dr, dc)| dr.abs() <= half && dc.abs() <= half)
        .collect();
    let n = near.len() as f64;
    let (mr, mc) = near
        .iter()
        .fold((0.0, 0.0), |(a, b), &(dr, dc)| (a + dr / n, b + dc / n));
    let (mut srr, mut scc, mut src) = (0.0, 0.0, 0.0);
    for &(dr, dc) in &near {
        let (y, x) = (dr - mr, dc - mc);
        srr += y * y;
        scc += x * x;
        src += x * y;
    }
    0.5 * (2.0 * src).atan2(scc - srr)
}

pub fn fracture(
    products: &PipelineProducts,
    spec: &PerturbSpec,
    rng: &mut impl Rng,
) -> Result<(BinaryImage, OutcomeDetail), PerturbError> {
    let PerturbSpec::Fracture {
        count,
        thickness,
        min_distance,
        window,
        extension,
    } = *spec
    else {
        return Err(PerturbError::InvalidParameter(format!(
            "expected a fracture spec, got {}",
            spec.kind()
        )));
    };
    if products.skeleton.is_empty() {
        return Err(PerturbError::EmptySkeleton);
    }
    if count == 0 {
        return Ok((
            products.binary.clone(),
            OutcomeDetail::Fracture {
                requested: 0,
                sites: Vec::new(),
            },
        ));
    }
    let f = products.factor as f64;
    let candidates = fracture_candidates(products, min_distance * f);
    if candidates.is_empty() {
        return Err(PerturbError::NoCandidateSites);
    }
    let chosen = sample(rng, candidates.len(), count.min(candidates.len()));
    let brush = thickness * f / 2.0;
    let mut out = products.binary.clone();
    let mut sites = Vec::with_capacity(chosen.len());
    for k in chosen {
        let (r, c) = candidates[k];
        let stroke_dir = local_direction(products, (r, c), window * f);
        let angle = stroke_dir + std::f64::consts::FRAC_PI_2;
        let half_length = products.distance.get(r, c) + extension * f;
        let (dr, dc) = (angle.sin() * half_length, angle.cos() * half_length);
        let a = (r as f64 - dr, c as f64 - dc);
        let b = (r as f64 + dr, c as f64 + dc);
        erase_segment(&mut out, a, b, brush);
        sites.push(FractureSite {
            row: r,
            col: c,
            angle,
            half_length,
        });
    }
    Ok((
        out,
        OutcomeDetail::Fracture {
            requested: count,
            sites,
        },
    ))
}

fn erase_segment(image: &mut BinaryImage, a: (f64, f64), b: (f64, f64), radius: f64) {
    let (h, w) = image.dims();
    let lo_r = (a.0.min(b.0) - radius).floor().max(0.0) as usize;
    let hi_r = ((a.0.max(b.0) + radius).ceil().max(0.0) as usize).min(h.saturating_sub(1));
    let lo_c = (a.1.min(b.1) - radius).floor().max(0.0) as usize;
    let hi_c = ((a.1.max(b.1) + radius).ceil().max(0.0) as usize).min(w.saturating_sub(1));
    for r in lo_r..=hi_r {
        for c in lo_c..=hi_c {
            if segment_distance((r as f64, c as f64), a, b) <= radius {
                image.set(r, c, false);
            }
        }
    }
}

/// Applies `spec` to already computed pipeline products.
pub fn apply(
    products: &PipelineProducts,
    spec: &PerturbSpec,
    seed: u64,
) -> Result<(HighRes, Option<OutcomeDetail>), PerturbError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *spec {
        PerturbSpec::Identity => Ok((HighRes::Binary(products.binary.clone()), None)),
        PerturbSpec::Thin { strength } => {
            let (img, radius) = thin(products, strength)?;
            Ok((HighRes::Binary(img), Some(OutcomeDetail::Morphology { radius })))
        }
        PerturbSpec::Thicken { strength } => {
            let (img, radius) = thicken(products, strength)?;
            Ok((HighRes::Binary(img), Some(OutcomeDetail::Morphology { radius })))
        }
        PerturbSpec::Swell {
            strength,
            radius_coef,
        } => {
            let (img, detail) = swell(products, strength, radius_coef, &mut rng)?;
            Ok((HighRes::Gray(img), Some(detail)))
        }
        PerturbSpec::Fracture { .. } => {
            let (img, detail) = fracture(products, spec, &mut rng)?;
            Ok((HighRes::Binary(img), Some(detail)))
        }
    }
}

/// Full pipeline for one image: upscale, binarise, analyse, perturb, downscale.
///
/// A perturbation that cannot be applied falls back to the plain pipeline
/// image and the failure is recorded in the outcome. Errors are returned only
/// when the pipeline itself fails (for instance on a blank image).
pub fn perturb_image(
    image: &GrayImage,
    spec: &PerturbSpec,
    factor: usize,
    seed: u64,
) -> Result<(GrayImage, PerturbOutcome), PerturbError> {
    let products = run_pipeline(image, factor)?;
    let (high, detail, failure) = match apply(&products, spec, seed) {
        Ok((high, detail)) => (high, detail, None),
        Err(e) => (
            HighRes::Binary(products.binary.clone()),
            None,
            Some(e.code().to_string()),
        ),
    };
    let out = downscale(&high.to_gray(), factor).map_err(MeasureError::from)?;
    let outcome = PerturbOutcome {
        spec: *spec,
        seed,
        applied: failure.is_none(),
        failure,
        detail,
    };
    Ok((out, outcome))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-image seed: `splitmix64(master ^ splitmix64(index))`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

/// Menu position and perturbation seed for image `index`.
pub fn assign(master_seed: u64, index: u64, menu_len: usize) -> (usize, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, index));
    let class = rng.random_range(0..menu_len);
    (class, rng.random())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageOutcome {
    pub index: usize,
    pub class: usize,
    #[serde(flatten)]
    pub outcome: PerturbOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    pub images: ImageDataset,
    pub labels: LabelVector,
    /// Menu position applied to each image.
    pub classes: LabelVector,
    pub outcomes: Vec<ImageOutcome>,
}

/// Perturbs every image with a menu entry chosen uniformly at random.
///
/// Choices and seeds depend only on `(master_seed, index)`, so the result is
/// the same for any worker count. Images the pipeline cannot process (blank
/// images) are passed through unchanged with the failure recorded.
pub fn build_mixed_dataset(
    dataset: &ImageDataset,
    labels: &LabelVector,
    menu: &[PerturbSpec],
    master_seed: u64,
    factor: usize,
    workers: usize,
) -> Result<MixedDataset, PerturbError> {
    if menu.is_empty() || menu.len() > 256 {
        return Err(PerturbError::InvalidParameter(format!(
            "menu must hold 1 to 256 entries, got {}",
            menu.len()
        )));
    }
    for spec in menu {
        spec.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PerturbError::InvalidParameter(e.to_string()))?;
    let results: Vec<(ByteImage, ImageOutcome)> = pool.install(|| {
        dataset
            .images
            .par_iter()
            .enumerate()
            .map(|(index, img)| {
                let (class, seed) = assign(master_seed, index as u64, menu.len());
                let spec = menu[class];
                let (out, outcome) = match perturb_image(&img.to_gray(), &spec, factor, seed) {
                    Ok((out, outcome)) => (ByteImage::from_gray(&out), outcome),
                    Err(e) => (
                        img.clone(),
                        PerturbOutcome {
                            spec,
                            seed,
                            applied: false,
                            failure: Some(e.code().to_string()),
                            detail: None,
                        },
                    ),
                };
                (
                    out,
                    ImageOutcome {
                        index,
                        class,
                        outcome,
                    },
                )
            })
            .collect()
    });
    let (images, outcomes): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let classes = outcomes.iter().map(|o| o.class as u8).collect();
    Ok(MixedDataset {
        images: ImageDataset::new(dataset.height, dataset.width, images),
        labels: labels.clone(),
        classes: LabelVector::new(classes),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{count_components, Connectivity};
    use crate::synth::{render_strokes, Stroke};

    fn vertical_bar(thickness: f64) -> GrayImage {
        render_strokes(28, 28, &[Stroke::line((3.0, 13.5), (24.0, 13.5), thickness)])
    }

    #[test]
    fn identity_returns_plain_pipeline() {
        let img = vertical_bar(3.0);
        let (out, outcome) = perturb_image(&img, &PerturbSpec::Identity, 4, 0).unwrap();
        let products = run_pipeline(&img, 4).unwrap();
        assert_eq!(out, downscale(&products.binary.to_gray(), 4).unwrap());
        assert!(outcome.applied);
        assert_eq!(outcome.detail, None);
    }

    #[test]
    fn thin_and_thicken_bracket() {
        let products = run_pipeline(&vertical_bar(4.0), 4).unwrap();
        let before = products.thickness_hi().unwrap();
        let (t, _) = thin(&products, 0.7).unwrap();
        let (k, _) = thicken(&products, 1.0).unwrap();
        let after_thin = PipelineProducts::from_binary(t, 4).unwrap().thickness_hi().unwrap();
        let after_thick = PipelineProducts::from_binary(k, 4).unwrap().thickness_hi().unwrap();
        assert!(after_thin < before && before < after_thick);
    }

    #[test]
    fn one_pixel_stroke_thins_to_nothing() {
        let mut binary = BinaryImage::empty(20, 20);
        for c in 2..18 {
            binary.set(10, c, true);
        }
        let products = PipelineProducts::from_binary(binary, 1).unwrap();
        assert_eq!(thin(&products, 1.5), Err(PerturbError::EmptyResult));
    }

    #[test]
    fn single_fracture_splits_bar() {
        let products = run_pipeline(&vertical_bar(3.0), 4).unwrap();
        let spec = PerturbSpec::Fracture {
            count: 1,
            thickness: 1.5,
            min_distance: 2.0,
            window: 5.0,
            extension: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (out, detail) = fracture(&products, &spec, &mut rng).unwrap();
        assert_eq!(count_components(&out, Connectivity::Eight), 2);
        let OutcomeDetail::Fracture { sites, .. } = detail else {
            panic!("wrong detail");
        };
        // bar runs along rows, so the cut runs along columns
        assert!(sites[0].angle.sin().abs() < 0.5);
    }

    #[test]
    fn failed_perturbation_falls_back() {
        let mut binary = BinaryImage::empty(12, 12);
        binary.set(5, 5, true);
        binary.set(5, 6, true);
        let products = PipelineProducts::from_binary(binary, 1).unwrap();
        let spec = PerturbSpec::fracture();
        assert_eq!(apply(&products, &spec, 1), Err(PerturbError::NoCandidateSites));
    }

    #[test]
    fn swell_gamma_one_is_identity() {
        let products = run_pipeline(&vertical_bar(3.0), 4).unwrap();
        let gray = products.binary.to_gray();
        assert_eq!(swell_at(&gray, (50, 55), 9.0, 1.0), gray);
    }

    #[test]
    fn seeds_differ_by_index_and_master() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn spec_validation() {
        assert!(PerturbSpec::swell().validate().is_ok());
        assert!(PerturbSpec::Swell {
            strength: 1.0,
            radius_coef: 1.5
        }
        .validate()
        .is_err());
        assert!(PerturbSpec::Thin { strength: 0.0 }.validate().is_err());
        let json = serde_json::to_string(&PerturbSpec::thin()).unwrap();
        assert_eq!(json, r#"{"kind":"thin","strength":0.7}"#);
    }
}

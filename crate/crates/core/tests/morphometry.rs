mod common;

use morpho::morphometry::*;
use morpho::raster::*;
use morpho::synth::{self, random_glyph, render_strokes, sheared_bar, Stroke};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(seed: u64, n: usize) -> Vec<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_glyph(&mut rng)).collect()
}

/// Moments by the textbook two-pass definition, indices (i = column, j = row).
fn brute_slant(img: &GrayImage) -> f64 {
    let (h, w) = img.dims();
    let px: Vec<(f64, f64, f64)> = (0..h)
        .flat_map(|j| (0..w).map(move |i| (i as f64, j as f64)))
        .map(|(i, j)| (i, j, img.get(j as usize, i as usize)))
        .collect();
    let m: f64 = px.iter().map(|p| p.2).sum();
    let ib = px.iter().map(|p| p.0 * p.2).sum::<f64>() / m;
    let jb = px.iter().map(|p| p.1 * p.2).sum::<f64>() / m;
    let s12: f64 = px.iter().map(|p| (p.0 - ib) * (p.1 - jb) * p.2).sum();
    let s22: f64 = px.iter().map(|p| (p.1 - jb).powi(2) * p.2).sum();
    (-s12 / s22).atan()
}

/// Equal-tailed interval length of point masses `(position, weight)` swept
/// by a boundary. The CDF is enumerated exactly at every half-integer edge
/// (mass strictly left of the edge) and interpolated linearly in between;
/// quantiles are found by bisection.
fn interval_oracle(points: &[(f64, f64)], mass: f64) -> f64 {
    let total: f64 = points.iter().map(|p| p.1).sum();
    let swept = |edge: f64| points.iter().filter(|p| p.0 < edge).map(|p| p.1).sum::<f64>() / total;
    let cdf = |t: f64| -> f64 {
        let edge = (t - 0.5).floor() + 0.5;
        let frac = t - edge;
        (1.0 - frac) * swept(edge) + frac * swept(edge + 1.0)
    };
    let lo_x = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - 2.0;
    let hi_x = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + 2.0;
    let quantile = |q: f64, lower: bool| {
        let (mut a, mut b) = (lo_x, hi_x);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let below = if lower { cdf(mid) <= q + 1e-12 } else { cdf(mid) < q - 1e-12 };
            if below {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let tail = (1.0 - mass) / 2.0;
    quantile(1.0 - tail, false) - quantile(tail, true)
}

fn parallelogram_oracle(img: &GrayImage, alpha: f64, mass: f64) -> (f64, f64) {
    let (h, w) = img.dims();
    let total = img.sum();
    let jb = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .map(|(r, c)| r as f64 * img.get(r, c))
        .sum::<f64>()
        / total;
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let x = img.get(r, c);
            if x > 0.0 {
                rows.push((r as f64, x));
                cols.push((c as f64 + (r as f64 - jb) * alpha.tan(), x));
            }
        }
    }
    (interval_oracle(&cols, mass), interval_oracle(&rows, mass))
}

#[test]
fn run_length_oracles() {
    // pairs counted by brute force over all pixel pairs
    let oracle = |mask: &BinaryImage| -> f64 {
        let px: Vec<(i64, i64)> = (0..mask.height())
            .flat_map(|r| (0..mask.width()).map(move |c| (r, c)))
            .filter(|&(r, c)| mask.get(r, c))
            .map(|(r, c)| (r as i64, c as i64))
            .collect();
        let mut total = 0.0;
        for (a, p) in px.iter().enumerate() {
            for q in &px[a + 1..] {
                let (dr, dc) = ((p.0 - q.0).abs(), (p.1 - q.1).abs());
                if dr.max(dc) == 1 {
                    total += ((dr * dr + dc * dc) as f64).sqrt();
                }
            }
        }
        total
    };
    for mask in [
        BinaryImage::from_fn(5, 50, |r, c| r == 2 && (3..44).contains(&c)),
        BinaryImage::from_fn(30, 30, |r, c| r == c && (2..25).contains(&r)),
    ] {
        let products = PipelineProducts::from_binary(mask.clone(), 4).unwrap();
        assert_eq!(products.skeleton.len(), mask.count_foreground());
        let got = stroke_length(&products).unwrap();
        assert!((got - oracle(&mask) / 4.0).abs() < 1e-12, "{got}");
    }
}

#[test]
fn thickness_of_high_res_bar_and_disc() {
    let bar = BinaryImage::from_fn(40, 120, |r, c| (16..24).contains(&r) && (10..110).contains(&c));
    let t = stroke_thickness(&PipelineProducts::from_binary(bar, 4).unwrap()).unwrap();
    assert!((t - 2.0).abs() <= 0.25, "bar thickness {t}");

    let disc = BinaryImage::from_fn(40, 40, |r, c| (r as f64 - 19.5).powi(2) + (c as f64 - 19.5).powi(2) <= 144.0);
    let t = stroke_thickness(&PipelineProducts::from_binary(disc, 4).unwrap()).unwrap();
    assert!((t - 6.0).abs() <= 0.5, "disc thickness {t}");
}

#[test]
fn single_pixel_and_empty_skeletons() {
    let mut one = BinaryImage::empty(4, 4);
    one.set(1, 1, true);
    let products = PipelineProducts::from_binary(one, 4).unwrap();
    assert_eq!(products.skeleton.len(), 1);
    assert_eq!(stroke_length(&products).unwrap(), 0.0);
    assert!(matches!(
        PipelineProducts::from_binary(BinaryImage::empty(4, 4), 4),
        Err(MeasureError::Raster(RasterError::EmptyForeground))
    ));
}

#[test]
fn slant_of_sheared_bar_matches_moment_oracle() {
    let img = sheared_bar(28, 28, 3.0, 18.0, 0.3);
    let got = slant(&img).unwrap();
    assert!((got - brute_slant(&img)).abs() < 1e-12);
    assert!((got - 0.3f64.atan()).abs() <= 0.02, "slant {got}");
    for img in corpus(3, 20) {
        assert!((slant(&img).unwrap() - brute_slant(&img)).abs() < 1e-12);
    }
}

#[test]
fn mirror_antisymmetry() {
    for img in corpus(4, 30) {
        let a = slant(&img).unwrap();
        let mirrored = img.mirror_horizontal();
        let b = slant(&mirrored).unwrap();
        assert!((a + b).abs() < 1e-12, "{a} vs {b}");
        let (w0, h0) = bounding_parallelogram(&img, a, DEFAULT_MASS).unwrap();
        let (w1, h1) = bounding_parallelogram(&mirrored, b, DEFAULT_MASS).unwrap();
        assert!((w0 - w1).abs() < 1e-9 && (h0 - h1).abs() < 1e-9);
    }
}

#[test]
fn slant_is_intensity_scale_invariant() {
    for img in corpus(5, 20) {
        let a = slant(&img).unwrap();
        for c in [0.25, 3.0, 1e3] {
            let b = slant(&img.map(|x| x * c)).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn parallelogram_examples() {
    let bar = synth::solid_box(28, 28, 4, 12, 20, 4);
    assert_eq!(bounding_parallelogram(&bar, 0.0, 1.0).unwrap(), (4.0, 20.0));
    let (w, h) = bounding_parallelogram(&bar, 0.0, 0.98).unwrap();
    let (ow, oh) = parallelogram_oracle(&bar, 0.0, 0.98);
    assert!((w - ow).abs() < 1e-9 && (h - oh).abs() < 1e-9);
    assert!((3.0..4.0).contains(&w) && (19.0..20.0).contains(&h));
}

#[test]
fn parallelogram_matches_cdf_oracle() {
    for img in corpus(6, 15) {
        let alpha = slant(&img).unwrap();
        for mass in [1.0, 0.98, 0.9] {
            let (w, h) = bounding_parallelogram(&img, alpha, mass).unwrap();
            let (ow, oh) = parallelogram_oracle(&img, alpha, mass);
            assert!((w - ow).abs() < 1e-6, "width {w} vs {ow}");
            assert!((h - oh).abs() < 1e-6, "height {h} vs {oh}");
        }
    }
}

#[test]
fn slant_compensated_width() {
    // Thicknesses whose upright edges fall inside pixels, so that the upright
    // and sheared rasters are both anti-aliased. An even thickness on this
    // canvas puts the upright edges on pixel boundaries and the upright
    // reference comes out about a pixel narrower than any sheared copy.
    for thickness in [2.5, 3.0, 3.5, 5.0] {
        let upright = sheared_bar(28, 28, thickness, 18.0, 0.0);
        let (w0, _) = bounding_parallelogram(&upright, 0.0, DEFAULT_MASS).unwrap();
        for deg in [-30.0f64, 15.0, 30.0] {
            let img = sheared_bar(28, 28, thickness, 18.0, deg.to_radians().tan());
            let alpha = slant(&img).unwrap();
            let (w, _) = bounding_parallelogram(&img, alpha, DEFAULT_MASS).unwrap();
            let (ow, _) = parallelogram_oracle(&img, alpha, DEFAULT_MASS);
            assert!((w - ow).abs() < 1e-6);
            assert!((w - w0).abs() <= 0.5, "{thickness} at {deg}: {w} vs {w0}");
            let (naive, _) = bounding_parallelogram(&img, 0.0, DEFAULT_MASS).unwrap();
            assert!(naive > w0 + 2.0, "an upright sweep should be confounded");
        }
    }
}

#[test]
fn padding_changes_nothing() {
    for img in corpus(7, 20) {
        let a = measure(&img, 4).unwrap();
        let b = measure(&img.padded(6, 0.0), 4).unwrap();
        for attr in Attribute::ALL {
            assert!((a.get(attr) - b.get(attr)).abs() <= 0.1, "{attr}: {} vs {}", a.get(attr), b.get(attr));
        }
    }
}

#[test]
fn thickness_is_monotone_under_morphology() {
    for img in corpus(8, 20) {
        let p = run_pipeline(&img, 4).unwrap();
        let t = stroke_thickness(&p).unwrap();
        let thick = PipelineProducts::from_binary(dilate_disc(&p.binary, 3.0), 4).unwrap();
        assert!(stroke_thickness(&thick).unwrap() >= t);
        let eroded = erode_disc(&p.binary, 2.0);
        if eroded.count_foreground() > 0 {
            let thin = PipelineProducts::from_binary(eroded, 4).unwrap();
            assert!(stroke_thickness(&thin).unwrap() <= t);
        }
    }
}

#[test]
fn synthetic_suite_records() {
    // (glyph, length, thickness, slant in degrees), nominal values from construction
    let cases = [
        (render_strokes(40, 40, &[Stroke::line((8.0, 20.0), (32.0, 20.0), 3.0)]), 24.0, 3.0, 0.0),
        (render_strokes(40, 40, &[Stroke::line((10.0, 20.0), (30.0, 20.0), 5.0)]), 20.0, 5.0, 0.0),
        (sheared_bar(28, 28, 3.0, 18.0, 0.5f64.tan()), f64::NAN, 3.0, 0.5f64.to_degrees()),
    ];
    for (img, length, thickness, slant_deg) in cases {
        let r = measure(&img, 4).unwrap();
        if length.is_finite() {
            assert!((r.length - length).abs() <= 1.5, "length {}", r.length);
        }
        assert!((r.thickness - thickness).abs() <= 0.5, "thickness {}", r.thickness);
        assert!((r.slant.to_degrees() - slant_deg).abs() <= 2.0, "slant {}", r.slant);
    }
}

#[test]
fn pipeline_errors() {
    assert!(matches!(
        run_pipeline(&GrayImage::filled(28, 28, 0.0), 4),
        Err(MeasureError::Raster(RasterError::FlatImage))
    ));
    let err = measure(&GrayImage::filled(28, 28, 0.0), 4).unwrap_err();
    assert_eq!(err.code(), "slant:zero_mass");
    assert_eq!(run_pipeline(&synth::disc(28, 28, (14.0, 14.0), 5.0), 1).unwrap().binary.dims(), (28, 28));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn records_satisfy_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = random_glyph(&mut rng);
        let r = measure(&img, 4).unwrap();
        prop_assert!(r.length >= 0.0 && r.thickness >= 0.0 && r.width >= 0.0 && r.height >= 0.0);
        prop_assert!(r.slant.abs() < std::f64::consts::FRAC_PI_2);
        prop_assert_eq!(r, measure(&img, 4).unwrap());
    }
}

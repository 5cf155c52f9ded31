//! Synthetic glyph rasters: bars, discs, sheared bars and random pen strokes.
//!
//! Shapes are rendered with a one-pixel linear coverage ramp, so edges are
//! anti-aliased the way scanned handwriting is.

use rand::Rng;

use crate::raster::{BinaryImage, GrayImage};

/// A polyline pen stroke in `(row, col)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Stroke {
    pub points: Vec<(f64, f64)>,
    pub thickness: f64,
}

impl Stroke {
    pub fn line(from: (f64, f64), to: (f64, f64), thickness: f64) -> Self {
        Self {
            points: vec![from, to],
            thickness,
        }
    }

    /// Quadratic Bézier flattened into `segments` pieces.
    pub fn quadratic(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64), thickness: f64) -> Self {
        let segments = 24;
        let points = (0..=segments)
            .map(|k| {
                let t = k as f64 / segments as f64;
                let (a, b, c) = ((1.0 - t) * (1.0 - t), 2.0 * t * (1.0 - t), t * t);
                (
                    a * p0.0 + b * p1.0 + c * p2.0,
                    a * p0.1 + b * p1.1 + c * p2.1,
                )
            })
            .collect();
        Self { points, thickness }
    }

    fn distance(&self, p: (f64, f64)) -> f64 {
        if self.points.len() == 1 {
            return dist(p, self.points[0]);
        }
        self.points
            .windows(2)
            .map(|seg| segment_distance(p, seg[0], seg[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub(crate) fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dr, dc) = (b.0 - a.0, b.1 - a.1);
    let len2 = dr * dr + dc * dc;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p.0 - a.0) * dr + (p.1 - a.1) * dc) / len2).clamp(0.0, 1.0);
    dist(p, (a.0 + t * dr, a.1 + t * dc))
}

fn coverage(signed_inside: f64) -> f64 {
    (signed_inside + 0.5).clamp(0.0, 1.0)
}

pub fn render_strokes(height: usize, width: usize, strokes: &[Stroke]) -> GrayImage {
    GrayImage::from_fn(height, width, |r, c| {
        let p = (r as f64, c as f64);
        let cover = strokes
            .iter()
            .map(|s| coverage(s.thickness / 2.0 - s.distance(p)))
            .fold(0.0, f64::max);
        (255.0 * cover).round()
    })
}

/// Solid axis-aligned rectangle of full intensity.
pub fn solid_box(height: usize, width: usize, top: usize, left: usize, rows: usize, cols: usize) -> GrayImage {
    GrayImage::from_fn(height, width, |r, c| {
        if (top..top + rows).contains(&r) && (left..left + cols).contains(&c) {
            255.0
        } else {
            0.0
        }
    })
}

pub fn disc(height: usize, width: usize, center: (f64, f64), radius: f64) -> GrayImage {
    GrayImage::from_fn(height, width, |r, c| {
        (255.0 * coverage(radius - dist((r as f64, c as f64), center))).round()
    })
}

/// Upright bar of the given thickness and length centred in the image, with
/// every row shifted right by `slope` per row above the centre (forward slant).
pub fn sheared_bar(height: usize, width: usize, thickness: f64, length: f64, slope: f64) -> GrayImage {
    let (cr, cc) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    GrayImage::from_fn(height, width, |r, c| {
        let (r, c) = (r as f64, c as f64);
        let axis = cc + slope * (cr - r);
        let across = thickness / 2.0 - (c - axis).abs();
        let along = length / 2.0 - (r - cr).abs();
        (255.0 * coverage(across).min(coverage(along))).round()
    })
}

/// Straight bar through the image centre at `angle` radians from the
/// horizontal (counter-clockwise, rows growing downwards).
pub fn rotated_bar(size: usize, thickness: f64, length: f64, angle: f64) -> GrayImage {
    let c = (size as f64 - 1.0) / 2.0;
    let (dr, dc) = (-angle.sin() * length / 2.0, angle.cos() * length / 2.0);
    render_strokes(size, size, &[Stroke::line((c - dr, c - dc), (c + dr, c + dc), thickness)])
}

/// Random MNIST-like glyph on a 28x28 canvas: one to three curved strokes of
/// a common pen thickness inside the central 20x20 box.
pub fn random_glyph(rng: &mut impl Rng) -> GrayImage {
    let thickness = rng.random_range(1.8..4.2);
    let n_strokes = rng.random_range(1..=3);
    let mut strokes = Vec::with_capacity(n_strokes);
    let mut start = random_point(rng);
    for _ in 0..n_strokes {
        let ctrl = random_point(rng);
        let mut end = random_point(rng);
        while dist(start, end) < 8.0 {
            end = random_point(rng);
        }
        strokes.push(Stroke::quadratic(start, ctrl, end, thickness));
        // strokes chain like a continuous pen trace
        start = end;
    }
    render_strokes(28, 28, &strokes)
}

fn random_point(rng: &mut impl Rng) -> (f64, f64) {
    (rng.random_range(6.0..22.0), rng.random_range(6.0..22.0))
}

/// Random connected binary blob: a chain of overlapping discs.
pub fn random_blob(rng: &mut impl Rng, size: usize) -> BinaryImage {
    let n = rng.random_range(1..=6);
    let margin = 3.0;
    let hi = size as f64 - margin;
    let mut centres = vec![(rng.random_range(margin..hi), rng.random_range(margin..hi))];
    let mut radii = vec![rng.random_range(1.0..4.0)];
    for _ in 1..n {
        let (pr, pc) = *centres.last().unwrap();
        let radius: f64 = rng.random_range(1.0..4.0);
        let step = radius.min(*radii.last().unwrap());
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let next = (
            (pr + step * angle.sin()).clamp(margin, hi),
            (pc + step * angle.cos()).clamp(margin, hi),
        );
        centres.push(next);
        radii.push(radius);
    }
    BinaryImage::from_fn(size, size, |r, c| {
        centres
            .iter()
            .zip(&radii)
            .any(|(&ctr, &rad)| dist((r as f64, c as f64), ctr) <= rad)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{count_components, Connectivity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn blobs_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let blob = random_blob(&mut rng, 24);
            assert_eq!(count_components(&blob, Connectivity::Eight), 1);
        }
    }

    #[test]
    fn glyphs_have_ink() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = random_glyph(&mut rng);
            assert_eq!(g.min_max(), (0.0, 255.0));
        }
    }
}

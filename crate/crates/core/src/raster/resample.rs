use super::{BinaryImage, GrayImage, RasterError};

const KEYS_A: f64 = -0.5;

/// Keys cubic convolution kernel with `a = -0.5`.
pub fn keys_weight(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((KEYS_A + 2.0) * x - (KEYS_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((KEYS_A * x - 5.0 * KEYS_A) * x + 8.0 * KEYS_A) * x - 4.0 * KEYS_A
    } else {
        0.0
    }
}

/// Four clamped taps and their weights for sampling at `pos` on an axis of length `len`.
fn cubic_taps(pos: f64, len: usize) -> [(usize, f64); 4] {
    let base = pos.floor();
    let last = len as isize - 1;
    let mut taps = [(0usize, 0.0f64); 4];
    for (k, tap) in taps.iter_mut().enumerate() {
        let idx = base as isize - 1 + k as isize;
        let weight = keys_weight(pos - idx as f64);
        *tap = (idx.clamp(0, last) as usize, weight);
    }
    taps
}

/// Bicubic interpolation at a real-valued `(row, col)`; out-of-grid taps clamp to the border.
pub fn bicubic_sample(image: &GrayImage, row: f64, col: f64) -> f64 {
    let rows = cubic_taps(row, image.height());
    let cols = cubic_taps(col, image.width());
    let mut acc = 0.0;
    for &(r, wr) in &rows {
        let mut line = 0.0;
        for &(c, wc) in &cols {
            line += wc * image.get(r, c);
        }
        acc += wr * line;
    }
    acc
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);
    kernel
}

/// Convolves `src` (length `len`, element stride `stride`) with `kernel`,
/// replicating the end values.
fn convolve_line(src: &[f64], len: usize, stride: usize, kernel: &[f64], padded: &mut Vec<f64>, out: &mut [f64]) {
    let radius = kernel.len() / 2;
    padded.clear();
    padded.extend(std::iter::repeat_n(src[0], radius));
    padded.extend((0..len).map(|i| src[i * stride]));
    padded.extend(std::iter::repeat_n(src[(len - 1) * stride], radius));
    for (i, o) in out.iter_mut().enumerate().take(len) {
        *o = padded[i..i + kernel.len()]
            .iter()
            .zip(kernel)
            .map(|(v, k)| k * v)
            .sum();
    }
}

/// Separable Gaussian blur truncated at 4σ, borders replicated.
pub fn gaussian_smooth(image: &GrayImage, sigma: f64) -> GrayImage {
    let (h, w) = image.dims();
    if sigma <= 0.0 || h == 0 || w == 0 {
        return image.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let mut padded = Vec::with_capacity(h.max(w) + kernel.len());
    let mut horizontal = vec![0.0; h * w];
    for r in 0..h {
        let src = &image.pixels()[r * w..(r + 1) * w];
        convolve_line(src, w, 1, &kernel, &mut padded, &mut horizontal[r * w..(r + 1) * w]);
    }
    let mut out = vec![0.0; h * w];
    let mut column = vec![0.0; h];
    for c in 0..w {
        convolve_line(&horizontal[c..], h, w, &kernel, &mut padded, &mut column);
        for (r, v) in column.iter().enumerate() {
            out[r * w + c] = *v;
        }
    }
    GrayImage::new(h, w, out)
}

/// Pixel-centre aligned bicubic resize.
fn resize(image: &GrayImage, out_h: usize, out_w: usize) -> GrayImage {
    let (h, w) = image.dims();
    let axis_taps = |out: usize, input: usize| -> Vec<[(usize, f64); 4]> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|o| cubic_taps((o as f64 + 0.5) * scale - 0.5, input))
            .collect()
    };
    let col_taps = axis_taps(out_w, w);
    let row_taps = axis_taps(out_h, h);
    let src = image.pixels();
    let mut horizontal = vec![0.0; h * out_w];
    for r in 0..h {
        let line = &src[r * w..(r + 1) * w];
        for (o, taps) in horizontal[r * out_w..(r + 1) * out_w].iter_mut().zip(&col_taps) {
            *o = taps.iter().map(|&(i, wt)| wt * line[i]).sum();
        }
    }
    let mut out = vec![0.0; out_h * out_w];
    for (r, taps) in row_taps.iter().enumerate() {
        let dst = &mut out[r * out_w..(r + 1) * out_w];
        for (k, &(i, wt)) in taps.iter().enumerate() {
            let line = &horizontal[i * out_w..(i + 1) * out_w];
            if k == 0 {
                dst.iter_mut().zip(line).for_each(|(d, v)| *d = wt * v);
            } else {
                dst.iter_mut().zip(line).for_each(|(d, v)| *d += wt * v);
            }
        }
    }
    GrayImage::new(out_h, out_w, out)
}

fn smoothing_sigma(factor: usize) -> f64 {
    2.0 * factor as f64 / 6.0
}

/// Enlarges by an integer factor: bicubic resampling onto the fine grid, then
/// Gaussian smoothing with σ = 2f/6 (fine-grid pixels). `f = 1` is the identity.
pub fn upscale(image: &GrayImage, factor: usize) -> Result<GrayImage, RasterError> {
    match factor {
        0 => Err(RasterError::InvalidFactor),
        1 => Ok(image.clone()),
        f => {
            let resized = resize(image, image.height() * f, image.width() * f);
            Ok(gaussian_smooth(&resized, smoothing_sigma(f)))
        }
    }
}

/// Shrinks by an integer factor: Gaussian smoothing with σ = 2f/6, bicubic
/// resampling, then rounding to 8-bit levels.
pub fn downscale(image: &GrayImage, factor: usize) -> Result<GrayImage, RasterError> {
    let (h, w) = image.dims();
    if factor == 0 {
        return Err(RasterError::InvalidFactor);
    }
    if h % factor != 0 || w % factor != 0 {
        return Err(RasterError::NonDivisibleDimensions {
            height: h,
            width: w,
            factor,
        });
    }
    let sampled = if factor == 1 {
        image.clone()
    } else {
        let smoothed = gaussian_smooth(image, smoothing_sigma(factor));
        resize(&smoothed, h / factor, w / factor)
    };
    Ok(sampled.map(|v| v.round().clamp(0.0, 255.0)))
}

pub fn downscale_binary(image: &BinaryImage, factor: usize) -> Result<GrayImage, RasterError> {
    downscale(&image.to_gray(), factor)
}

/// Thresholds at half the image's own intensity range: `v >= min + (max - min) / 2`.
pub fn binarize(image: &GrayImage) -> Result<BinaryImage, RasterError> {
    let (lo, hi) = image.min_max();
    if !(hi > lo) {
        return Err(RasterError::FlatImage);
    }
    let threshold = lo + (hi - lo) / 2.0;
    Ok(BinaryImage::new(
        image.height(),
        image.width(),
        image.pixels().iter().map(|&v| v >= threshold).collect(),
    ))
}

/// Backward warp: output pixel `(r, c)` takes the bicubic sample of `image`
/// at `mapping(r, c)`. Grid-point samples are reproduced exactly.
pub fn warp_backward(
    image: &GrayImage,
    mapping: impl Fn(usize, usize) -> (f64, f64),
) -> GrayImage {
    GrayImage::from_fn(image.height(), image.width(), |r, c| {
        let (sr, sc) = mapping(r, c);
        bicubic_sample(image, sr, sc)
    })
}

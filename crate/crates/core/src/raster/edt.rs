use super::{BinaryImage, RasterError};

/// Per-pixel Euclidean distance (pixel centres) from foreground to the
/// nearest background pixel; zero on background.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DistanceMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Exact Euclidean distance transform.
///
/// Separable two-pass scheme on integer squared distances: a 1-D scan per row
/// gives the horizontal distance to the nearest background pixel, then each
/// column takes the lower envelope of the parabolas `(r - i)^2 + g(i)^2`.
/// Integer arithmetic throughout, so results are exact.
pub fn edt(image: &BinaryImage) -> Result<DistanceMap, RasterError> {
    let (h, w) = image.dims();
    if image.pixels().iter().all(|&p| p) {
        if h * w == 0 {
            return Ok(DistanceMap {
                height: h,
                width: w,
                values: Vec::new(),
            });
        }
        return Err(RasterError::NoBackground);
    }
    let inf = (h + w) as i64;

    // row pass
    let mut g = vec![0i64; h * w];
    for r in 0..h {
        let row = &image.pixels()[r * w..(r + 1) * w];
        let out = &mut g[r * w..(r + 1) * w];
        let mut last = None::<usize>;
        for c in 0..w {
            if !row[c] {
                last = Some(c);
                out[c] = 0;
            } else {
                out[c] = last.map_or(inf, |l| (c - l) as i64);
            }
        }
        last = None;
        for c in (0..w).rev() {
            if !row[c] {
                last = Some(c);
            } else if let Some(l) = last {
                out[c] = out[c].min((l - c) as i64);
            }
        }
    }

    // column pass: lower envelope of parabolas
    let mut squared = vec![0i64; h * w];
    let mut s = vec![0usize; h];
    let mut t = vec![0i64; h];
    for c in 0..w {
        let gc = |i: usize| g[i * w + c];
        let f = |x: i64, i: usize| (x - i as i64).pow(2) + gc(i).pow(2);
        let sep = |i: usize, u: usize| {
            let (i64_i, i64_u) = (i as i64, u as i64);
            (i64_u * i64_u - i64_i * i64_i + gc(u).pow(2) - gc(i).pow(2))
                .div_euclid(2 * (i64_u - i64_i))
        };
        let mut q = 0usize;
        s[0] = 0;
        t[0] = 0;
        for u in 1..h {
            while f(t[q], s[q]) > f(t[q], u) {
                if q == 0 {
                    break;
                }
                q -= 1;
            }
            if f(t[q], s[q]) > f(t[q], u) {
                // q == 0 and u dominates everywhere from t[0]
                s[0] = u;
            } else {
                let wpos = 1 + sep(s[q], u);
                if wpos < h as i64 {
                    q += 1;
                    s[q] = u;
                    t[q] = wpos;
                }
            }
        }
        for r in (0..h).rev() {
            squared[r * w + c] = f(r as i64, s[q]);
            if q > 0 && r as i64 == t[q] {
                q -= 1;
            }
        }
    }

    let values = squared
        .iter()
        .zip(image.pixels())
        .map(|(&d2, &fg)| if fg { (d2 as f64).sqrt() } else { 0.0 })
        .collect();
    Ok(DistanceMap {
        height: h,
        width: w,
        values,
    })
}

use super::BinaryImage;

/// Lattice displacements `(di, dj)` with `di^2 + dj^2 <= r^2`.
pub fn disc_offsets(radius: f64) -> Vec<(isize, isize)> {
    let r2 = radius.max(0.0) * radius.max(0.0);
    let reach = radius.max(0.0).floor() as isize;
    let mut out = Vec::new();
    for di in -reach..=reach {
        for dj in -reach..=reach {
            if ((di * di + dj * dj) as f64) <= r2 {
                out.push((di, dj));
            }
        }
    }
    out
}

/// Half-width of the disc's horizontal run at each row offset `-reach..=reach`.
fn row_half_widths(radius: f64) -> Vec<(isize, usize)> {
    let offsets = disc_offsets(radius);
    let reach = offsets.iter().map(|o| o.0).max().unwrap_or(0);
    (-reach..=reach)
        .map(|di| {
            let half = offsets
                .iter()
                .filter(|o| o.0 == di)
                .map(|o| o.1)
                .max()
                .unwrap_or(0);
            (di, half as usize)
        })
        .collect()
}

fn row_prefix_counts(image: &BinaryImage) -> Vec<u32> {
    let (h, w) = image.dims();
    let mut prefix = vec![0u32; h * (w + 1)];
    for r in 0..h {
        let base = r * (w + 1);
        for c in 0..w {
            prefix[base + c + 1] = prefix[base + c] + u32::from(image.get(r, c));
        }
    }
    prefix
}

#[derive(Clone, Copy)]
enum Op {
    Dilate,
    Erode,
}

/// Scans the disc's horizontal runs around each pixel, clipped to the image.
/// Dilation keeps a pixel when any run holds foreground, erosion when every
/// run is entirely foreground.
fn disc_scan(image: &BinaryImage, radius: f64, op: Op) -> BinaryImage {
    let (h, w) = image.dims();
    let prefix = row_prefix_counts(image);
    let rows = row_half_widths(radius);
    BinaryImage::from_fn(h, w, |r, c| {
        let mut runs = rows.iter().filter_map(|&(di, half)| {
            let rr = r as isize + di;
            if rr < 0 || rr >= h as isize {
                return None;
            }
            let lo = c.saturating_sub(half);
            let hi = (c + half).min(w - 1);
            let base = rr as usize * (w + 1);
            Some((prefix[base + hi + 1] - prefix[base + lo], (hi - lo + 1) as u32))
        });
        match op {
            Op::Dilate => runs.any(|(count, _)| count > 0),
            Op::Erode => runs.all(|(count, span)| count == span),
        }
    })
}

/// Minkowski dilation by the discrete disc of radius `r`.
pub fn dilate_disc(image: &BinaryImage, radius: f64) -> BinaryImage {
    if radius < 1.0 {
        return image.clone();
    }
    disc_scan(image, radius, Op::Dilate)
}

/// Minkowski erosion by the discrete disc of radius `r`; pixels outside the
/// image are treated as foreground, making it the exact dual of [`dilate_disc`].
pub fn erode_disc(image: &BinaryImage, radius: f64) -> BinaryImage {
    if radius < 1.0 {
        return image.clone();
    }
    disc_scan(image, radius, Op::Erode)
}

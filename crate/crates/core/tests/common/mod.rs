#![allow(dead_code)]

use morpho::raster::BinaryImage;
use morpho::stats::{dummy_expand, AttributeTable, CodeKind, CodeTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Brute-force EDT: minimum over every background pixel.
pub fn brute_edt(image: &BinaryImage) -> Vec<f64> {
    let (h, w) = image.dims();
    let bg: Vec<(i64, i64)> = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| !image.get(r, c))
        .map(|(r, c)| (r as i64, c as i64))
        .collect();
    (0..h * w)
        .map(|k| {
            let (r, c) = ((k / w) as i64, (k % w) as i64);
            if !image.get(r as usize, c as usize) {
                return 0.0;
            }
            let d2 = bg
                .iter()
                .map(|&(br, bc)| (br - r).pow(2) + (bc - c).pow(2))
                .min()
                .expect("image has background");
            (d2 as f64).sqrt()
        })
        .collect()
}

/// Union-find component count of the `true` pixels under 8-connectivity.
pub fn union_find_components(image: &BinaryImage) -> usize {
    let (h, w) = image.dims();
    let mut parent: Vec<usize> = (0..h * w).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for r in 0..h {
        for c in 0..w {
            if !image.get(r, c) {
                continue;
            }
            for (dr, dc) in [(0isize, 1isize), (1, -1), (1, 0), (1, 1)] {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                if image.get(nr as usize, nc as usize) {
                    let a = find(&mut parent, r * w + c);
                    let b = find(&mut parent, nr as usize * w + nc as usize);
                    parent[a] = b;
                }
            }
        }
    }
    (0..h * w)
        .filter(|&k| image.get(k / w, k % w) && find(&mut parent, k) == k)
        .count()
}

/// Direct Minkowski dilation over the disc's lattice points.
pub fn brute_dilate(image: &BinaryImage, radius: f64) -> BinaryImage {
    let (h, w) = image.dims();
    let reach = radius.floor() as isize;
    BinaryImage::from_fn(h, w, |r, c| {
        for di in -reach..=reach {
            for dj in -reach..=reach {
                if ((di * di + dj * dj) as f64) > radius * radius {
                    continue;
                }
                let (sr, sc) = (r as isize - di, c as isize - dj);
                if sr >= 0 && sc >= 0 && sr < h as isize && sc < w as isize && image.get(sr as usize, sc as usize) {
                    return true;
                }
            }
        }
        false
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Least-squares residuals of `y` on `xs` plus an intercept, by modified
/// Gram-Schmidt.
pub fn residuals(y: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
    let n = y.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let ones = vec![1.0; n];
    for col in std::iter::once(&ones).chain(xs) {
        let mut v = col.clone();
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(norm > 1e-9, "collinear regressors in oracle");
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    let mut r = y.to_vec();
    for q in &basis {
        let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
        r.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
    }
    r
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// A random linear system: three continuous codes, one binary, one
/// categorical(4), and attributes `y = A c + noise`.
pub fn linear_system(seed: u64, n: usize) -> (AttributeTable, CodeTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    // mild correlation between codes
    let first = cols[0].clone();
    cols[1].iter_mut().zip(&first).for_each(|(b, a)| *b += 0.4 * a);
    cols.push((0..n).map(|_| f64::from(rng.random_bool(0.3))).collect());
    cols.push((0..n).map(|_| rng.random_range(0..4) as f64).collect());
    let ys: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            (0..n)
                .map(|i| {
                    let level = cols[4][i];
                    a[0] * cols[0][i]
                        + a[1] * cols[1][i]
                        + a[2] * cols[2][i]
                        + a[3] * cols[3][i]
                        + a[4] * level * level
                        + rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        })
        .collect();
    let codes = CodeTable::new(
        (0..5).map(|i| format!("c{i}")).collect(),
        vec![
            CodeKind::Continuous,
            CodeKind::Continuous,
            CodeKind::Continuous,
            CodeKind::Binary,
            CodeKind::Categorical(4),
        ],
        cols,
    )
    .unwrap();
    (AttributeTable::new((0..3).map(|i| format!("y{i}")).collect(), ys).unwrap(), codes)
}

/// Correlation of residuals after regressing both sides on the controls:
/// every other code, categorical codes by all dummies but the last, and no
/// sibling dummies when the target is itself a dummy.
pub fn residual_oracle(y: &AttributeTable, codes: &CodeTable) -> Vec<Vec<f64>> {
    let e = dummy_expand(codes);
    let m = e.names.len();
    let reference: Vec<bool> = (0..m)
        .map(|k| e.is_dummy[k] && (k + 1 == m || e.source[k + 1] != e.source[k]))
        .collect();
    (0..y.n_cols())
        .map(|j| {
            (0..m)
                .map(|t| {
                    let controls: Vec<Vec<f64>> = (0..m)
                        .filter(|&k| k != t && !reference[k] && !(e.is_dummy[t] && e.source[k] == e.source[t]))
                        .map(|k| e.columns[k].clone())
                        .collect();
                    pearson(&residuals(y.column(j), &controls), &residuals(&e.columns[t], &controls))
                })
                .collect()
        })
        .collect()
}

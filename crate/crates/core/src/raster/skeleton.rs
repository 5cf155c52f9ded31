use std::sync::OnceLock;

use super::{BinaryImage, DistanceMap, RasterError};

/// Neighbour offsets in clockwise order starting north. Bit `k` of a
/// neighbourhood code is set when neighbour `k` is foreground.
const RING: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

/// Medial-axis pixels of a binary shape, each annotated with its EDT value.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    height: usize,
    width: usize,
    mask: BinaryImage,
    pixels: Vec<(usize, usize)>,
    distances: Vec<f64>,
}

impl Skeleton {
    fn from_mask(mask: BinaryImage, distance: &DistanceMap) -> Self {
        let (height, width) = mask.dims();
        let pixels: Vec<(usize, usize)> = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .filter(|&(r, c)| mask.get(r, c))
            .collect();
        let distances = pixels.iter().map(|&(r, c)| distance.get(r, c)).collect();
        Self {
            height,
            width,
            mask,
            pixels,
            distances,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Skeleton pixels in row-major order.
    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    /// EDT value of each pixel, aligned with [`Skeleton::pixels`].
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn mask(&self) -> &BinaryImage {
        &self.mask
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.mask.get(row, col)
    }

    pub fn neighbors(&self, row: usize, col: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        RING.iter().filter_map(move |&(dr, dc)| {
            let (r, c) = (row as isize + dr, col as isize + dc);
            self.mask
                .get_or_bg(r, c)
                .then_some((r as usize, c as usize))
        })
    }

    pub fn degree(&self, row: usize, col: usize) -> usize {
        self.neighbors(row, col).count()
    }

    /// Pixels with exactly one skeleton neighbour.
    pub fn tips(&self) -> Vec<(usize, usize)> {
        self.pixels
            .iter()
            .copied()
            .filter(|&(r, c)| self.degree(r, c) == 1)
            .collect()
    }

    /// Pixels with three or more skeleton neighbours.
    pub fn forks(&self) -> Vec<(usize, usize)> {
        self.pixels
            .iter()
            .copied()
            .filter(|&(r, c)| self.degree(r, c) >= 3)
            .collect()
    }

    /// Unordered 8-adjacent pixel pairs, each listed once.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), (usize, usize))> + '_ {
        // forward half of the ring: E, SE, S, SW
        const FORWARD: [(isize, isize); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];
        self.pixels.iter().flat_map(move |&(r, c)| {
            FORWARD.iter().filter_map(move |&(dr, dc)| {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                self.mask
                    .get_or_bg(nr, nc)
                    .then_some(((r, c), (nr as usize, nc as usize)))
            })
        })
    }
}

fn neighbourhood_code(mask: &BinaryImage, row: usize, col: usize) -> usize {
    RING.iter().enumerate().fold(0, |code, (k, &(dr, dc))| {
        if mask.get_or_bg(row as isize + dr, col as isize + dc) {
            code | (1 << k)
        } else {
            code
        }
    })
}

/// Counts components among ring positions selected by `member`, where two
/// positions are linked when `linked` says so.
fn ring_components(member: impl Fn(usize) -> bool, linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut label = [usize::MAX; 8];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for start in 0..8 {
        if !member(start) || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = vec![start];
        label[start] = id;
        let mut i = 0;
        while i < comp.len() {
            let a = comp[i];
            for b in 0..8 {
                if member(b) && label[b] == usize::MAX && linked(a, b) {
                    label[b] = id;
                    comp.push(b);
                }
            }
            i += 1;
        }
        comps.push(comp);
    }
    comps
}

/// `simple[code]`: removing the centre pixel preserves both the 8-connected
/// foreground and the 4-connected background topology.
fn simple_table() -> &'static [bool; 256] {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [false; 256];
        let chebyshev = |a: usize, b: usize| {
            let (pa, pb) = (RING[a], RING[b]);
            (pa.0 - pb.0).abs().max((pa.1 - pb.1).abs()) == 1
        };
        let manhattan = |a: usize, b: usize| {
            let (pa, pb) = (RING[a], RING[b]);
            (pa.0 - pb.0).abs() + (pa.1 - pb.1).abs() == 1
        };
        for (code, entry) in table.iter_mut().enumerate() {
            let fg = |k: usize| code & (1 << k) != 0;
            let fg_components = ring_components(fg, chebyshev).len();
            // even ring indices are the 4-neighbours of the centre
            let bg_components = ring_components(|k| !fg(k), manhattan)
                .into_iter()
                .filter(|comp| comp.iter().any(|k| k % 2 == 0))
                .count();
            *entry = fg_components == 1 && bg_components == 1;
        }
        table
    })
}

/// Step-size fraction below which a neighbour's larger EDT does not swallow
/// a pixel's inscribed disc; end points that pass are ridge anchors.
const ANCHOR_SLOPE: f64 = 0.5;

/// No `q` within Chebyshev distance 2 has `d(q) - d(p) >= ANCHOR_SLOPE *
/// |p - q|`, i.e. `p` is (up to discretisation) the centre of a maximal
/// inscribed disc. The 5x5 window keeps the cardinal tips of digital discs,
/// where the one-step EDT rise is only `sqrt(2) - 1`, from anchoring.
fn is_anchor(distance: &DistanceMap, row: usize, col: usize) -> bool {
    let (h, w) = distance.dims();
    let d = distance.get(row, col);
    (-2isize..=2).all(|dr| {
        (-2isize..=2).all(|dc| {
            let (r, c) = (row as isize + dr, col as isize + dc);
            if (dr == 0 && dc == 0) || r < 0 || c < 0 || r >= h as isize || c >= w as isize {
                return true;
            }
            let step = ((dr * dr + dc * dc) as f64).sqrt();
            distance.get(r as usize, c as usize) - d < ANCHOR_SLOPE * step
        })
    })
}

/// One directional sub-pass. Candidates are the pixels of `layer` whose
/// 4-neighbour in direction `dir` is background when the sub-pass starts;
/// each is then removed if it is still simple and not an anchored line end.
fn peel(
    mask: &mut BinaryImage,
    layer: &[(usize, usize)],
    dir: (isize, isize),
    anchors: &BinaryImage,
) -> bool {
    let simple = simple_table();
    let border: Vec<(usize, usize)> = layer
        .iter()
        .copied()
        .filter(|&(r, c)| mask.get(r, c) && !mask.get_or_bg(r as isize + dir.0, c as isize + dir.1))
        .collect();
    let mut changed = false;
    for (r, c) in border {
        let code = neighbourhood_code(mask, r, c);
        let is_end = code.count_ones() == 1;
        if simple[code] && !(is_end && anchors.get(r, c)) {
            mask.set(r, c, false);
            changed = true;
        }
    }
    changed
}

fn thin_layer(mask: &mut BinaryImage, layer: &[(usize, usize)], anchors: &BinaryImage) {
    const DIRECTIONS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    loop {
        let mut changed = false;
        for dir in DIRECTIONS {
            changed |= peel(mask, layer, dir, anchors);
        }
        if !changed {
            break;
        }
    }
}

/// Topology-preserving medial axis by distance-ordered thinning.
///
/// Foreground pixels are peeled in layers of equal EDT value, smallest first,
/// with north/south/west/east sub-passes inside each layer. A pixel goes when
/// it is simple, unless it is a line end sitting on the EDT ridge. A final
/// sweep over all survivors thins any two-pixel-wide ridge that is left.
pub fn skeletonize(image: &BinaryImage, distance: &DistanceMap) -> Result<Skeleton, RasterError> {
    assert_eq!(image.dims(), distance.dims(), "distance map shape");
    let (h, w) = image.dims();
    let mut order: Vec<(usize, usize)> = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| image.get(r, c))
        .collect();
    if order.is_empty() {
        return Err(RasterError::EmptyForeground);
    }
    order.sort_by(|a, b| distance.get(a.0, a.1).total_cmp(&distance.get(b.0, b.1)));
    let anchors = BinaryImage::from_fn(h, w, |r, c| image.get(r, c) && is_anchor(distance, r, c));

    let mut mask = image.clone();
    for layer in order.chunk_by(|a, b| distance.get(a.0, a.1) == distance.get(b.0, b.1)) {
        thin_layer(&mut mask, layer, &anchors);
    }
    order.retain(|&(r, c)| mask.get(r, c));
    thin_layer(&mut mask, &order, &anchors);
    Ok(Skeleton::from_mask(mask, distance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{count_components, edt, Connectivity};

    fn skeleton_of(img: &BinaryImage) -> Skeleton {
        skeletonize(img, &edt(img).unwrap()).unwrap()
    }

    #[test]
    fn simple_table_known_cases() {
        let t = simple_table();
        assert!(!t[0], "isolated pixel");
        assert!(t[0b0000_0001], "line end");
        // N and S only: removing would disconnect
        assert!(!t[0b0001_0001]);
        // full ring: interior pixel would open a hole
        assert!(!t[0xff]);
        // N, NE, E: corner of a blob
        assert!(t[0b0000_0111]);
    }

    #[test]
    fn bar_thins_to_centre_row() {
        let img = BinaryImage::from_fn(9, 40, |r, c| (3..=5).contains(&r) && (2..38).contains(&c));
        let sk = skeleton_of(&img);
        let interior: Vec<_> = (6..34).collect();
        let on_centre = interior.iter().filter(|&&c| sk.contains(4, c)).count();
        assert!(on_centre as f64 >= 0.95 * interior.len() as f64);
        assert!(sk.pixels().iter().all(|&(r, c)| img.get(r, c)));
        assert_eq!(count_components(sk.mask(), Connectivity::Eight), 1);
    }

    #[test]
    fn ring_keeps_its_hole() {
        let img = BinaryImage::from_fn(30, 30, |r, c| {
            let d2 = (r as i32 - 15).pow(2) + (c as i32 - 15).pow(2);
            (36..=120).contains(&d2)
        });
        let sk = skeleton_of(&img);
        assert_eq!(count_components(sk.mask(), Connectivity::Eight), 1);
        assert_eq!(
            count_components(&sk.mask().complement(), Connectivity::Four),
            2
        );
        assert!(sk.tips().is_empty());
    }

    #[test]
    fn empty_foreground() {
        let img = BinaryImage::empty(5, 5);
        assert_eq!(
            skeletonize(&img, &edt(&img).unwrap()),
            Err(RasterError::EmptyForeground)
        );
    }

    #[test]
    fn edges_listed_once() {
        let img = BinaryImage::from_fn(5, 5, |r, c| r == 2 && (1..=3).contains(&c));
        let sk = skeleton_of(&img);
        assert_eq!(sk.len(), 3);
        assert_eq!(sk.edges().count(), 2);
        assert_eq!(sk.tips().len(), 2);
    }
}

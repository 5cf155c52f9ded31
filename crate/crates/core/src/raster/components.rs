use super::BinaryImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

/// Number of connected foreground components.
pub fn count_components(image: &BinaryImage, connectivity: Connectivity) -> usize {
    let (h, w) = image.dims();
    let mut seen = vec![false; h * w];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..h * w {
        if seen[start] || !image.pixels()[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (r, c) = ((idx / w) as isize, (idx % w) as isize);
            for &(dr, dc) in connectivity.offsets() {
                let (nr, nc) = (r + dr, c + dc);
                if image.get_or_bg(nr, nc) {
                    let n = nr as usize * w + nc as usize;
                    if !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels() {
        let img = BinaryImage::from_fn(3, 3, |r, c| r == c);
        assert_eq!(count_components(&img, Connectivity::Eight), 1);
        assert_eq!(count_components(&img, Connectivity::Four), 3);
        assert_eq!(count_components(&BinaryImage::empty(4, 4), Connectivity::Eight), 0);
    }
}

//! Distance transform and skeleton of a small ring, drawn as text.

use morpho::raster::{edt, skeletonize, BinaryImage};

fn main() {
    let ring = BinaryImage::from_fn(17, 25, |r, c| {
        let d = ((r as f64 - 8.0).powi(2) + ((c as f64 - 12.0) / 1.4).powi(2)).sqrt();
        (3.5..=7.5).contains(&d)
    });
    let dist = edt(&ring).expect("ring has background");
    let skel = skeletonize(&ring, &dist).expect("ring is not empty");

    println!("distance to background (rounded, capped at 9):");
    for r in 0..ring.height() {
        let line: String = (0..ring.width())
            .map(|c| match dist.get(r, c) {
                0.0 => '.',
                d => char::from_digit((d.round() as u32).min(9), 10).unwrap(),
            })
            .collect();
        println!("  {line}");
    }

    println!("\nskeleton ({} pixels, {} tips, {} forks):", skel.len(), skel.tips().len(), skel.forks().len());
    for r in 0..ring.height() {
        let line: String = (0..ring.width())
            .map(|c| match (skel.contains(r, c), ring.get(r, c)) {
                (true, _) => '#',
                (false, true) => '+',
                _ => '.',
            })
            .collect();
        println!("  {line}");
    }
}

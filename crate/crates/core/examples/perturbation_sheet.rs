//! Applies every built-in perturbation to a handful of glyphs and writes a
//! PGM sheet (one row per perturbation) to the given path.
//!
//! cargo run --example perturbation_sheet -- sheet.pgm

use morpho::morphometry::measure;
use morpho::perturb::{perturb_image, PerturbSpec};
use morpho::raster::GrayImage;
use morpho::synth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "perturbations.pgm".into());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let glyphs: Vec<GrayImage> = (0..6).map(|_| synth::random_glyph(&mut rng)).collect();
    let menu = [
        PerturbSpec::Identity,
        PerturbSpec::thin(),
        PerturbSpec::thicken(),
        PerturbSpec::swell(),
        PerturbSpec::fracture(),
    ];

    let mut rows = Vec::new();
    for spec in &menu {
        let mut row = Vec::new();
        let mut thickness = Vec::new();
        for (i, img) in glyphs.iter().enumerate() {
            let (out, outcome) = perturb_image(img, spec, 4, i as u64).expect("glyph is not blank");
            if let Some(failure) = &outcome.failure {
                println!("  {} on glyph {i}: fell back ({failure})", spec.kind());
            }
            if let Ok(r) = measure(&out, 4) {
                thickness.push(r.thickness);
            }
            row.push(out);
        }
        let mean = thickness.iter().sum::<f64>() / thickness.len() as f64;
        println!("{:<9} mean thickness {mean:.2}", spec.kind());
        rows.push(row);
    }

    let (h, w) = (28, 28);
    let (gh, gw) = (rows.len() * h, glyphs.len() * w);
    let mut pixels = vec![0u8; gh * gw];
    for (tr, row) in rows.iter().enumerate() {
        for (tc, img) in row.iter().enumerate() {
            let bytes = img.to_u8();
            for r in 0..h {
                let dst = (tr * h + r) * gw + tc * w;
                pixels[dst..dst + w].copy_from_slice(&bytes[r * w..(r + 1) * w]);
            }
        }
    }
    let mut out = format!("P5\n{gw} {gh}\n255\n").into_bytes();
    out.extend(pixels);
    std::fs::write(&path, out).expect("write sheet");
    println!("wrote {path}");
}

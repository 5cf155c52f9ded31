//! Measures a few synthetic glyphs and prints their morphometrics.

use morpho::morphometry::{measure, DEFAULT_SCALE};
use morpho::synth::{self, Stroke};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut glyphs = vec![
        ("bar t=3", synth::render_strokes(28, 28, &[Stroke::line((14.0, 5.0), (14.0, 22.0), 3.0)])),
        ("slanted bar", synth::sheared_bar(28, 28, 3.0, 18.0, 20f64.to_radians().tan())),
        ("disc r=6", synth::disc(28, 28, (13.5, 13.5), 6.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        glyphs.push(("random", synth::random_glyph(&mut rng)));
    }

    println!("{:<12} {:>8} {:>9} {:>8} {:>7} {:>7}", "glyph", "length", "thickness", "slant", "width", "height");
    for (name, img) in &glyphs {
        match measure(img, DEFAULT_SCALE) {
            Ok(r) => println!(
                "{name:<12} {:>8.2} {:>9.2} {:>7.1}° {:>7.2} {:>7.2}",
                r.length,
                r.thickness,
                r.slant.to_degrees(),
                r.width,
                r.height
            ),
            Err(e) => println!("{name:<12} failed: {}", e.code()),
        }
    }
}

//! Builds a seeded mixed dataset (plain / thin / thick) and shows that the
//! result does not depend on the worker count.

use morpho::idx::{ByteImage, ImageDataset, LabelVector};
use morpho::perturb::{build_mixed_dataset, PerturbSpec};
use morpho::synth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let images: Vec<ByteImage> = (0..600)
        .map(|_| ByteImage::from_gray(&synth::random_glyph(&mut rng)))
        .collect();
    let dataset = ImageDataset::new(28, 28, images);
    let labels = LabelVector::new((0..600).map(|i| (i % 10) as u8).collect());
    let menu = [PerturbSpec::Identity, PerturbSpec::thin(), PerturbSpec::thicken()];

    let one = build_mixed_dataset(&dataset, &labels, &menu, 2019, 4, 1).unwrap();
    let many = build_mixed_dataset(&dataset, &labels, &menu, 2019, 4, 4).unwrap();
    assert_eq!(one, many);

    let mut counts = [0usize; 3];
    for &c in &one.classes.labels {
        counts[c as usize] += 1;
    }
    println!("class counts (plain, thin, thick): {counts:?}");
    let failed = one.outcomes.iter().filter(|o| !o.outcome.applied).count();
    println!("{failed} perturbations fell back to the plain image");
    println!("first outcome: {}", serde_json::to_string(&one.outcomes[0]).unwrap());
}

//! Writes glyphs and labels as IDX (plain and gzipped), reads them back and
//! checks the bytes.

use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use morpho::idx::*;
use morpho::synth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let dir = std::env::temp_dir().join("morpho-idx-example");
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let images = (0..32)
        .map(|_| ByteImage::from_gray(&synth::random_glyph(&mut rng)))
        .collect();
    let dataset = ImageDataset::new(28, 28, images);
    let labels = LabelVector::new((0..32).map(|i| (i % 10) as u8).collect());

    save_images(dir.join("images.idx"), &dataset).unwrap();
    save_labels(dir.join("labels.idx"), &labels).unwrap();
    let bytes = write_idx_images(&dataset).unwrap();
    let mut gz = GzEncoder::new(Vec::new(), Compression::default());
    gz.write_all(&bytes).unwrap();
    std::fs::write(dir.join("images.idx.gz"), gz.finish().unwrap()).unwrap();

    assert_eq!(load_images(dir.join("images.idx")).unwrap(), dataset);
    assert_eq!(load_images(dir.join("images.idx.gz")).unwrap(), dataset);
    assert_eq!(load_labels(dir.join("labels.idx")).unwrap(), labels);
    println!("{} images of {}x{} round-trip through {}", dataset.count(), dataset.height, dataset.width, dir.display());

    match read_idx_images(&bytes[..bytes.len() - 5]) {
        Err(e) => println!("truncated file: {e}"),
        Ok(_) => unreachable!(),
    }
    match read_idx_labels(&bytes) {
        Err(e) => println!("images read as labels: {e}"),
        Ok(_) => unreachable!(),
    }
}

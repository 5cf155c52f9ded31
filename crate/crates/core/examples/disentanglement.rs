//! Partial correlations and MIG for a toy "latent code" that controls
//! thickness and slant of synthetic bars.

use morpho::morphometry::{measure, Attribute};
use morpho::stats::{mig, partial_correlations, AttributeTable, CodeKind, CodeTable};
use morpho::synth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut codes = vec![Vec::new(); 3];
    let mut rows = Vec::new();
    while rows.len() < 1500 {
        let width_code: f64 = rng.random_range(-1.0..1.0);
        let slant_code: f64 = rng.random_range(-1.0..1.0);
        let style = rng.random_range(0..3);
        let thickness = 3.0 + 1.5 * width_code;
        let slope = (25f64.to_radians() * slant_code).tan();
        let length = [14.0, 17.0, 20.0][style];
        let Ok(r) = measure(&synth::sheared_bar(28, 28, thickness, length, slope), 4) else {
            continue;
        };
        rows.push(Attribute::ALL.iter().map(|&a| r.get(a)).collect::<Vec<f64>>());
        codes[0].push(width_code);
        codes[1].push(slant_code);
        codes[2].push(style as f64);
    }
    let names: Vec<String> = Attribute::ALL.iter().map(|a| a.name().to_string()).collect();
    let y = AttributeTable::from_rows(names, &rows).unwrap();
    let codes = CodeTable::new(
        vec!["width".into(), "slant".into(), "style".into()],
        vec![CodeKind::Continuous, CodeKind::Continuous, CodeKind::Categorical(3)],
        codes,
    )
    .unwrap();

    let table = partial_correlations(&y, &codes).unwrap();
    print!("{:<10}", "");
    for c in &table.codes {
        print!("{c:>9}");
    }
    println!();
    for (a, row) in table.attributes.iter().zip(&table.values) {
        print!("{a:<10}");
        for v in row {
            print!("{v:>9.3}");
        }
        println!();
    }

    let report = mig(&y, &codes, 20).unwrap();
    println!();
    for (a, m) in report.attributes.iter().zip(&report.per_attribute) {
        println!("MIG {a:<10} {m:.3}");
    }
    println!("MIG overall    {:.3}", report.overall);
}

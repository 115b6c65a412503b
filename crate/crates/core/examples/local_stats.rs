//! Reduction types of the `Gamma1(5)` family at `q = 11, 13` as the height
//! grows, against the fiber-size and cusp predictions.

use modcount::cusp_census::rational_cusp_count;
use modcount::ff_curves::{build_census, PrimeField};
use modcount::level_fibers::LevelSpec;
use modcount::torsion_families::{builtin_parametrization, gamma1_5_scan, predictions};

fn main() -> modcount::Result<()> {
    let level = LevelSpec::gamma1(5);
    let param = builtin_parametrization(&level)?;
    let qs = [11u64, 13];
    let censuses = qs
        .iter()
        .map(|&q| build_census(PrimeField::new(q)?))
        .collect::<modcount::Result<Vec<_>>>()?;
    let bins = [1000u64, 2000, 4000, 8000, 16000];
    let rep = gamma1_5_scan(&bins, &censuses)?;
    for (qi, c) in censuses.iter().enumerate() {
        let q = qs[qi];
        let pred = predictions(&param, c)?;
        let cusp = rational_cusp_count(&level, q)? as f64 / (q + 1) as f64;
        println!("q = {q}: predicted multiplicative fraction {cusp:.4}");
        for (bi, b) in bins.iter().enumerate() {
            let s = rep.statistics(bi, qi, c);
            println!(
                "  B = {b:>6}  curves {:>9}  multiplicative {:.4}  split {:>7} nonsplit {:>7}  max class deviation {:.4}",
                s.total,
                s.fraction(s.multiplicative()),
                s.split,
                s.nonsplit,
                s.max_class_deviation(&pred)
            );
        }
    }
    Ok(())
}

//! Weighted Hurwitz class numbers `H_Gamma(a, q)` and their first moments,
//! with the group-lattice identity checked exactly.

use modcount::ff_curves::{build_census, PrimeField};
use modcount::level_fibers::{h_gamma, moment, moment_identity, LevelSpec};

fn main() -> modcount::Result<()> {
    let level = LevelSpec::gamma1(5);
    let census = build_census(PrimeField::new(11)?)?;
    let table = h_gamma(&level, &census)?;
    for (a, h) in table.values.iter().filter(|(_, h)| **h != 0.into()) {
        println!("H(a={a:>3}, 11) = {h}");
    }
    println!("sum = {}", moment(&table, 0));

    println!("\n  q        M0        M1          M2    M2 - q");
    for q in [29u64, 101, 211, 401] {
        let c = build_census(PrimeField::new(q)?)?;
        let t = h_gamma(&level, &c)?;
        for r in 0..=2 {
            let (lhs, rhs) = moment_identity(&level, &c, r)?;
            assert_eq!(lhs, rhs, "identity at q={q}, R={r}");
        }
        let m: Vec<f64> = (0..=2)
            .map(|r| {
                let v = moment(&t, r);
                *v.numer() as f64 / *v.denom() as f64
            })
            .collect();
        println!(
            "{q:>3} {:>9.4} {:>9.4} {:>11.3} {:>9.3}",
            m[0],
            m[1],
            m[2],
            m[2] - q as f64
        );
    }
    Ok(())
}

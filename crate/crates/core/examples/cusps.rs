//! Index, `e = index / 24` and rational cusp counts for the genus-zero
//! `Gamma1(N)`, compared with the closed forms.

use modcount::arith::gcd;
use modcount::cusp_census::{cusp_orbits, index_and_e, rational_cusp_count};
use modcount::level_fibers::LevelSpec;

fn main() -> modcount::Result<()> {
    let qs = [7u64, 11, 13, 16, 19, 25, 29, 31];
    print!("{:>6} {:>5} {:>3} {:>6} |", "level", "index", "e", "cusps");
    for q in qs {
        print!(" q={q:<3}");
    }
    println!();
    for n in [5u64, 6, 7, 8, 9, 10, 12] {
        let level = LevelSpec::gamma1(n);
        let (index, e) = index_and_e(&level)?;
        print!(
            "{:>6} {index:>5} {e:>3} {:>6} |",
            level.to_string(),
            cusp_orbits(&level)?.len()
        );
        for q in qs {
            if gcd(q, n) == 1 {
                print!(" {:<5}", rational_cusp_count(&level, q)?);
            } else {
                print!(" {:<5}", "-");
            }
        }
        println!();
    }
    Ok(())
}

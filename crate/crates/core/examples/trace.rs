//! Hecke traces on `S_k(Gamma1(N))` solved from finite-field expectations.
//! Weight 2 traces vanish for the genus-zero levels.

use modcount::arith::{gcd, primes_up_to};
use modcount::ff_curves::{build_census, PrimeField};
use modcount::level_fibers::LevelSpec;
use modcount::trace_formula::solve_trace;

fn main() -> modcount::Result<()> {
    for (n, k) in [(5u64, 2u32), (7, 2), (5, 4), (7, 3)] {
        let group = LevelSpec::gamma1(n).torsion_group();
        print!("N={n} k={k}:");
        for q in primes_up_to(60)
            .into_iter()
            .filter(|&q| q >= 5 && gcd(q - 1, n) == 1 && q % n != 0)
        {
            let r = solve_trace(k, &build_census(PrimeField::new(q)?)?, group)?;
            assert!(r.integer_verdict && r.deligne_verdict);
            print!(" T{q}={}", r.solved_trace);
        }
        println!();
    }
    Ok(())
}

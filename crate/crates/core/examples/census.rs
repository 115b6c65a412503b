//! Isomorphism classes of elliptic curves over `F_p` with their traces,
//! group structures and automorphism counts.
//!
//! `cargo run --example census -- 23`

use modcount::ff_curves::{build_census, PrimeField};

fn main() -> modcount::Result<()> {
    let p: u64 = std::env::args()
        .nth(1)
        .map_or(Ok(23), |s| s.parse())
        .expect("p must be an integer");
    let census = build_census(PrimeField::new(p)?)?;
    census.check_invariants()?;
    println!(
        "{:>6} {:>6} {:>5} {:>10} {:>4} {:>6}",
        "A", "B", "a", "group", "aut", "orbit"
    );
    for c in &census.classes {
        let (n1, n2) = c.group;
        println!(
            "{:>6} {:>6} {:>5} {:>10} {:>4} {:>6}",
            c.representative.a(),
            c.representative.b(),
            c.trace_a,
            format!("Z/{n1}xZ/{n2}"),
            c.aut_count,
            c.orbit_size
        );
    }
    println!(
        "classes {}  sum 1/|Aut| = {}  sum orbits = {}",
        census.classes.len(),
        census.mass(),
        census.orbit_total()
    );
    Ok(())
}

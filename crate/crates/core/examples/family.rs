//! Curves over `Q` with a rational 7-torsion point, listed by height, each
//! with a certificate that the transported Tate point has order 7.

use modcount::level_fibers::LevelSpec;
use modcount::torsion_families::{
    builtin_parametrization, family_bounds, generate_family, torsion_certificate,
};

fn main() -> modcount::Result<()> {
    let param = builtin_parametrization(&LevelSpec::gamma1(7))?;
    let bounds = family_bounds(&param)?;
    println!(
        "content primes {:?} (proven: {}), c_min {:.4}",
        bounds.content.primes, bounds.content.proven, bounds.c_min
    );
    let fam = generate_family(&param, 2000)?;
    println!(
        "{} curves of height <= 2000, complete: {}",
        fam.curves.len(),
        fam.complete
    );
    for c in fam.curves.iter().take(12) {
        let cert = torsion_certificate(&param, c)?;
        println!(
            "t = {:>3}:{:<3} A = {:>12} B = {:>18}  P = ({}, {}) order {}",
            c.t[0],
            c.t[1],
            c.a(),
            c.b(),
            cert.x,
            cert.y,
            cert.order
        );
    }
    Ok(())
}

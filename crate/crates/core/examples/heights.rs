//! Points of weighted projective space over `Q`: normalization, heights,
//! enumeration and reduction modulo a prime.

use modcount::wps_rational::{
    content_ideal, enumerate_points, normalize, reduce_mod_p, WeightVector,
};

fn main() -> modcount::Result<()> {
    let w = WeightVector::new(vec![4, 6])?;
    // (2^4 * 3, 2^6 * 5) has content 2 in P(4,6).
    let x = [48i128, 320];
    println!("content of {x:?}: {}", content_ideal(&w, &x)?);
    let p = normalize(&w, &x)?;
    println!(
        "normalized {:?}, height {:.4}, H^12 = {}",
        p.coords(),
        p.height(),
        p.height12().expect("weights divide 12")
    );
    for q in [5u64, 7, 11] {
        println!("  mod {q}: {:?}", reduce_mod_p(&p, q).canonical(&w));
    }
    for b in [2.0, 3.0, 4.0] {
        println!(
            "P(4,6) points of height <= {b}: {}",
            enumerate_points(&w, b)?.len()
        );
    }
    Ok(())
}

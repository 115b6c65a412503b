//! The explicit-formula pieces: the test function pair, the prime sum that
//! tends to `phi(0)/2`, and `S1`, `S2` and the rank estimate for `Gamma1(5)`.

use modcount::analytic_harness::{
    chebyshev_theta, required_primes, s1_s2_empirical, s2_analytic_sum, FamilyMoments, TestFunction,
};
use modcount::ff_curves::{build_census, PrimeField};
use modcount::level_fibers::LevelSpec;
use modcount::torsion_families::gamma1_5_scan;

fn main() -> modcount::Result<()> {
    let sigma = 0.6;
    let tf = TestFunction::new(sigma)?;
    println!("phi(0) = {}  phi_hat(0) = {}", tf.phi(0.0), tf.phi_hat(0.0));
    for x in [0.0, 0.7, 2.5] {
        println!(
            "phi({x}) = {:.12}  inverse transform {:.12}",
            tf.phi(x),
            tf.inverse_transform(x, 4000)
        );
    }
    println!("theta(1e7) / 1e7 = {:.5}", chebyshev_theta(1e7)? / 1e7);
    for e in 3..=7 {
        let x = 10f64.powi(e);
        let s = s2_analytic_sum(x, sigma)?;
        println!(
            "X = 1e{e}: prime sum {s:.5}, (sum - phi(0)/2) log X = {:+.4}",
            (s - tf.phi(0.0) / 2.0) * x.ln()
        );
    }

    let level = LevelSpec::gamma1(5);
    let x = 5000u64;
    let primes = required_primes(&level, x as f64, sigma)?;
    let censuses = primes
        .iter()
        .map(|&q| build_census(PrimeField::new(q)?))
        .collect::<modcount::Result<Vec<_>>>()?;
    let scan = gamma1_5_scan(&[x], &censuses)?;
    let stats: Vec<_> = censuses
        .iter()
        .enumerate()
        .map(|(i, c)| scan.statistics(0, i, c))
        .collect();
    let moments = FamilyMoments::from_statistics(level, x as f64, scan.totals[0], &stats)?;
    let report = s1_s2_empirical(&moments, sigma)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

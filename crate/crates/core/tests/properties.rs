//! Property tests against independent oracles: trial division, naive point
//! counting and direct numerical evaluation.

use proptest::prelude::*;

use modcount::analytic_harness::{chebyshev_theta, for_each_prime, TestFunction};
use modcount::ff_curves::{build_census, is_singular, PrimeField};
use modcount::trace_formula::{chebyshev_u, chebyshev_u_analytic};
use modcount::wps_rational::{content_ideal, normalize, scale, WeightVector};
use modcount::Q;

fn trial_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn weights() -> impl Strategy<Value = WeightVector> {
    prop_oneof![
        Just(vec![1, 1]),
        Just(vec![1, 2]),
        Just(vec![1, 3]),
        Just(vec![2, 3]),
        Just(vec![4, 6]),
        Just(vec![1, 1, 2]),
    ]
    .prop_map(|w| WeightVector::new(w).unwrap())
}

fn point(w: &WeightVector) -> impl Strategy<Value = Vec<i128>> {
    proptest::collection::vec(-2000i128..=2000, w.len())
        .prop_filter("not the origin", |x| x.iter().any(|&c| c != 0))
}

/// Affine points of `y^2 = x^3 + ax + b` plus infinity, by brute force.
fn naive_count(p: u64, a: u64, b: u64) -> u64 {
    let mut n = 1;
    for x in 0..p {
        let rhs = (x * x % p * x + a * x + b) % p;
        n += (0..p).filter(|y| y * y % p == rhs).count() as u64;
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalize_is_idempotent((w, x) in weights().prop_flat_map(|w| (Just(w.clone()), point(&w)))) {
        let p = normalize(&w, &x).unwrap();
        prop_assert_eq!(content_ideal(&w, p.coords()).unwrap(), Q::from_integer(1));
        prop_assert_eq!(normalize(&w, p.coords()).unwrap(), p);
    }

    #[test]
    fn normalize_ignores_weighted_scaling(
        (w, x) in weights().prop_flat_map(|w| (Just(w.clone()), point(&w))),
        l in prop_oneof![Just(-1i128), 2i128..=7, -7i128..=-2],
    ) {
        let y = scale(&w, &x, l).unwrap();
        let (p, q) = (normalize(&w, &x).unwrap(), normalize(&w, &y).unwrap());
        prop_assert!((p.height() - q.height()).abs() <= 1e-9 * p.height().max(1.0));
        prop_assert_eq!(p, q);
    }

    #[test]
    fn first_odd_weight_coordinate_is_positive((w, x) in weights().prop_flat_map(|w| (Just(w.clone()), point(&w)))) {
        let p = normalize(&w, &x).unwrap();
        let lead = p.coords().iter().zip(w.entries()).find(|(&c, &wj)| wj % 2 == 1 && c != 0);
        if let Some((&c, _)) = lead {
            prop_assert!(c > 0);
        }
    }

    #[test]
    fn chebyshev_recursion_matches_closed_form(j in 0u32..8, q in 2u64..500, a in -40i64..=40) {
        let exact = chebyshev_u(j, a, q) as f64;
        let analytic = chebyshev_u_analytic(j, a as f64, q as f64);
        prop_assert!((exact - analytic).abs() <= 1e-7 * exact.abs().max(1.0));
    }

    #[test]
    fn fourier_pair(sigma in 0.1f64..1.9, x in -6.0f64..6.0) {
        let tf = TestFunction::new(sigma).unwrap();
        let numeric = tf.inverse_transform(x, 20_000);
        prop_assert!((numeric - tf.phi(x)).abs() <= 1e-8, "{} vs {}", numeric, tf.phi(x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn census_matches_brute_force(p in (5u64..120).prop_filter("prime", |&p| trial_prime(p))) {
        let c = build_census(PrimeField::new(p).unwrap()).unwrap();
        c.check_invariants().unwrap();
        prop_assert_eq!(c.mass(), Q::from_integer(p as i128));
        prop_assert_eq!(c.orbit_total(), p * p - p);
        for rec in &c.classes {
            let (a, b) = (rec.representative.a(), rec.representative.b());
            prop_assert!(!is_singular(p, a, b));
            let n = naive_count(p, a, b);
            prop_assert_eq!(n as i64, p as i64 + 1 - rec.trace_a);
            prop_assert_eq!(rec.group.0 * rec.group.1, n);
            prop_assert_eq!(rec.group.0 % rec.group.1, 0);
            prop_assert!((rec.trace_a * rec.trace_a) as u64 <= 4 * p);
        }
    }

    #[test]
    fn sieve_agrees_with_trial_division(limit in 0u64..20_000) {
        let mut got = Vec::new();
        for_each_prime(limit, 1 << 20, |p| got.push(p)).unwrap();
        let want: Vec<u64> = (0..=limit).filter(|&n| trial_prime(n)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn theta_agrees_with_trial_division(t in 0.0f64..20_000.0) {
        let want: f64 = (0..=t.floor() as u64).filter(|&n| trial_prime(n)).map(|p| (p as f64).ln()).sum();
        prop_assert!((chebyshev_theta(t).unwrap() - want).abs() <= 1e-8 * want.max(1.0));
    }
}

#[test]
fn theta_is_close_to_t() {
    let t = 1e7;
    let r = chebyshev_theta(t).unwrap() / t;
    assert!((r - 1.0).abs() < 2e-3, "theta(1e7)/1e7 = {r}");
}

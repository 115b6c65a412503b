//! Explicit-formula harness over `Q`.
//!
//! The test function is the Fejér pair
//! `phi(x) = sin^2(pi sigma x) / (2 pi x)^2`, `phi_hat(u) = (sigma - |u|)_+ / 4`,
//! so `phi(0) = sigma^2 / 4` and `phi_hat(0) = sigma / 4`. Prime sums run
//! over a segmented sieve. Family sums `S1`, `S2` consume per-prime
//! reduction statistics and use the normalization `a_hat(p) = a_E(p) / sqrt(p)`,
//! for which `a_hat(p^2) = a_hat(p)^2 - 2` at good primes.
//!
//! Residual terms of the explicit formula are not computed. The report
//! carries explicit upper bounds for them instead.

use std::f64::consts::PI;

use serde::Serialize;

use crate::arith::{gcd, isqrt, primes_up_to};
use crate::error::{Error, Result};
use crate::level_fibers::LevelSpec;
use crate::torsion_families::LocalStatistics;

/// Default largest integer the prime sieve will reach.
pub const DEFAULT_SIEVE_CEILING: u64 = 100_000_000;

const SEGMENT: u64 = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    sigma: f64,
}

impl TestFunction {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::BadInput(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(TestFunction { sigma })
    }

    pub fn sigma(self) -> f64 {
        self.sigma
    }

    pub fn phi(self, x: f64) -> f64 {
        let s = self.sigma;
        let z = PI * s * x;
        let sinc = if z.abs() < 1e-4 {
            1.0 - z * z / 6.0
        } else {
            z.sin() / z
        };
        s * s / 4.0 * sinc * sinc
    }

    pub fn phi_hat(self, u: f64) -> f64 {
        (self.sigma - u.abs()).max(0.0) / 4.0
    }

    /// `int phi_hat(u) e^{2 pi i u x} du` by composite Simpson on `[0, sigma]`
    /// with `steps` (rounded up to even) subintervals.
    pub fn inverse_transform(self, x: f64, steps: usize) -> f64 {
        let n = steps.max(2).next_multiple_of(2);
        let h = self.sigma / n as f64;
        let f = |u: f64| self.phi_hat(u) * (2.0 * PI * u * x).cos();
        let mut acc = f(0.0) + f(self.sigma);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        2.0 * acc * h / 3.0
    }
}

/// Calls `f` on every prime `<= limit`, in increasing order.
pub fn for_each_prime<F: FnMut(u64)>(limit: u64, ceiling: u64, mut f: F) -> Result<()> {
    if limit > ceiling {
        return Err(Error::Resource(format!(
            "sieving to {limit} exceeds the ceiling {ceiling}"
        )));
    }
    if limit < 2 {
        return Ok(());
    }
    let base = primes_up_to(isqrt(limit));
    let mut composite = vec![false; SEGMENT as usize];
    let mut lo = 2;
    while lo <= limit {
        let hi = (lo + SEGMENT - 1).min(limit);
        let seg = &mut composite[..(hi - lo + 1) as usize];
        seg.fill(false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut m = (p * p).max(lo.div_ceil(p) * p);
            while m <= hi {
                seg[(m - lo) as usize] = true;
                m += p;
            }
        }
        for (i, &c) in seg.iter().enumerate() {
            if !c {
                f(lo + i as u64);
            }
        }
        lo = hi + 1;
    }
    Ok(())
}

fn floor_limit(t: f64) -> Result<u64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::BadInput(format!(
            "prime-sum bound {t} must be a nonnegative number"
        )));
    }
    if t >= u64::MAX as f64 {
        return Err(Error::Resource(format!(
            "prime-sum bound {t} is out of range"
        )));
    }
    Ok(t.floor() as u64)
}

/// `theta(t) = sum_{p <= t} log p`.
pub fn chebyshev_theta(t: f64) -> Result<f64> {
    chebyshev_theta_with(t, DEFAULT_SIEVE_CEILING)
}

pub fn chebyshev_theta_with(t: f64, ceiling: u64) -> Result<f64> {
    let mut acc = 0.0;
    for_each_prime(floor_limit(t)?, ceiling, |p| acc += (p as f64).ln())?;
    Ok(acc)
}

/// `(2 / log X) sum_p (log p / p) phi_hat(2 log p / log X)`, which tends to
/// `phi(0) / 2`. Only `p < X^{sigma/2}` contribute.
pub fn s2_analytic_sum(x: f64, sigma: f64) -> Result<f64> {
    let tf = TestFunction::new(sigma)?;
    if !(x > 1.0) {
        return Err(Error::BadInput(format!("X must exceed 1, got {x}")));
    }
    let l = x.ln();
    let mut acc = 0.0;
    for_each_prime(
        floor_limit(x.powf(sigma / 2.0))?,
        DEFAULT_SIEVE_CEILING,
        |p| {
            let lp = (p as f64).ln();
            acc += lp / p as f64 * tf.phi_hat(2.0 * lp / l);
        },
    )?;
    Ok(2.0 * acc / l)
}

/// `sum_E a_hat(q)` and `sum_E a_hat(q^2)` over a family at one prime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrimeMoments {
    pub q: u64,
    pub m1: f64,
    pub m2: f64,
}

impl PrimeMoments {
    /// Good classes contribute `a/sqrt(q)` and `a^2/q - 2`, split and
    /// nonsplit `+-1/sqrt(q)` and `1/q`, additive nothing.
    pub fn from_statistics(s: &LocalStatistics) -> Self {
        let q = s.q as f64;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (&a, &n) in &s.traces {
            let a = a as f64;
            m1 += n as f64 * a / q.sqrt();
            m2 += n as f64 * (a * a / q - 2.0);
        }
        m1 += (s.split as f64 - s.nonsplit as f64) / q.sqrt();
        m2 += s.multiplicative() as f64 / q;
        PrimeMoments { q: s.q, m1, m2 }
    }
}

/// Per-prime moments of one family of `count` curves of height `<= x`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyMoments {
    pub level: LevelSpec,
    pub x: f64,
    pub count: u64,
    pub primes: Vec<PrimeMoments>,
}

impl FamilyMoments {
    /// Every statistic must describe the same `count` curves.
    pub fn from_statistics(
        level: LevelSpec,
        x: f64,
        count: u64,
        stats: &[LocalStatistics],
    ) -> Result<Self> {
        if let Some(s) = stats.iter().find(|s| s.total != count || s.level != level) {
            return Err(Error::BadInput(format!(
                "statistics at q={} cover {} curves of {}, expected {count} of {level}",
                s.q, s.total, s.level
            )));
        }
        let primes = stats.iter().map(PrimeMoments::from_statistics).collect();
        Ok(FamilyMoments {
            level,
            x,
            count,
            primes,
        })
    }
}

/// Primes `5 <= p < X^sigma` coprime to the level: where `S1` needs data.
pub fn required_primes(level: &LevelSpec, x: f64, sigma: f64) -> Result<Vec<u64>> {
    let top = x.powf(sigma);
    let mut out = Vec::new();
    for_each_prime(floor_limit(top)?, DEFAULT_SIEVE_CEILING, |p| {
        if p >= 5 && (p as f64) < top && gcd(p, level.level()) == 1 {
            out.push(p);
        }
    })?;
    Ok(out)
}

/// Upper bounds for what the truncated sums leave out, in the units of
/// `12 phi_hat(0) - S1 - S2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BudgetTerms {
    /// Primes dividing `6N`, bounded with `|a_hat| <= 2`.
    pub omitted_primes: f64,
    /// Prime powers `p^k`, `k >= 3`, bounded with `|a_hat(p^k)| <= 2`.
    pub prime_powers: f64,
    /// The gamma-factor integral, bounded with `|Re psi(1 + ir)| <= log(1 + |r|) + 1`.
    pub gamma_factor: f64,
    /// `phi_hat(0) log(496) / log X` from `16|4A^3 + 27B^2| <= 496 H^12`.
    pub conductor: f64,
}

impl BudgetTerms {
    pub fn total(&self) -> f64 {
        self.omitted_primes + self.prime_powers + self.gamma_factor + self.conductor
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplicitFormulaReport {
    pub level: String,
    #[serde(rename = "X")]
    pub x: f64,
    pub sigma: f64,
    pub curves: u64,
    pub primes: usize,
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    /// `-phi(0) / 2`, the limit of `S2`.
    #[serde(rename = "S2_pred")]
    pub s2_pred: f64,
    /// `(12 phi_hat(0) - S1 - S2) / phi(0)`.
    pub rank_bound: f64,
    /// `rank_bound` plus the budget over `phi(0)`.
    pub rank_bound_with_budget: f64,
    /// `12 / sigma + 1/2`, the value when `S1 -> 0` and `S2 -> -phi(0)/2`.
    pub rank_bound_limit: f64,
    pub budget_terms: BudgetTerms,
}

fn gamma_factor_bound(tf: TestFunction, l: f64) -> f64 {
    // (2/pi) int phi(L r / 2 pi) (log 2 pi + 1 + log(1 + |r|)) dr, with y = L r / 2 pi.
    let c = (2.0 * PI).ln() + 1.0;
    let a = 2.0 * PI / l;
    let (top, n) = (2000.0, 400_000usize);
    let h = top / n as f64;
    let g = |y: f64| tf.phi(y) * (1.0 + a * y).ln();
    let mut acc = g(0.0) + g(top);
    for i in 1..n {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let body = 2.0 * acc * h / 3.0;
    // phi(y) <= 1 / (4 pi^2 y^2) and int_T^inf log(1 + a y) / y^2 dy <= (log(1 + a T) + 1) / T.
    let tail = ((1.0 + a * top).ln() + 1.0) / top / (4.0 * PI * PI);
    4.0 / l * (c * tf.phi_hat(0.0) + 2.0 * (body + tail))
}

/// `S1`, `S2` and the rank-bound assembly. The moments must cover exactly
/// [`required_primes`].
pub fn s1_s2_empirical(m: &FamilyMoments, sigma: f64) -> Result<ExplicitFormulaReport> {
    let tf = TestFunction::new(sigma)?;
    if m.count == 0 {
        return Err(Error::BadInput("empty family".into()));
    }
    let want = required_primes(&m.level, m.x, sigma)?;
    let have: Vec<u64> = m.primes.iter().map(|p| p.q).collect();
    if want != have {
        return Err(Error::BadInput(format!(
            "S1 at X={} sigma={sigma} needs the {} primes {}..{} coprime to {}, got {} primes",
            m.x,
            want.len(),
            want.first().unwrap_or(&0),
            want.last().unwrap_or(&0),
            m.level,
            have.len()
        )));
    }
    let l = m.x.ln();
    let n = m.count as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for pm in &m.primes {
        let q = pm.q as f64;
        let lq = q.ln();
        s1 += lq / q.sqrt() * tf.phi_hat(lq / l) * pm.m1;
        s2 += lq / q * tf.phi_hat(2.0 * lq / l) * pm.m2;
    }
    s1 *= 2.0 / (l * n);
    s2 *= 2.0 / (l * n);

    let level = m.level.level();
    let (mut omitted, mut powers) = (0.0, 0.0);
    for_each_prime(floor_limit(m.x.powf(sigma))?, DEFAULT_SIEVE_CEILING, |p| {
        let q = p as f64;
        let lq = q.ln();
        if p < 5 || gcd(p, level) != 1 {
            omitted +=
                2.0 * lq / q.sqrt() * tf.phi_hat(lq / l) + 2.0 * lq / q * tf.phi_hat(2.0 * lq / l);
        }
        let mut k = 3;
        while tf.phi_hat(k as f64 * lq / l) > 0.0 {
            powers += 2.0 * lq / q.powf(k as f64 / 2.0) * tf.phi_hat(k as f64 * lq / l);
            k += 1;
        }
    })?;
    let budget = BudgetTerms {
        omitted_primes: 2.0 * omitted / l,
        prime_powers: 2.0 * powers / l,
        gamma_factor: gamma_factor_bound(tf, l),
        conductor: tf.phi_hat(0.0) * 496f64.ln() / l,
    };
    let phi0 = tf.phi(0.0);
    let rank_bound = (12.0 * tf.phi_hat(0.0) - s1 - s2) / phi0;
    Ok(ExplicitFormulaReport {
        level: m.level.to_string(),
        x: m.x,
        sigma,
        curves: m.count,
        primes: m.primes.len(),
        s1,
        s2,
        s2_pred: -phi0 / 2.0,
        rank_bound,
        rank_bound_with_budget: rank_bound + budget.total() / phi0,
        rank_bound_limit: 12.0 / sigma + 0.5,
        budget_terms: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_function_values() {
        let tf = TestFunction::new(0.6).unwrap();
        assert!((tf.phi(0.0) - 0.09).abs() < 1e-15);
        assert!((tf.phi_hat(0.0) - 0.15).abs() < 1e-15);
        assert_eq!(tf.phi_hat(0.6), 0.0);
        assert_eq!(tf.phi_hat(-0.7), 0.0);
        assert!(TestFunction::new(0.0).is_err());
    }

    #[test]
    fn small_theta_values() {
        assert_eq!(chebyshev_theta(1.0).unwrap(), 0.0);
        let want = 2f64.ln() + 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((chebyshev_theta(10.0).unwrap() - want).abs() < 1e-12);
        assert!(chebyshev_theta_with(1e6, 1000).is_err());
    }

    #[test]
    fn sieve_matches_simple_sieve_across_segments() {
        let mut got = Vec::new();
        for_each_prime(700_000, DEFAULT_SIEVE_CEILING, |p| got.push(p)).unwrap();
        assert_eq!(got, primes_up_to(700_000));
    }

    #[test]
    fn s2_sum_is_empty_for_small_x() {
        // X^{0.3} < 2 below X = 2^{10/3}.
        assert_eq!(s2_analytic_sum(10.0, 0.6).unwrap(), 0.0);
    }
}

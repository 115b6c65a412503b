//! Streaming reduction statistics of the `Gamma1(5)` family at large height.
//!
//! `t -> -1/t` permutes the parameters of each curve, and every curve has
//! exactly two rational parameters, so the half-region `|t0| < t1` together
//! with `t = 1` meets each curve once. The content of `(A(t), B(t))` is
//! trivial for this family, so curves are never stored: heights are tested
//! in place and reductions are looked up from residue tables.
//!
//! The scan over `t1` only visits `t0` in cells of `[-1, 1)` whose interval
//! lower bound of `max(|A(x)|^{1/4}, |B(x)|^{1/6})` allows height `<= B`.

use rayon::prelude::*;

use super::{
    builtin_parametrization, family_bounds, residue_census, LocalStatistics, ResidueCensus,
};
use crate::error::{Error, Result};
use crate::ff_curves::CurveCensus;
use crate::level_fibers::LevelSpec;

const CELLS: usize = 4096;

/// Cumulative counts per height bin.
#[derive(Clone, Debug)]
pub struct ScanReport {
    /// Height bounds, ascending.
    pub bins: Vec<u64>,
    pub qs: Vec<u64>,
    /// `counts[bin][q][code]` for curves of height `<= bins[bin]`.
    pub counts: Vec<Vec<Vec<u64>>>,
    pub totals: Vec<u64>,
}

impl ScanReport {
    pub fn statistics(&self, bin: usize, qi: usize, census: &CurveCensus) -> LocalStatistics {
        LocalStatistics::from_codes(&LevelSpec::gamma1(5), census, &self.counts[bin][qi])
    }

    pub fn bin_index(&self, bound: u64) -> Option<usize> {
        self.bins.iter().position(|&b| b == bound)
    }
}

/// Interval enclosure of a polynomial (ascending coefficients) on `[lo, hi]`.
fn interval_eval(c: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (c[c.len() - 1], c[c.len() - 1]);
    for &ci in c[..c.len() - 1].iter().rev() {
        let p = [a * lo, a * hi, b * lo, b * hi];
        a = p.iter().copied().fold(f64::INFINITY, f64::min) + ci;
        b = p.iter().copied().fold(f64::NEG_INFINITY, f64::max) + ci;
    }
    let slack = 1e-9 * (a.abs() + b.abs()) + 1e-9;
    (a - slack, b + slack)
}

fn abs_lower(enc: (f64, f64)) -> f64 {
    if enc.0 <= 0.0 && enc.1 >= 0.0 {
        0.0
    } else {
        enc.0.abs().min(enc.1.abs())
    }
}

#[inline]
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn exact_form(c: &[i128], t0: i128, t1: i128) -> i128 {
    let d = c.len() - 1;
    let mut acc = 0i128;
    for (i, &ci) in c.iter().enumerate() {
        acc += ci * t0.pow(i as u32) * t1.pow((d - i) as u32);
    }
    acc
}

fn ceil_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

struct Scanner<'a> {
    ca: Vec<f64>,
    cb: Vec<f64>,
    ia: Vec<i128>,
    ib: Vec<i128>,
    bins: &'a [u64],
    b4: Vec<f64>,
    b6: Vec<f64>,
    tables: &'a [ResidueCensus],
}

impl Scanner<'_> {
    /// Smallest bin containing the curve at `(t0, t1)`, if any.
    fn bin_of(&self, t0: i64, t1: i64) -> Option<usize> {
        let x = t0 as f64 / t1 as f64;
        let s2 = (t1 as f64) * (t1 as f64);
        let a = (horner(&self.ca, x) * s2 * s2).abs();
        let b = (horner(&self.cb, x) * s2 * s2 * s2).abs();
        let top = self.bins.len() - 1;
        let rel = 1e-9;
        if a > self.b4[top] * (1.0 + rel) || b > self.b6[top] * (1.0 + rel) {
            return None;
        }
        for k in 0..=top {
            let (la, lb) = (self.b4[k], self.b6[k]);
            if a <= la * (1.0 - rel) && b <= lb * (1.0 - rel) {
                return Some(k);
            }
            if a <= la * (1.0 + rel) && b <= lb * (1.0 + rel) {
                return self.exact_bin(t0, t1, k);
            }
        }
        None
    }

    fn exact_bin(&self, t0: i64, t1: i64, from: usize) -> Option<usize> {
        let a = exact_form(&self.ia, t0 as i128, t1 as i128).unsigned_abs();
        let b = exact_form(&self.ib, t0 as i128, t1 as i128).unsigned_abs();
        (from..self.bins.len()).find(|&k| {
            let bb = self.bins[k] as u128;
            a <= bb.pow(4) && b <= bb.pow(6)
        })
    }

    fn record(&self, acc: &mut Acc, t0: i64, t1: i64) -> Result<()> {
        if t0 == 0 {
            // t = 0 is a cusp.
            return Ok(());
        }
        let Some(k) = self.bin_of(t0, t1) else {
            return Ok(());
        };
        acc.totals[k] += 1;
        for (qi, tab) in self.tables.iter().enumerate() {
            let q = tab.q as i64;
            let code = tab.code(t0.rem_euclid(q) as u64, t1.rem_euclid(q) as u64);
            if code == tab.kinds.star() {
                let a = exact_form(&self.ia, t0 as i128, t1 as i128);
                let b = exact_form(&self.ib, t0 as i128, t1 as i128);
                return Err(Error::AdditiveInRepresentable {
                    level: "G1-5".into(),
                    q: tab.q,
                    a,
                    b,
                });
            }
            acc.counts[k][qi][code as usize] += 1;
        }
        Ok(())
    }
}

#[derive(Clone)]
struct Acc {
    counts: Vec<Vec<Vec<u64>>>,
    totals: Vec<u64>,
}

impl Acc {
    fn merge(mut self, other: Acc) -> Acc {
        for (x, y) in self.counts.iter_mut().zip(other.counts) {
            for (u, v) in x.iter_mut().zip(y) {
                for (a, b) in u.iter_mut().zip(v) {
                    *a += b;
                }
            }
        }
        for (a, b) in self.totals.iter_mut().zip(other.totals) {
            *a += b;
        }
        self
    }
}

/// Counts every `Gamma1(5)` curve of height `<= max(bins)` by smallest
/// containing bin and by reduction code at each census prime, then
/// accumulates over bins.
pub fn gamma1_5_scan(bins: &[u64], censuses: &[CurveCensus]) -> Result<ScanReport> {
    let mut bins = bins.to_vec();
    bins.sort_unstable();
    bins.dedup();
    let Some(&bmax) = bins.last() else {
        return Err(Error::BadInput("no height bins".into()));
    };
    if bmax > 1_000_000 {
        return Err(Error::Resource(format!(
            "height {bmax} is above the streaming ceiling 10^6"
        )));
    }
    let param = builtin_parametrization(&LevelSpec::gamma1(5))?;
    let bounds = family_bounds(&param)?;
    if !bounds.content.proven || !bounds.content.primes.is_empty() {
        return Err(Error::Invariant(format!(
            "Gamma1(5) content bound is {:?}",
            bounds.content
        )));
    }
    let tables = censuses
        .iter()
        .map(|c| residue_census(&param, c))
        .collect::<Result<Vec<_>>>()?;
    let (ia, ib) = param.binary_coefficients();
    let sc = Scanner {
        ca: ia.iter().map(|&c| c as f64).collect(),
        cb: ib.iter().map(|&c| c as f64).collect(),
        ia,
        ib,
        b4: bins.iter().map(|&b| (b as f64).powi(4)).collect(),
        b6: bins.iter().map(|&b| (b as f64).powi(6)).collect(),
        bins: &bins,
        tables: &tables,
    };
    let edge = |i: usize| -1.0 + 2.0 * i as f64 / CELLS as f64;
    let lower: Vec<f64> = (0..CELLS)
        .map(|i| {
            let a = abs_lower(interval_eval(&sc.ca, edge(i), edge(i + 1))).powf(0.25);
            let b = abs_lower(interval_eval(&sc.cb, edge(i), edge(i + 1))).powf(1.0 / 6.0);
            a.max(b) * (1.0 - 1e-9)
        })
        .collect();
    let floor = lower.iter().copied().fold(f64::INFINITY, f64::min);
    if floor <= 0.0 {
        return Err(Error::Invariant(
            "raw height vanishes on the parameter interval".into(),
        ));
    }
    let t1_max = (bmax as f64 / floor).floor() as i64 + 1;
    let spf = smallest_prime_factors(t1_max as usize);
    let empty = Acc {
        counts: vec![tables.iter().map(|t| vec![0u64; t.kinds.codes()]).collect(); bins.len()],
        totals: vec![0; bins.len()],
    };
    let mut acc = (1..=t1_max)
        .into_par_iter()
        .try_fold(
            || (empty.clone(), Vec::<bool>::new()),
            |(mut acc, mut sieve), t1| -> Result<(Acc, Vec<bool>)> {
                let limit = bmax as f64 / t1 as f64;
                let primes = prime_divisors(t1 as usize, &spf);
                let mut i = 0;
                while i < CELLS {
                    if lower[i] > limit {
                        i += 1;
                        continue;
                    }
                    let mut j = i;
                    while j + 1 < CELLS && lower[j + 1] <= limit {
                        j += 1;
                    }
                    let k = CELLS as i64;
                    let lo = ceil_div((2 * i as i64 - k) * t1, k).max(-t1 + 1);
                    let hi = (ceil_div((2 * (j as i64 + 1) - k) * t1, k) - 1).min(t1 - 1);
                    if lo <= hi {
                        sieve.clear();
                        sieve.resize((hi - lo + 1) as usize, true);
                        for &p in &primes {
                            let p = p as i64;
                            let mut m = ceil_div(lo, p) * p;
                            while m <= hi {
                                sieve[(m - lo) as usize] = false;
                                m += p;
                            }
                        }
                        for t0 in lo..=hi {
                            if sieve[(t0 - lo) as usize] {
                                sc.record(&mut acc, t0, t1)?;
                            }
                        }
                    }
                    i = j + 1;
                }
                Ok((acc, sieve))
            },
        )
        .map(|r| r.map(|(a, _)| a))
        .try_reduce(|| empty.clone(), |a, b| Ok(a.merge(b)))?;
    sc.record(&mut acc, 1, 1)?;
    for k in 1..bins.len() {
        acc.totals[k] += acc.totals[k - 1];
        for qi in 0..tables.len() {
            for c in 0..acc.counts[k][qi].len() {
                acc.counts[k][qi][c] += acc.counts[k - 1][qi][c];
            }
        }
    }
    Ok(ScanReport {
        bins,
        qs: censuses.iter().map(|c| c.p()).collect(),
        counts: acc.counts,
        totals: acc.totals,
    })
}

fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

fn prime_divisors(mut n: usize, spf: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    while n > 1 {
        let p = spf[n];
        out.push(p);
        while n % p as usize == 0 {
            n /= p as usize;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff_curves::{build_census, PrimeField};
    use crate::torsion_families::{generate_family, local_statistics};

    #[test]
    fn stream_matches_deduplicated_generation() {
        let param = builtin_parametrization(&LevelSpec::gamma1(5)).unwrap();
        let censuses: Vec<_> = [11u64, 13]
            .iter()
            .map(|&q| build_census(PrimeField::new(q).unwrap()).unwrap())
            .collect();
        let bins = [40u64, 90, 200];
        let rep = gamma1_5_scan(&bins, &censuses).unwrap();
        for (k, &b) in bins.iter().enumerate() {
            let fam = generate_family(&param, b).unwrap();
            assert!(fam.complete);
            assert_eq!(rep.totals[k], fam.curves.len() as u64, "B={b}");
            for (qi, c) in censuses.iter().enumerate() {
                let direct = local_statistics(&param.level, &fam.curves, c).unwrap();
                assert_eq!(rep.statistics(k, qi, c), direct, "B={b} q={}", c.p());
            }
        }
    }
}

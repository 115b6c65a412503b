//! How far a parameter point can be from its curve: the largest possible
//! `P(4,6)` content of `(A(x), B(x))` at a minimal `x`, and the constant
//! `c` in `H(A, B) >= c H(x)^e` before normalization.
//!
//! A prime carrying content divides `A` and `B` at a minimal point. On the
//! chart `x0 = 1` that forces a common root mod `p`, so `p` divides the
//! resultant; points with `p | x0` force `p` to divide coefficients. Each
//! candidate is then settled by a `p`-adic tree search.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::FamilyParametrization;
use crate::arith::{is_prime, primes_up_to};
use crate::error::{Error, Result};
use crate::level_fibers::LevelSpec;
use crate::wps_rational::Monomial;

/// Trial division limit when factoring resultants.
const TRIAL_LIMIT: u64 = 1_000_000;
/// Samples per edge of the unit sphere when locating the height constant.
const SPHERE_SAMPLES: usize = 20_000;
/// Node budget of one `p`-adic search.
const NODE_BUDGET: usize = 4_000_000;

/// Upper bound `prod p^k` on the content of `(A(x), B(x))` for minimal `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContentBound {
    /// Primes with a positive maximal exponent.
    pub primes: Vec<(u64, u32)>,
    /// Every prime that was examined.
    pub candidates: Vec<u64>,
    /// True when the candidate list is provably complete and every search finished.
    pub proven: bool,
}

impl ContentBound {
    pub fn max_content(&self) -> f64 {
        self.primes
            .iter()
            .map(|&(p, k)| (p as f64).powi(k as i32))
            .product()
    }

    pub fn is_content_prime(&self, p: u64) -> bool {
        self.primes.iter().any(|&(q, _)| q == p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyBounds {
    pub content: ContentBound,
    /// Minimum of `H(A(x), B(x)) / H(x)^e` over real `x`, found numerically.
    pub c_min: f64,
    pub e: u32,
}

impl FamilyBounds {
    /// Parameter height that every curve of height at most `bound` must come from.
    pub fn parameter_height(&self, bound: f64, margin: f64) -> f64 {
        (bound * self.content.max_content() / (self.c_min * margin)).powf(1.0 / self.e as f64)
    }
}

/// Cached per level: the resultant and the content search are not free.
pub fn family_bounds(param: &FamilyParametrization) -> Result<FamilyBounds> {
    static CACHE: OnceLock<Mutex<HashMap<LevelSpec, FamilyBounds>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("cache lock").get(&param.level) {
        return Ok(b.clone());
    }
    let b = FamilyBounds {
        content: content_bound(param)?,
        c_min: height_constant(param),
        e: param.e(),
    };
    cache
        .lock()
        .expect("cache lock")
        .insert(param.level, b.clone());
    Ok(b)
}

pub(super) fn eval_big(f: &[Monomial], x: &[BigInt]) -> BigInt {
    let mut acc = BigInt::zero();
    for m in f {
        let mut term = BigInt::from(m.coef);
        for (xi, &e) in x.iter().zip(&m.exps) {
            term *= xi.pow(e);
        }
        acc += term;
    }
    acc
}

/// Coefficients of `f(1, y)` in ascending powers of `y`.
fn chart_poly(f: &[Monomial]) -> Vec<BigInt> {
    let deg = f.iter().map(|m| m.exps[1]).max().unwrap_or(0) as usize;
    let mut c = vec![BigInt::zero(); deg + 1];
    for m in f {
        c[m.exps[1] as usize] += m.coef;
    }
    while c.len() > 1 && c.last().is_some_and(|v| v.is_zero()) {
        c.pop();
    }
    c
}

/// Determinant by fraction-free Gaussian elimination.
fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Resultant of two univariate polynomials (ascending coefficients).
pub(crate) fn resultant(f: &[BigInt], g: &[BigInt]) -> BigInt {
    let (df, dg) = (f.len() - 1, g.len() - 1);
    let n = df + dg;
    if n == 0 {
        return BigInt::one();
    }
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for i in 0..dg {
        for (j, c) in f.iter().rev().enumerate() {
            m[i][i + j] = c.clone();
        }
    }
    for i in 0..df {
        for (j, c) in g.iter().rev().enumerate() {
            m[dg + i][i + j] = c.clone();
        }
    }
    bareiss_det(m)
}

/// Prime factors found by trial division, and whether the factorization is complete.
fn small_prime_factors(n: &BigInt, primes: &[u64]) -> (Vec<u64>, bool) {
    let mut rem = n.abs();
    let mut out = Vec::new();
    if rem.is_zero() {
        return (out, false);
    }
    for &p in primes {
        let bp = BigInt::from(p);
        if (&rem % &bp).is_zero() {
            out.push(p);
            while (&rem % &bp).is_zero() {
                rem /= &bp;
            }
        }
        if rem.is_one() {
            return (out, true);
        }
    }
    match rem.to_u64() {
        Some(r) if is_prime(r) => {
            out.push(r);
            (out, true)
        }
        _ => (out, rem.is_one()),
    }
}

fn valuation(v: &BigInt, p: &BigInt) -> u32 {
    if v.is_zero() {
        return u32::MAX;
    }
    let mut v = v.clone();
    let mut e = 0;
    loop {
        let (q, r) = v.div_rem(p);
        if !r.is_zero() {
            return e;
        }
        v = q;
        e += 1;
    }
}

/// How a chart constrains one coordinate.
#[derive(Clone, Copy)]
enum Slot {
    Fixed(i64),
    /// Free, with residues mod `p` in `lo..hi`.
    Free(u64, u64),
}

enum Search {
    Found,
    Absent,
    Unresolved,
}

struct Searcher<'a> {
    param: &'a FamilyParametrization,
    p: u64,
    bp: BigInt,
    u1: u32,
    nodes: usize,
}

impl Searcher<'_> {
    fn minimal(&self, x: &[BigInt]) -> bool {
        !(valuation(&x[0], &self.bp) >= 1 && valuation(&x[1], &self.bp) >= self.u1)
    }

    /// Whether some minimal point in the chart reaches content exponent `k`.
    fn search(&mut self, slots: [Slot; 2], k: u32) -> Search {
        let mut roots: Vec<Vec<BigInt>> = vec![vec![]];
        for s in slots {
            let vals: Vec<i64> = match s {
                Slot::Fixed(v) => vec![v],
                Slot::Free(lo, hi) => (lo as i64..hi as i64).collect(),
            };
            roots = roots
                .into_iter()
                .flat_map(|r| {
                    vals.iter().map(move |&v| {
                        let mut r = r.clone();
                        r.push(BigInt::from(v));
                        r
                    })
                })
                .collect();
        }
        let mut unresolved = false;
        for r in roots {
            match self.dfs(&slots, r, 1, k) {
                Search::Found => return Search::Found,
                Search::Unresolved => unresolved = true,
                Search::Absent => {}
            }
        }
        if unresolved {
            Search::Unresolved
        } else {
            Search::Absent
        }
    }

    fn dfs(&mut self, slots: &[Slot; 2], x: Vec<BigInt>, j: u32, k: u32) -> Search {
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return Search::Unresolved;
        }
        let polys = &self.param.morphism.polys;
        let va = valuation(&eval_big(&polys[0], &x), &self.bp);
        let vb = valuation(&eval_big(&polys[1], &x), &self.bp);
        if (va < j && va < 4 * k) || (vb < j && vb < 6 * k) {
            return Search::Absent;
        }
        let pj = self.bp.pow(j);
        if va >= 4 * k && vb >= 6 * k && self.minimal(&x) {
            return Search::Found;
        }
        let mut unresolved = false;
        let p = self.p;
        let range = |s: &Slot| -> Vec<u64> {
            match s {
                Slot::Fixed(_) => vec![0],
                Slot::Free(..) => (0..p).collect(),
            }
        };
        let c0 = range(&slots[0]);
        let c1 = range(&slots[1]);
        for &d0 in &c0 {
            for &d1 in &c1 {
                let child = vec![&x[0] + &pj * d0, &x[1] + &pj * d1];
                match self.dfs(slots, child, j + 1, k) {
                    Search::Found => return Search::Found,
                    Search::Unresolved => unresolved = true,
                    Search::Absent => {}
                }
            }
        }
        if unresolved {
            Search::Unresolved
        } else {
            Search::Absent
        }
    }
}

/// Representatives of `Z_p^* / (Z_p^*)^u`. A unit is a `u`-th power as soon
/// as it is one mod `p^(2 v_p(u) + 2)`, so the classes live in that ring.
fn unit_classes(p: u64, u: u32) -> Vec<i64> {
    let mut v = 0;
    let mut m = u as u64;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    let modulus = p.pow(2 * v + 2);
    let units: Vec<u64> = (1..modulus).filter(|x| x % p != 0).collect();
    let powers: BTreeSet<u64> = units
        .iter()
        .map(|&x| (0..u).fold(1u64, |acc, _| acc * x % modulus))
        .collect();
    let mut covered = BTreeSet::new();
    let mut reps = Vec::new();
    for &x in &units {
        if covered.insert(x) {
            reps.push(x as i64);
            covered.extend(powers.iter().map(|&w| w * x % modulus));
        }
    }
    reps
}

/// Largest content exponent at `p`, or `None` if the search did not finish.
///
/// Charts: `x0 = 1`, or `p | x0` with `x1 = p^m y` for `m < u1`. In the
/// second case scaling by units fixes `y` to a class representative, so
/// every chart has one free coordinate.
fn max_exponent(param: &FamilyParametrization, p: u64) -> Option<u32> {
    let u1 = param.source().entries()[1];
    let mut s = Searcher {
        param,
        p,
        bp: BigInt::from(p),
        u1,
        nodes: 0,
    };
    let mut charts = vec![[Slot::Fixed(1), Slot::Free(0, p)]];
    for m in 0..u1 {
        for y in unit_classes(p, u1) {
            charts.push([Slot::Free(0, 1), Slot::Fixed(y * (p as i64).pow(m))]);
        }
    }
    let mut best = 0;
    for k in 1..=24 {
        let mut found = false;
        for c in &charts {
            s.nodes = 0;
            match s.search(*c, k) {
                Search::Found => {
                    found = true;
                    break;
                }
                Search::Absent => {}
                Search::Unresolved => return None,
            }
        }
        if !found {
            return Some(best);
        }
        best = k;
    }
    None
}

/// Candidate primes and the exact maximal content exponent at each.
pub fn content_bound(param: &FamilyParametrization) -> Result<ContentBound> {
    if param.source().len() != 2 || param.source().entries()[0] != 1 {
        return Err(Error::BadInput(format!(
            "content search needs a source P(1,u), got {}",
            param.source()
        )));
    }
    let [fa, fb] = [&param.morphism.polys[0], &param.morphism.polys[1]];
    let primes = primes_up_to(TRIAL_LIMIT);
    let res = resultant(&chart_poly(fa), &chart_poly(fb));
    if res.is_zero() {
        return Err(Error::Invariant(format!(
            "A and B share a factor for {}",
            param.level
        )));
    }
    let (mut cands, mut proven) = small_prime_factors(&res, &primes);
    let at_infinity = |f: &[Monomial]| -> BigInt {
        f.iter()
            .filter(|m| m.exps[0] == 0)
            .map(|m| BigInt::from(m.coef))
            .sum()
    };
    let g = at_infinity(fa).gcd(&at_infinity(fb));
    let (more, ok) = small_prime_factors(&g, &primes);
    cands.extend(more);
    proven &= ok || g.is_zero();
    if param.source().entries()[1] > 1 {
        for m in fa.iter().chain(fb.iter()) {
            let (more, ok) = small_prime_factors(&BigInt::from(m.coef), &primes);
            cands.extend(more);
            proven &= ok;
        }
    }
    let cands: BTreeSet<u64> = cands.into_iter().collect();
    let mut out = Vec::new();
    for &p in &cands {
        match max_exponent(param, p) {
            Some(0) => {}
            Some(k) => out.push((p, k)),
            None => proven = false,
        }
    }
    Ok(ContentBound {
        primes: out,
        candidates: cands.into_iter().collect(),
        proven,
    })
}

fn eval_f64(f: &[Monomial], x: &[f64]) -> f64 {
    f.iter()
        .map(|m| m.coef as f64 * x[0].powi(m.exps[0] as i32) * x[1].powi(m.exps[1] as i32))
        .sum()
}

/// `max(|A|^{1/4}, |B|^{1/6})` at a real point.
pub(crate) fn raw_height(param: &FamilyParametrization, x: &[f64]) -> f64 {
    let a = eval_f64(&param.morphism.polys[0], x).abs().powf(0.25);
    let b = eval_f64(&param.morphism.polys[1], x).abs().powf(1.0 / 6.0);
    a.max(b)
}

/// Minimum of the raw height over `max(|x0|, |x1|^{1/u1}) = 1`.
pub fn height_constant(param: &FamilyParametrization) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=SPHERE_SAMPLES {
        let s = -1.0 + 2.0 * i as f64 / SPHERE_SAMPLES as f64;
        for x in [[1.0, s], [-1.0, s], [s, 1.0], [s, -1.0]] {
            best = best.min(raw_height(param, &x));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torsion_families::builtin_parametrization;
    use crate::wps_rational::{content_ideal, WeightVector};

    #[test]
    fn resultant_of_linear_forms() {
        // (y - 2) and (y - 5): resultant 3 up to sign.
        let f = vec![BigInt::from(-2), BigInt::one()];
        let g = vec![BigInt::from(-5), BigInt::one()];
        assert_eq!(resultant(&f, &g).abs(), BigInt::from(3));
    }

    #[test]
    fn unit_class_counts() {
        assert_eq!(unit_classes(3, 3), vec![1, 2, 4]);
        assert_eq!(unit_classes(2, 3), vec![1]);
        assert_eq!(unit_classes(2, 2).len(), 4);
        assert_eq!(unit_classes(7, 1), vec![1]);
    }

    #[test]
    fn gamma1_5_has_no_content() {
        let p = builtin_parametrization(&LevelSpec::gamma1(5)).unwrap();
        let b = content_bound(&p).unwrap();
        assert!(b.proven);
        assert!(b.primes.is_empty(), "{b:?}");
    }

    /// The search result agrees with brute force over small parameters.
    #[test]
    fn content_bound_dominates_brute_force() {
        let w = WeightVector::new(vec![4, 6]).unwrap();
        for n in [3u64, 4, 6, 7, 8] {
            let p = builtin_parametrization(&LevelSpec::gamma1(n)).unwrap();
            let b = content_bound(&p).unwrap();
            assert!(b.proven, "N={n}: {b:?}");
            let u1 = p.source().entries()[1];
            let lim: i64 = if u1 == 1 { 40 } else { 12 };
            let lim1 = lim.pow(u1);
            let mut seen = 1f64;
            for x0 in -lim..=lim {
                for x1 in -lim1..=lim1 {
                    let x = [x0 as i128, x1 as i128];
                    if crate::wps_rational::content_ideal(p.source(), &x)
                        .map_or(true, |c| c != crate::Q::one())
                    {
                        continue;
                    }
                    let (a, bb) = p.eval(&x).unwrap();
                    if a == 0 && bb == 0 {
                        continue;
                    }
                    let c = content_ideal(&w, &[a, bb]).unwrap();
                    let c = *c.numer() as f64;
                    assert!(c <= b.max_content(), "N={n} x={x:?} content {c}");
                    seen = seen.max(c);
                }
            }
            assert!(seen >= 1.0);
        }
    }
}

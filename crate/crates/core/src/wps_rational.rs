//! Rational points of weighted projective spaces `P(w)` over `Q`.
//!
//! A point is an integer tuple up to `x ~ (l^{w_0} x_0, ..., l^{w_n} x_n)`.
//! Minimal representatives have trivial content ideal; the sign is fixed by
//! making the first nonzero odd-weight coordinate positive.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{pow_mod, rem_i128, Q};
use crate::error::{Error, Result};

/// Default ceiling on the number of integer tuples an enumeration may scan.
pub const DEFAULT_SCAN_CEILING: u128 = 1 << 34;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightVector(Vec<u32>);

impl WeightVector {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|&w| w == 0) {
            return Err(Error::BadInput(format!(
                "weights must be positive, got {entries:?}"
            )));
        }
        Ok(WeightVector(entries))
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn min(&self) -> u32 {
        *self.0.iter().min().expect("nonempty")
    }

    fn all_even(&self) -> bool {
        self.0.iter().all(|w| w % 2 == 0)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|w| w.to_string()).collect();
        write!(f, "P({})", parts.join(","))
    }
}

/// A normalized point: content 1 and canonical sign.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WpsPoint {
    weights: WeightVector,
    coords: Vec<i128>,
}

impl WpsPoint {
    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn coords(&self) -> &[i128] {
        &self.coords
    }

    /// `max_j |x_j|^{1/w_j}`.
    pub fn height(&self) -> f64 {
        self.coords
            .iter()
            .zip(self.weights.entries())
            .map(|(&x, &w)| (x.unsigned_abs() as f64).powf(1.0 / w as f64))
            .fold(0.0, f64::max)
    }

    /// `H^L = max_j |x_j|^{L/w_j}`, exact; `L` must be a multiple of every weight.
    pub fn height_power(&self, l: u32) -> Option<BigUint> {
        let mut best = BigUint::zero();
        for (&x, &w) in self.coords.iter().zip(self.weights.entries()) {
            if l % w != 0 {
                return None;
            }
            let v = BigUint::from(x.unsigned_abs()).pow(l / w);
            if v > best {
                best = v;
            }
        }
        Some(best)
    }

    /// `H^12`, defined when every weight divides 12 (e.g. `max(|A|^3, |B|^2)` on `P(4,6)`).
    pub fn height12(&self) -> Option<BigUint> {
        self.height_power(12)
    }

    /// Exact test of `H <= bound` for an integer bound.
    pub fn height_at_most(&self, bound: u64) -> bool {
        self.coords
            .iter()
            .zip(self.weights.entries())
            .all(|(&x, &w)| match max_coordinate(bound, w) {
                Some(m) => x.unsigned_abs() <= m,
                None => true,
            })
    }

    pub fn to_json_line(&self) -> String {
        let mut obj = serde_json::Map::new();
        let coords: Vec<serde_json::Value> = self
            .coords
            .iter()
            .map(|c| big_number(&c.to_string()))
            .collect();
        obj.insert("coords".into(), serde_json::Value::Array(coords));
        if let Some(h) = self.height12() {
            obj.insert("height12".into(), big_number(&h.to_string()));
        }
        serde_json::Value::Object(obj).to_string()
    }
}

/// A JSON number carrying an arbitrary-precision integer literal.
pub(crate) fn big_number(digits: &str) -> serde_json::Value {
    serde_json::Value::Number(digits.parse().expect("integer literal"))
}

/// `floor(bound^w)`, or `None` when it exceeds `u128`.
pub fn max_coordinate(bound: u64, w: u32) -> Option<u128> {
    (bound as u128).checked_pow(w)
}

fn check_nonzero(x: &[i128]) -> Result<()> {
    if x.iter().all(|&c| c == 0) {
        return Err(Error::BadInput(
            "the zero vector is not a point of weighted projective space".into(),
        ));
    }
    Ok(())
}

/// Primes `p` with their multiplicity `k = min_j floor(ord_p(x_j)/w_j) > 0`.
pub fn content_factors(w: &WeightVector, x: &[i128]) -> Result<Vec<(u128, u32)>> {
    if w.len() != x.len() {
        return Err(Error::BadInput(format!(
            "{} coordinates for {}",
            x.len(),
            w
        )));
    }
    check_nonzero(x)?;
    let g = x.iter().fold(0u128, |g, &c| gcd_u128(g, c.unsigned_abs()));
    let ords = |p: u128| -> u32 {
        x.iter()
            .zip(w.entries())
            .filter(|(&c, _)| c != 0)
            .map(|(&c, &wj)| {
                let mut v = c.unsigned_abs();
                let mut e = 0;
                while v % p == 0 {
                    v /= p;
                    e += 1;
                }
                e / wj
            })
            .min()
            .expect("some coordinate is nonzero")
    };
    if w.entries().iter().all(|&wj| wj == 1) {
        return Ok(factor_u128(g));
    }
    let wmin = w.min();
    let mut out = Vec::new();
    let mut rem = g;
    let mut p: u128 = 2;
    while p.checked_pow(wmin.max(2)).is_some_and(|pp| pp <= rem) {
        if rem % p == 0 {
            while rem % p == 0 {
                rem /= p;
            }
            let k = ords(p);
            if k > 0 {
                out.push((p, k));
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rem > 1 && wmin == 1 {
        let k = ords(rem);
        if k > 0 {
            out.push((rem, k));
        }
    }
    Ok(out)
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn factor_u128(mut n: u128) -> Vec<(u128, u32)> {
    let mut out = Vec::new();
    let mut p: u128 = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `I_w(x) = prod_p p^{min_j floor(ord_p(x_j)/w_j)}`.
pub fn content_ideal(w: &WeightVector, x: &[i128]) -> Result<Q> {
    let mut c: i128 = 1;
    for (p, k) in content_factors(w, x)? {
        let pk = (p as i128)
            .checked_pow(k)
            .ok_or_else(|| Error::Overflow("content ideal".into()))?;
        c = c
            .checked_mul(pk)
            .ok_or_else(|| Error::Overflow("content ideal".into()))?;
    }
    Ok(Q::from_integer(c))
}

/// Divides out the content and fixes the sign.
pub fn normalize(w: &WeightVector, x: &[i128]) -> Result<WpsPoint> {
    let mut coords = x.to_vec();
    for (p, k) in content_factors(w, x)? {
        for (c, &wj) in coords.iter_mut().zip(w.entries()).filter(|(c, _)| **c != 0) {
            let d = p
                .checked_pow(k * wj)
                .ok_or_else(|| Error::Overflow("normalization".into()))?;
            *c = (c.unsigned_abs() / d) as i128 * c.signum();
        }
    }
    canonicalize_sign(w, &mut coords);
    Ok(WpsPoint {
        weights: w.clone(),
        coords,
    })
}

fn canonicalize_sign(w: &WeightVector, coords: &mut [i128]) {
    if w.all_even() {
        return;
    }
    let lead = coords
        .iter()
        .zip(w.entries())
        .find(|(&c, &wj)| wj % 2 == 1 && c != 0)
        .map(|(&c, _)| c);
    if lead.is_some_and(|c| c < 0) {
        for (c, &wj) in coords.iter_mut().zip(w.entries()) {
            if wj % 2 == 1 {
                *c = -*c;
            }
        }
    }
}

fn is_sign_canonical(w: &WeightVector, coords: &[i128]) -> bool {
    w.all_even()
        || coords
            .iter()
            .zip(w.entries())
            .find(|(&c, &wj)| wj % 2 == 1 && c != 0)
            .map_or(true, |(&c, _)| c > 0)
}

/// `l *_w x`.
pub fn scale(w: &WeightVector, x: &[i128], l: i128) -> Result<Vec<i128>> {
    x.iter()
        .zip(w.entries())
        .map(|(&c, &wj)| {
            l.checked_pow(wj)
                .and_then(|f| f.checked_mul(c))
                .ok_or_else(|| Error::Overflow("weighted scaling".into()))
        })
        .collect()
}

/// Reduction of a rational point modulo a prime.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReducedPoint {
    pub q: u64,
    pub value: Reduction,
}

/// Either reduced coordinates or the dummy point `*` (every coordinate vanishes).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Reduction {
    Point(Vec<u64>),
    Star,
}

impl ReducedPoint {
    /// Lexicographically least representative of the `F_q^*`-orbit, or `None` for `*`.
    pub fn canonical(&self, w: &WeightVector) -> Option<Vec<u64>> {
        match &self.value {
            Reduction::Point(c) => Some(canonical_mod_q(w, c, self.q)),
            Reduction::Star => None,
        }
    }
}

pub fn canonical_mod_q(w: &WeightVector, coords: &[u64], q: u64) -> Vec<u64> {
    (1..q)
        .map(|u| {
            coords
                .iter()
                .zip(w.entries())
                .map(|(&c, &wj)| c * pow_mod(u, wj as u64, q) % q)
                .collect::<Vec<u64>>()
        })
        .min()
        .expect("q >= 2")
}

/// Reduces a normalized point mod `q`; the content at `q` is already trivial.
pub fn reduce_mod_p(point: &WpsPoint, q: u64) -> ReducedPoint {
    let coords: Vec<u64> = point.coords.iter().map(|&c| rem_i128(c, q)).collect();
    let value = if coords.iter().all(|&c| c == 0) {
        Reduction::Star
    } else {
        Reduction::Point(coords)
    };
    ReducedPoint { q, value }
}

/// Every normalized point of height at most `bound`, each once, in
/// lexicographic order of coordinates. Supports two or three coordinates.
pub fn enumerate_points(w: &WeightVector, bound: f64) -> Result<Vec<WpsPoint>> {
    enumerate_points_with_ceiling(w, bound, DEFAULT_SCAN_CEILING)
}

pub fn enumerate_points_with_ceiling(
    w: &WeightVector,
    bound: f64,
    ceiling: u128,
) -> Result<Vec<WpsPoint>> {
    let mut out = Vec::new();
    for_each_point(w, bound, ceiling, |x| {
        out.push(WpsPoint {
            weights: w.clone(),
            coords: x.to_vec(),
        });
        Ok(())
    })?;
    Ok(out)
}

/// Streaming form of [`enumerate_points_with_ceiling`]: calls `f` on the
/// coordinates of each point instead of collecting them.
pub fn for_each_point<F>(w: &WeightVector, bound: f64, ceiling: u128, mut f: F) -> Result<()>
where
    F: FnMut(&[i128]) -> Result<()>,
{
    if !(2..=3).contains(&w.len()) {
        return Err(Error::BadInput(format!(
            "enumeration supports 2 or 3 coordinates, got {}",
            w
        )));
    }
    if !(bound >= 0.0) {
        return Err(Error::BadInput(format!(
            "height bound {bound} must be nonnegative"
        )));
    }
    let limits: Vec<i128> = w
        .entries()
        .iter()
        .map(|&wj| box_limit(bound, wj))
        .collect::<Result<_>>()?;
    let total = limits
        .iter()
        .try_fold(1u128, |acc, &m| acc.checked_mul(2 * m as u128 + 1));
    match total {
        Some(t) if t <= ceiling => {}
        _ => {
            return Err(Error::Resource(format!(
                "enumerating {} up to height {bound} scans more than {ceiling} tuples",
                w
            )))
        }
    }
    let mut x: Vec<i128> = limits.iter().map(|&m| -m).collect();
    loop {
        if x.iter().any(|&c| c != 0)
            && is_sign_canonical(w, &x)
            && content_factors(w, &x)?.is_empty()
        {
            f(&x)?;
        }
        let mut j = x.len();
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            if x[j] < limits[j] {
                x[j] += 1;
                break;
            }
            x[j] = -limits[j];
        }
    }
}

/// Largest integer `m` with `m <= bound^w`.
fn box_limit(bound: f64, w: u32) -> Result<i128> {
    if bound.fract() == 0.0 && bound < 1e18 {
        return max_coordinate(bound as u64, w)
            .and_then(|m| i128::try_from(m).ok())
            .ok_or_else(|| Error::Resource(format!("box side {bound}^{w} overflows")));
    }
    let approx = bound.powi(w as i32);
    if !approx.is_finite() || approx > 1e36 {
        return Err(Error::Resource(format!("box side {bound}^{w} overflows")));
    }
    let mut m = approx.floor() as i128;
    let root = |v: i128| (v as f64).powf(1.0 / w as f64);
    while m > 0 && root(m) > bound {
        m -= 1;
    }
    while root(m + 1) <= bound {
        m += 1;
    }
    Ok(m)
}

/// One monomial `coef * prod x_i^{exps_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: i128,
    pub exps: Vec<u32>,
}

pub type Poly = Vec<Monomial>;

/// A morphism `P(u) -> P(w)` given by weighted-homogeneous polynomials with
/// `deg f_j = e * w_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WpsMorphism {
    pub source: WeightVector,
    pub target: WeightVector,
    pub polys: Vec<Poly>,
    pub e: u32,
}

impl WpsMorphism {
    pub fn new(
        source: WeightVector,
        target: WeightVector,
        polys: Vec<Poly>,
        e: u32,
    ) -> Result<Self> {
        if polys.len() != target.len() {
            return Err(Error::BadInput(format!(
                "{} polynomials for target {}",
                polys.len(),
                target
            )));
        }
        for (j, f) in polys.iter().enumerate() {
            let want = e * target.entries()[j];
            for m in f {
                if m.exps.len() != source.len() {
                    return Err(Error::BadInput(format!(
                        "monomial {m:?} has the wrong number of variables"
                    )));
                }
                let deg: u32 = m
                    .exps
                    .iter()
                    .zip(source.entries())
                    .map(|(a, b)| a * b)
                    .sum();
                if deg != want {
                    return Err(Error::BadInput(format!(
                        "component {j} has a monomial of weighted degree {deg}, expected {want}"
                    )));
                }
            }
        }
        Ok(WpsMorphism {
            source,
            target,
            polys,
            e,
        })
    }

    /// `f(x)` with overflow checking.
    pub fn eval(&self, x: &[i128]) -> Result<Vec<i128>> {
        if x.len() != self.source.len() {
            return Err(Error::BadInput(format!(
                "{} coordinates for {}",
                x.len(),
                self.source
            )));
        }
        self.polys.iter().map(|f| eval_poly(f, x)).collect()
    }

    /// The morphism with every coefficient multiplied by `m`.
    pub fn scaled(&self, m: i128) -> Result<Self> {
        let polys = self
            .polys
            .iter()
            .map(|f| {
                f.iter()
                    .map(|mono| {
                        let coef = mono
                            .coef
                            .checked_mul(m)
                            .ok_or_else(|| Error::Overflow("coefficient".into()))?;
                        Ok(Monomial {
                            coef,
                            exps: mono.exps.clone(),
                        })
                    })
                    .collect::<Result<Poly>>()
            })
            .collect::<Result<Vec<Poly>>>()?;
        Ok(WpsMorphism {
            polys,
            ..self.clone()
        })
    }
}

pub(crate) fn eval_poly(f: &Poly, x: &[i128]) -> Result<i128> {
    let overflow = || Error::Overflow("polynomial evaluation".into());
    let mut acc: i128 = 0;
    for m in f {
        let mut term = m.coef;
        for (&xi, &e) in x.iter().zip(&m.exps) {
            term = term
                .checked_mul(xi.checked_pow(e).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
        }
        acc = acc.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(acc)
}

/// `delta_f(x) = I_w(f(x)) I_u(x)^{-e}` for any (not necessarily minimal) representative.
pub fn defect_raw(f: &WpsMorphism, x: &[i128]) -> Result<Q> {
    let y = f.eval(x)?;
    if y.iter().all(|&c| c == 0) {
        return Err(Error::BadInput(format!(
            "{x:?} lies in the base locus of the morphism"
        )));
    }
    let iu = content_ideal(&f.source, x)?;
    let iw = content_ideal(&f.target, &y)?;
    let mut denom = Q::one();
    for _ in 0..f.e {
        denom *= iu;
    }
    Ok(iw / denom)
}

/// Defect at a normalized point, i.e. the content of `f(x)`.
pub fn defect(f: &WpsMorphism, point: &WpsPoint) -> Result<Q> {
    if point.weights != f.source {
        return Err(Error::BadInput(format!(
            "point of {} for a morphism from {}",
            point.weights, f.source
        )));
    }
    defect_raw(f, &point.coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;

    fn w(v: &[u32]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn content_examples() {
        assert_eq!(
            content_ideal(&w(&[4, 6]), &[16, 64]).unwrap(),
            Q::from_integer(2)
        );
        assert_eq!(
            content_ideal(&w(&[1, 1]), &[7, 9]).unwrap(),
            Q::from_integer(1)
        );
        assert_eq!(
            content_ideal(&w(&[4, 6]), &[2, 2]).unwrap(),
            Q::from_integer(1)
        );
        assert_eq!(
            content_ideal(&w(&[4, 6]), &[0, 64 * 729]).unwrap(),
            Q::from_integer(6)
        );
        assert!(content_ideal(&w(&[4, 6]), &[0, 0]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let p = normalize(&w(&[4, 6]), &[16, 64]).unwrap();
        assert_eq!(p.coords(), &[1, 1]);
        assert_eq!(p.height(), 1.0);
        let p = normalize(&w(&[4, 6]), &[-3, 2]).unwrap();
        assert_eq!(p.coords(), &[-3, 2]);
        assert!((p.height() - 3f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(normalize(&w(&[1, 1]), &[6, 10]).unwrap().coords(), &[3, 5]);
        assert_eq!(
            normalize(&w(&[1, 1]), &[-6, 10]).unwrap().coords(),
            &[3, -5]
        );
        assert_eq!(
            normalize(&w(&[1, 2]), &[-2, -12]).unwrap().coords(),
            &[1, -3]
        );
    }

    #[test]
    fn reduction_examples() {
        let p = normalize(&w(&[4, 6]), &[-3, 2]).unwrap();
        assert_eq!(reduce_mod_p(&p, 5).value, Reduction::Point(vec![2, 2]));
        let p = normalize(&w(&[4, 6]), &[5, 5]).unwrap();
        assert_eq!(reduce_mod_p(&p, 5).value, Reduction::Star);
    }

    #[test]
    fn enumeration_matches_double_loop() {
        let pts = enumerate_points(&w(&[1, 1]), 2.0).unwrap();
        let mut oracle = 0;
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                let g = gcd(a.unsigned_abs(), b.unsigned_abs());
                if g == 1 && (a > 0 || (a == 0 && b > 0)) {
                    oracle += 1;
                }
            }
        }
        assert_eq!(pts.len(), oracle);
        let pts = enumerate_points(&w(&[4, 6]), 1.0).unwrap();
        assert_eq!(pts.len(), 8);
        assert!(enumerate_points(&w(&[4, 6]), 0.5).unwrap().is_empty());
        assert!(matches!(
            enumerate_points_with_ceiling(&w(&[4, 6]), 100.0, 1000),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn identity_defect() {
        let id = WpsMorphism::new(
            w(&[1, 1]),
            w(&[1, 1]),
            vec![
                vec![Monomial {
                    coef: 1,
                    exps: vec![1, 0],
                }],
                vec![Monomial {
                    coef: 1,
                    exps: vec![0, 1],
                }],
            ],
            1,
        )
        .unwrap();
        for p in enumerate_points(&w(&[1, 1]), 5.0).unwrap() {
            assert_eq!(defect(&id, &p).unwrap(), Q::one());
        }
        assert_eq!(defect_raw(&id, &[4, 6]).unwrap(), Q::one());
        assert!(WpsMorphism::new(
            w(&[1, 1]),
            w(&[1]),
            vec![vec![Monomial {
                coef: 1,
                exps: vec![2, 0]
            }]],
            1
        )
        .is_err());
    }
}

//! Short Weierstrass curves over prime fields and exhaustive censuses of
//! their isomorphism classes.
//!
//! A census lists one record per `F_p`-isomorphism class of curves
//! `y^2 = x^3 + Ax + B`, where `(A, B) ~ (u^4 A, u^6 B)` for `u` in `F_p^*`.
//! The representative of a class is the lexicographically least pair in its
//! orbit, so censuses are reproducible and can be cached on disk.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factor, gcd, inv_mod, is_prime, isqrt, Q};
use crate::error::{Error, Result};

/// Default ceiling on the characteristic for census building.
pub const DEFAULT_MAX_PRIME: u64 = 5003;

/// The field `F_p` for a prime `p >= 5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p < 5 {
            return Err(Error::BadInput(format!(
                "{p} is below 5; short Weierstrass form needs p >= 5"
            )));
        }
        if !is_prime(p) {
            return Err(Error::BadInput(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    pub fn p(self) -> u64 {
        self.p
    }
}

/// `y^2 = x^3 + Ax + B` over `F_p` with `4A^3 + 27B^2 != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShortWeierstrassCurve {
    field: PrimeField,
    a: u64,
    b: u64,
}

impl ShortWeierstrassCurve {
    /// Coefficients are reduced into `[0, p)`; singular pairs are rejected.
    pub fn new(field: PrimeField, a: i64, b: i64) -> Result<Self> {
        let p = field.p as i64;
        let (a, b) = (a.rem_euclid(p) as u64, b.rem_euclid(p) as u64);
        if is_singular(field.p, a, b) {
            return Err(Error::BadInput(format!(
                "A={a}, B={b} is singular over F_{p}"
            )));
        }
        Ok(ShortWeierstrassCurve { field, a, b })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// The coefficient `A`.
    pub fn a(&self) -> u64 {
        self.a
    }

    /// The coefficient `B`.
    pub fn b(&self) -> u64 {
        self.b
    }
}

/// Whether `4A^3 + 27B^2 = 0` in `F_p`.
pub fn is_singular(p: u64, a: u64, b: u64) -> bool {
    let a3 = a * a % p * a % p;
    let b2 = b * b % p;
    (4 * a3 + 27 * b2) % p == 0
}

/// One `F_p`-isomorphism class of elliptic curves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoClassRecord {
    pub representative: ShortWeierstrassCurve,
    pub trace_a: i64,
    /// Invariant factors `(n1, n2)` with `n2 | n1`.
    pub group: (u64, u64),
    pub aut_count: u32,
    pub orbit_size: u64,
}

/// All isomorphism classes over one prime field, sorted by representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveCensus {
    pub field: PrimeField,
    pub classes: Vec<IsoClassRecord>,
}

/// Lookup tables for the quadratic character and square roots in `F_p`.
pub(crate) struct FieldTables {
    p: u64,
    chi: Vec<i8>,
    sqrt: Vec<u32>,
}

const NO_ROOT: u32 = u32::MAX;

impl FieldTables {
    pub(crate) fn new(p: u64) -> Self {
        let n = p as usize;
        let mut chi = vec![-1i8; n];
        let mut sqrt = vec![NO_ROOT; n];
        chi[0] = 0;
        sqrt[0] = 0;
        for y in 1..=(p - 1) / 2 {
            let s = (y * y % p) as usize;
            chi[s] = 1;
            sqrt[s] = y as u32;
        }
        FieldTables { p, chi, sqrt }
    }

    #[inline]
    fn rhs(&self, a: u64, b: u64, x: u64) -> u64 {
        let p = self.p;
        ((x * x % p + a) % p * x + b) % p
    }

    /// `#E(F_p)` by the character sum.
    pub(crate) fn point_count(&self, a: u64, b: u64) -> u64 {
        let mut s: i64 = 0;
        for x in 0..self.p {
            s += self.chi[self.rhs(a, b, x) as usize] as i64;
        }
        (self.p as i64 + 1 + s) as u64
    }
}

type Pt = Option<(u64, u64)>;

/// Affine group law on one curve.
struct Arith {
    p: u64,
    a: u64,
}

impl Arith {
    fn add(&self, u: Pt, v: Pt) -> Pt {
        let p = self.p;
        let (x1, y1) = match u {
            None => return v,
            Some(q) => q,
        };
        let (x2, y2) = match v {
            None => return u,
            Some(q) => q,
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return None;
            }
            let num = (3 * x1 % p * x1 + self.a) % p;
            num * inv_mod(2 * y1 % p, p).expect("nonzero") % p
        } else {
            let num = (y2 + p - y1) % p;
            num * inv_mod((x2 + p - x1) % p, p).expect("nonzero") % p
        };
        let x3 = (lambda * lambda % p + 2 * p - x1 - x2) % p;
        let y3 = (lambda * ((x1 + p - x3) % p) % p + p - y1) % p;
        Some((x3, y3))
    }

    fn mul(&self, mut k: u64, pt: Pt) -> Pt {
        let mut acc = None;
        let mut base = pt;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }
}

/// `#E(F_p) = p + 1 + sum_x chi(x^3 + Ax + B)`.
pub fn point_count(curve: &ShortWeierstrassCurve) -> u64 {
    FieldTables::new(curve.field.p).point_count(curve.a, curve.b)
}

/// All affine points; the point at infinity is implicit.
fn affine_points(t: &FieldTables, a: u64, b: u64) -> Vec<(u64, u64)> {
    let mut pts = Vec::new();
    for x in 0..t.p {
        let r = t.rhs(a, b, x);
        let y = t.sqrt[r as usize];
        if y == NO_ROOT {
            continue;
        }
        let y = y as u64;
        pts.push((x, y));
        if y != 0 {
            pts.push((x, t.p - y));
        }
    }
    pts
}

/// Invariant factors `(n1, n2)` of `E(F_p)`.
pub fn group_structure(curve: &ShortWeierstrassCurve) -> (u64, u64) {
    let t = FieldTables::new(curve.field.p);
    let n = t.point_count(curve.a, curve.b);
    group_structure_with(&t, curve.a, curve.b, n)
}

/// The `l`-primary part of `E(F_p)` is cyclic unless `l^2 | N` and
/// `l | p - 1`; in the remaining cases the Sylow subgroup is generated from
/// cofactor multiples of points and its exponent read off directly.
pub(crate) fn group_structure_with(t: &FieldTables, a: u64, b: u64, n: u64) -> (u64, u64) {
    let p = t.p;
    let mut n2 = 1;
    for (l, e) in factor(n) {
        if e < 2 || (p - 1) % l != 0 {
            continue;
        }
        let le = l.pow(e);
        let (_, small) = sylow_exponents(t, a, b, n / le, l, le);
        n2 *= l.pow(small);
    }
    (n / n2, n2)
}

fn sylow_exponents(
    t: &FieldTables,
    a: u64,
    b: u64,
    cofactor: u64,
    l: u64,
    target: u64,
) -> (u32, u32) {
    let ar = Arith { p: t.p, a };
    let mut elems: Vec<Pt> = vec![None];
    let mut set: HashSet<Pt> = elems.iter().copied().collect();
    'outer: for x in 0..t.p {
        let y = t.sqrt[t.rhs(a, b, x) as usize];
        if y == NO_ROOT {
            continue;
        }
        let q = ar.mul(cofactor, Some((x, y as u64)));
        if set.contains(&q) {
            continue;
        }
        let base = elems.clone();
        let base_set = set.clone();
        let mut r = q;
        while !base_set.contains(&r) {
            for &s in &base {
                let c = ar.add(s, r);
                if set.insert(c) {
                    elems.push(c);
                }
            }
            r = ar.add(r, q);
        }
        if elems.len() as u64 == target {
            break 'outer;
        }
    }
    debug_assert_eq!(elems.len() as u64, target);
    let mut total = 0;
    let mut tt = target;
    while tt > 1 {
        tt /= l;
        total += 1;
    }
    let mut big = 0;
    for &s in &elems {
        let mut k = 0;
        let mut r = s;
        while r.is_some() {
            r = ar.mul(l, r);
            k += 1;
        }
        big = big.max(k);
    }
    (big, total - big)
}

/// Reference implementation: counts `l^j`-torsion over the full point list.
pub fn group_structure_naive(curve: &ShortWeierstrassCurve) -> (u64, u64) {
    let t = FieldTables::new(curve.field.p);
    let pts = affine_points(&t, curve.a, curve.b);
    let n = pts.len() as u64 + 1;
    let ar = Arith { p: t.p, a: curve.a };
    let mut n2 = 1;
    for (l, e) in factor(n) {
        let mut lj = 1;
        for _ in 0..e {
            lj *= l;
            let killed = 1 + pts
                .iter()
                .filter(|&&q| ar.mul(lj, Some(q)).is_none())
                .count() as u64;
            if killed == lj * lj {
                n2 *= l;
            } else {
                break;
            }
        }
    }
    (n / n2, n2)
}

/// `#{u in F_p^* : u^4 A = A, u^6 B = B}`.
pub fn automorphism_count(curve: &ShortWeierstrassCurve) -> u32 {
    aut_from_coeffs(curve.field.p, curve.a, curve.b)
}

fn aut_from_coeffs(p: u64, a: u64, b: u64) -> u32 {
    if a == 0 {
        gcd(6, p - 1) as u32
    } else if b == 0 {
        gcd(4, p - 1) as u32
    } else {
        2
    }
}

/// Builds the census with the default ceiling.
pub fn build_census(field: PrimeField) -> Result<CurveCensus> {
    build_census_with_limit(field, DEFAULT_MAX_PRIME)
}

pub fn build_census_with_limit(field: PrimeField, max_prime: u64) -> Result<CurveCensus> {
    let p = field.p;
    if p > max_prime {
        return Err(Error::Resource(format!(
            "census for p={p} exceeds the ceiling {max_prime}"
        )));
    }
    let reps = orbit_representatives(p);
    let t = FieldTables::new(p);
    let classes: Vec<IsoClassRecord> = reps
        .par_iter()
        .map(|&(a, b, orbit_size)| {
            let n = t.point_count(a, b);
            let group = group_structure_with(&t, a, b, n);
            IsoClassRecord {
                representative: ShortWeierstrassCurve { field, a, b },
                trace_a: p as i64 + 1 - n as i64,
                group,
                aut_count: aut_from_coeffs(p, a, b),
                orbit_size,
            }
        })
        .collect();
    Ok(CurveCensus { field, classes })
}

struct Scaling {
    p: u64,
    u4: Vec<u64>,
    u6: Vec<u64>,
}

impl Scaling {
    fn new(p: u64) -> Self {
        let u4 = (1..p)
            .map(|u| u * u % p * u % p * u % p)
            .collect::<Vec<_>>();
        let u6 = (1..p)
            .map(|u| u * u % p * u % p * u % p * u % p * u % p)
            .collect::<Vec<_>>();
        Scaling { p, u4, u6 }
    }

    fn orbit(&self, a: u64, b: u64) -> impl Iterator<Item = (u64, u64)> + '_ {
        let p = self.p;
        self.u4
            .iter()
            .zip(&self.u6)
            .map(move |(&s4, &s6)| (s4 * a % p, s6 * b % p))
    }
}

/// Lexicographic sweep over nonsingular pairs; the first unvisited pair of
/// each orbit is its least element. Returns `(A, B, orbit_size)`.
fn orbit_representatives(p: u64) -> Vec<(u64, u64, u64)> {
    let sc = Scaling::new(p);
    let n = (p * p) as usize;
    let mut seen = vec![0u64; n.div_ceil(64)];
    let mut reps = Vec::new();
    for a in 0..p {
        for b in 0..p {
            let idx = (a * p + b) as usize;
            if seen[idx / 64] >> (idx % 64) & 1 == 1 || is_singular(p, a, b) {
                continue;
            }
            let mut size = 0;
            for (x, y) in sc.orbit(a, b) {
                let j = (x * p + y) as usize;
                if seen[j / 64] >> (j % 64) & 1 == 0 {
                    seen[j / 64] |= 1 << (j % 64);
                    size += 1;
                }
            }
            reps.push((a, b, size));
        }
    }
    reps
}

/// Lexicographically least pair in the orbit of `(A, B)` under `u^4, u^6` scaling.
pub fn canonical_pair(field: PrimeField, a: u64, b: u64) -> (u64, u64) {
    let p = field.p;
    let (a, b) = (a % p, b % p);
    (1..p)
        .map(|u| {
            let u2 = u * u % p;
            let u4 = u2 * u2 % p;
            (u4 * a % p, u4 * u2 % p * b % p)
        })
        .min()
        .expect("p >= 5")
}

impl CurveCensus {
    pub fn p(&self) -> u64 {
        self.field.p
    }

    /// `sum orbit_size`, which must equal `p^2 - p`.
    pub fn orbit_total(&self) -> u64 {
        self.classes.iter().map(|c| c.orbit_size).sum()
    }

    /// `sum 1/|Aut|`, which must equal `p`.
    pub fn mass(&self) -> Q {
        self.classes
            .iter()
            .map(|c| Q::new(1, c.aut_count as i128))
            .sum()
    }

    /// Record whose representative is exactly `(a, b)`.
    pub fn record(&self, a: u64, b: u64) -> Option<&IsoClassRecord> {
        self.classes
            .binary_search_by(|c| (c.representative.a, c.representative.b).cmp(&(a, b)))
            .ok()
            .map(|i| &self.classes[i])
    }

    /// Record of the class containing the nonsingular pair `(a, b)`.
    pub fn class_of(&self, a: u64, b: u64) -> Option<&IsoClassRecord> {
        let (ca, cb) = canonical_pair(self.field, a, b);
        self.record(ca, cb)
    }

    /// A `p x p` table mapping each pair `(A, B)` to its class index, or
    /// `u32::MAX` for singular pairs.
    pub fn class_table(&self) -> Vec<u32> {
        let p = self.field.p;
        let sc = Scaling::new(p);
        let mut table = vec![u32::MAX; (p * p) as usize];
        for (i, c) in self.classes.iter().enumerate() {
            for (x, y) in sc.orbit(c.representative.a, c.representative.b) {
                table[(x * p + y) as usize] = i as u32;
            }
        }
        table
    }

    /// Checks every census and per-class invariant.
    pub fn check_invariants(&self) -> Result<()> {
        let p = self.field.p;
        if self.orbit_total() != p * p - p {
            return Err(Error::Invariant(format!(
                "p={p}: orbit sizes sum to {} not {}",
                self.orbit_total(),
                p * p - p
            )));
        }
        if self.mass() != Q::from_integer(p as i128) {
            return Err(Error::Invariant(format!(
                "p={p}: mass {} != p",
                self.mass()
            )));
        }
        let bound = 2 * isqrt(p) + 2;
        for c in &self.classes {
            let (n1, n2) = c.group;
            let (a, b) = (c.representative.a, c.representative.b);
            let ok = n1 as i64 * n2 as i64 == p as i64 + 1 - c.trace_a
                && n1 % n2 == 0
                && (p - 1) % n2 == 0
                && (c.trace_a * c.trace_a) as u64 <= 4 * p
                && c.trace_a.unsigned_abs() <= bound
                && c.orbit_size * c.aut_count as u64 == p - 1
                && c.aut_count == aut_from_coeffs(p, a, b)
                && canonical_pair(self.field, a, b) == (a, b);
            if !ok {
                return Err(Error::Invariant(format!(
                    "p={p}: inconsistent class record {c:?}"
                )));
            }
        }
        Ok(())
    }
}

/// One line of the census cache file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CensusLine {
    pub p: u64,
    #[serde(rename = "A")]
    pub a_coeff: u64,
    #[serde(rename = "B")]
    pub b_coeff: u64,
    pub a: i64,
    pub n1: u64,
    pub n2: u64,
    pub aut: u32,
}

pub fn census_file_name(p: u64) -> String {
    format!("census_p{p}.jsonl")
}

pub fn write_census_jsonl<W: Write>(census: &CurveCensus, mut w: W) -> Result<()> {
    for c in &census.classes {
        let line = CensusLine {
            p: census.p(),
            a_coeff: c.representative.a,
            b_coeff: c.representative.b,
            a: c.trace_a,
            n1: c.group.0,
            n2: c.group.1,
            aut: c.aut_count,
        };
        let s = serde_json::to_string(&line).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "{s}")?;
    }
    Ok(())
}

/// Loads a cached census and re-checks all invariants.
pub fn read_census_jsonl<R: BufRead>(r: R) -> Result<CurveCensus> {
    let mut field = None;
    let mut classes = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CensusLine =
            serde_json::from_str(&line).map_err(|e| Error::Parse(e.to_string()))?;
        let f = match field {
            None => {
                let f = PrimeField::new(rec.p)?;
                field = Some(f);
                f
            }
            Some(f) => f,
        };
        if rec.p != f.p {
            return Err(Error::Parse(format!(
                "mixed primes {} and {} in one census file",
                f.p, rec.p
            )));
        }
        let curve = ShortWeierstrassCurve::new(f, rec.a_coeff as i64, rec.b_coeff as i64)?;
        if rec.aut == 0 || (f.p - 1) % rec.aut as u64 != 0 {
            return Err(Error::Parse(format!("bad automorphism count {}", rec.aut)));
        }
        classes.push(IsoClassRecord {
            representative: curve,
            trace_a: rec.a,
            group: (rec.n1, rec.n2),
            aut_count: rec.aut,
            orbit_size: (f.p - 1) / rec.aut as u64,
        });
    }
    let field = field.ok_or_else(|| Error::Parse("empty census file".into()))?;
    classes.sort_by_key(|c| (c.representative.a, c.representative.b));
    let census = CurveCensus { field, classes };
    census.check_invariants()?;
    Ok(census)
}

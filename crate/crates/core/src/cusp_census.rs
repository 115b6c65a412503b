//! Congruence subgroups inside `SL2(Z/N)` and their cusps.
//!
//! Cusps of `Gamma` are orbits of surjections `(Z/N)^2 -> Z/N`, written as
//! pairs `(a1, a2)` with `gcd(a1, a2, N) = 1`, under right multiplication by
//! `±Gamma-bar`. Frobenius for `F_q` acts on the second coordinate by `q`.

use std::collections::{HashSet, VecDeque};
use std::io::Write;

use crate::arith::{gcd, Q};
use crate::error::{Error, Result};
use crate::level_fibers::{csv_err, LevelSpec};

/// Default ceiling on the level `MN`.
pub const DEFAULT_MAX_LEVEL: u64 = 30;

/// A 2x2 matrix `[a, b, c, d]` over `Z/N`.
pub type Mat = [u32; 4];

/// All of `SL2(Z/N)`.
#[derive(Clone, Debug)]
pub struct SL2ModN {
    pub n: u64,
    pub elements: Vec<Mat>,
}

impl SL2ModN {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadInput("modulus must be positive".into()));
        }
        let mut elements = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        if (a * d + n * n - b * c) % n == 1 % n {
                            elements.push([a as u32, b as u32, c as u32, d as u32]);
                        }
                    }
                }
            }
        }
        Ok(SL2ModN { n, elements })
    }
}

/// The image of `Gamma1(M, N)` in `SL2(Z/MN)`.
#[derive(Clone, Debug)]
pub struct SubgroupBar {
    pub parent: SL2ModN,
    pub elements: Vec<Mat>,
    pub spec: LevelSpec,
}

fn mat_mul(x: &Mat, y: &Mat, n: u64) -> Mat {
    let [a, b, c, d] = x.map(|v| v as u64);
    let [e, f, g, h] = y.map(|v| v as u64);
    [
        ((a * e + b * g) % n) as u32,
        ((a * f + b * h) % n) as u32,
        ((c * e + d * g) % n) as u32,
        ((c * f + d * h) % n) as u32,
    ]
}

/// Membership in `Gamma1(M, N)` mod `MN`: `g = I mod M` and `g = (1 *; 0 1) mod MN`.
pub fn in_gamma1(spec: &LevelSpec, g: &Mat) -> bool {
    let l = spec.level();
    let m = spec.m;
    let [a, b, c, d] = g.map(|v| v as u64);
    let one = 1 % l;
    a == one && c == 0 && d == one && b % m == 0
}

pub fn build_subgroup(spec: &LevelSpec) -> Result<SubgroupBar> {
    build_subgroup_with_limit(spec, DEFAULT_MAX_LEVEL)
}

pub fn build_subgroup_with_limit(spec: &LevelSpec, max_level: u64) -> Result<SubgroupBar> {
    let l = spec.level();
    if l > max_level {
        return Err(Error::Resource(format!(
            "level {l} exceeds the ceiling {max_level}"
        )));
    }
    let parent = SL2ModN::new(l)?;
    let elements = parent
        .elements
        .iter()
        .filter(|g| in_gamma1(spec, g))
        .copied()
        .collect();
    Ok(SubgroupBar {
        parent,
        elements,
        spec: *spec,
    })
}

/// `[SL2(Z) : Gamma] = |SL2(Z/MN)| / |Gamma-bar|` and `e = index / 24`.
pub fn index_and_e(spec: &LevelSpec) -> Result<(u64, Q)> {
    let g = build_subgroup(spec)?;
    let index = (g.parent.elements.len() / g.elements.len()) as u64;
    Ok((index, Q::new(index as i128, 24)))
}

/// One cusp: the sorted members of an orbit; the first is the representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuspOrbit {
    pub members: Vec<(u32, u32)>,
}

impl CuspOrbit {
    pub fn representative(&self) -> (u32, u32) {
        self.members[0]
    }
}

/// A small generating set of `±Gamma-bar`, chosen greedily.
fn generators(sub: &SubgroupBar) -> Vec<Mat> {
    let n = sub.parent.n;
    let minus_one = [(n - 1) as u32, 0, 0, (n - 1) as u32];
    let identity = [1 % n as u32, 0, 0, 1 % n as u32];
    let mut group: HashSet<Mat> = HashSet::from([identity]);
    let mut gens = Vec::new();
    for g in std::iter::once(minus_one).chain(sub.elements.iter().copied()) {
        if group.contains(&g) {
            continue;
        }
        gens.push(g);
        let mut queue: VecDeque<Mat> = group.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            for h in &gens {
                let y = mat_mul(&x, h, n);
                if group.insert(y) {
                    queue.push_back(y);
                }
            }
        }
    }
    gens
}

fn act(v: (u32, u32), g: &Mat, n: u64) -> (u32, u32) {
    let (x, y) = (v.0 as u64, v.1 as u64);
    let [a, b, c, d] = g.map(|t| t as u64);
    (((x * a + y * c) % n) as u32, ((x * b + y * d) % n) as u32)
}

/// Surjective pairs in lexicographic order.
pub fn surjections(n: u64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if gcd(gcd(x, y), n) == 1 {
                out.push((x as u32, y as u32));
            }
        }
    }
    out
}

/// Orbit partition of the surjections under `±Gamma-bar`, by breadth-first
/// closure under a generating set.
pub fn cusp_orbits(spec: &LevelSpec) -> Result<Vec<CuspOrbit>> {
    let sub = build_subgroup(spec)?;
    Ok(orbits_of(&sub))
}

fn orbits_of(sub: &SubgroupBar) -> Vec<CuspOrbit> {
    let n = sub.parent.n;
    let gens = generators(sub);
    let mut seen = vec![false; (n * n) as usize];
    let mut out = Vec::new();
    for start in surjections(n) {
        let key = |v: (u32, u32)| v.0 as usize * n as usize + v.1 as usize;
        if seen[key(start)] {
            continue;
        }
        seen[key(start)] = true;
        let mut members = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for g in &gens {
                let w = act(v, g, n);
                if !seen[key(w)] {
                    seen[key(w)] = true;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        out.push(CuspOrbit { members });
    }
    out
}

/// Number of cusp orbits fixed by `a2 -> q a2`.
pub fn rational_cusp_count(spec: &LevelSpec, q: u64) -> Result<usize> {
    let n = spec.level();
    if gcd(q, n) != 1 {
        return Err(Error::NotCoprime {
            q,
            level: n,
            what: "level",
        });
    }
    let orbits = cusp_orbits(spec)?;
    Ok(count_fixed(&orbits, n, q))
}

fn count_fixed(orbits: &[CuspOrbit], n: u64, q: u64) -> usize {
    let mut owner = vec![usize::MAX; (n * n) as usize];
    for (i, o) in orbits.iter().enumerate() {
        for &(x, y) in &o.members {
            owner[x as usize * n as usize + y as usize] = i;
        }
    }
    orbits
        .iter()
        .enumerate()
        .filter(|(i, o)| {
            let (x, y) = o.representative();
            let y2 = (y as u64 * (q % n)) % n;
            owner[x as usize * n as usize + y2 as usize] == *i
        })
        .count()
}

/// One row of the cusp report.
#[derive(Clone, Debug, PartialEq)]
pub struct CuspRow {
    pub spec: LevelSpec,
    pub q: u64,
    pub orbit_count: usize,
    pub rational_count: usize,
    pub index: u64,
    pub e_gamma: Q,
}

/// Cusp data for `spec` at every `q` in `qs` (each must be coprime to the level).
pub fn cusp_rows(spec: &LevelSpec, qs: &[u64]) -> Result<Vec<CuspRow>> {
    let sub = build_subgroup(spec)?;
    let index = (sub.parent.elements.len() / sub.elements.len()) as u64;
    let orbits = orbits_of(&sub);
    let n = spec.level();
    qs.iter()
        .map(|&q| {
            if gcd(q, n) != 1 {
                return Err(Error::NotCoprime {
                    q,
                    level: n,
                    what: "level",
                });
            }
            Ok(CuspRow {
                spec: *spec,
                q,
                orbit_count: orbits.len(),
                rational_count: count_fixed(&orbits, n, q),
                index,
                e_gamma: Q::new(index as i128, 24),
            })
        })
        .collect()
}

/// CSV with columns `spec,N,q,orbit_count,rational_count,index,e_gamma`.
pub fn write_cusp_csv<W: Write>(rows: &[CuspRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "spec",
        "N",
        "q",
        "orbit_count",
        "rational_count",
        "index",
        "e_gamma",
    ])
    .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.spec.to_string(),
            r.spec.level().to_string(),
            r.q.to_string(),
            r.orbit_count.to_string(),
            r.rational_count.to_string(),
            r.index.to_string(),
            r.e_gamma.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sl2_cardinalities() {
        for (n, size) in [(2, 6), (3, 24), (4, 48), (5, 120), (6, 144)] {
            assert_eq!(SL2ModN::new(n).unwrap().elements.len(), size);
        }
    }

    #[test]
    fn subgroup_sizes() {
        assert_eq!(
            build_subgroup(&LevelSpec::gamma1(5))
                .unwrap()
                .elements
                .len(),
            5
        );
        assert_eq!(
            build_subgroup(&LevelSpec::gamma(5)).unwrap().elements.len(),
            1
        );
        assert!(matches!(
            build_subgroup(&LevelSpec::gamma1(31)),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn index_examples() {
        assert_eq!(
            index_and_e(&LevelSpec::gamma1(5)).unwrap(),
            (24, Q::from_integer(1))
        );
        assert_eq!(
            index_and_e(&LevelSpec::gamma1(7)).unwrap(),
            (48, Q::from_integer(2))
        );
        assert_eq!(
            index_and_e(&LevelSpec::gamma(5)).unwrap(),
            (120, Q::from_integer(5))
        );
    }

    #[test]
    fn gamma1_5_cusps() {
        assert_eq!(cusp_orbits(&LevelSpec::gamma1(5)).unwrap().len(), 4);
        assert_eq!(rational_cusp_count(&LevelSpec::gamma1(5), 11).unwrap(), 4);
        assert_eq!(rational_cusp_count(&LevelSpec::gamma1(5), 7).unwrap(), 2);
        assert!(rational_cusp_count(&LevelSpec::gamma1(5), 10).is_err());
    }

    #[test]
    fn gamma1_9_and_4() {
        assert_eq!(rational_cusp_count(&LevelSpec::gamma1(9), 2).unwrap(), 3);
        assert_eq!(rational_cusp_count(&LevelSpec::gamma1(9), 19).unwrap(), 8);
        for q in [3, 5, 7, 9, 11, 13] {
            assert_eq!(rational_cusp_count(&LevelSpec::gamma1(4), q).unwrap(), 3);
        }
    }
}

//! Level structures on curves over finite fields: embedding counts, fiber
//! sizes, weighted Hurwitz class numbers `H_Gamma(a, q)` and their moments.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use crate::arith::{divisors, gcd, isqrt, Q};
use crate::error::{Error, Result};
use crate::ff_curves::{CurveCensus, IsoClassRecord};

/// The congruence subgroup `Gamma1(M, N) = Gamma(M) ∩ Gamma1(MN)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelSpec {
    pub m: u64,
    pub n: u64,
}

impl LevelSpec {
    pub fn new(m: u64, n: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::BadInput(format!(
                "level Gamma1({m},{n}) needs positive M and N"
            )));
        }
        Ok(LevelSpec { m, n })
    }

    /// `Gamma1(N)`.
    pub fn gamma1(n: u64) -> Self {
        LevelSpec { m: 1, n }
    }

    /// Full level `Gamma(N) = Gamma1(N, 1)`.
    pub fn gamma(n: u64) -> Self {
        LevelSpec { m: n, n: 1 }
    }

    pub fn level(&self) -> u64 {
        self.m * self.n
    }

    /// `Z/MN x Z/M`.
    pub fn torsion_group(&self) -> AbelianRank2 {
        AbelianRank2 {
            m1: self.level(),
            m2: self.m,
        }
    }

    /// The moduli problem is representable iff `MN >= 5` or `M >= 3`.
    pub fn representable(&self) -> bool {
        self.level() >= 5 || self.m >= 3
    }

    /// Parses `G1-<N>`, `G-<N>` or `G1-<M>-<N>`.
    pub fn parse(token: &str) -> Result<Self> {
        let bad = || {
            Error::BadInput(format!(
                "cannot parse level token {token:?} (expected G1-<N>, G-<N> or G1-<M>-<N>)"
            ))
        };
        let parts: Vec<&str> = token.trim().split('-').collect();
        let num = |s: &str| s.parse::<u64>().ok().filter(|&v| v > 0).ok_or_else(bad);
        match parts.as_slice() {
            ["G1", n] => Ok(LevelSpec::gamma1(num(n)?)),
            ["G", n] => Ok(LevelSpec::gamma(num(n)?)),
            ["G1", m, n] => LevelSpec::new(num(m)?, num(n)?),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for LevelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.m, self.n) {
            (1, n) => write!(f, "G1-{n}"),
            (m, 1) => write!(f, "G-{m}"),
            (m, n) => write!(f, "G1-{m}-{n}"),
        }
    }
}

/// `Z/m1 x Z/m2` with `m2 | m1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbelianRank2 {
    pub m1: u64,
    pub m2: u64,
}

impl AbelianRank2 {
    pub fn new(m1: u64, m2: u64) -> Result<Self> {
        if m1 == 0 || m2 == 0 || m1 % m2 != 0 {
            return Err(Error::BadInput(format!(
                "({m1},{m2}) is not an invariant-factor pair"
            )));
        }
        Ok(AbelianRank2 { m1, m2 })
    }

    pub fn order(&self) -> u64 {
        self.m1 * self.m2
    }

    /// Subgroup killed by `k`: `(gcd(m1,k), gcd(m2,k))`.
    pub fn torsion(&self, k: u64) -> AbelianRank2 {
        AbelianRank2 {
            m1: gcd(self.m1, k),
            m2: gcd(self.m2, k),
        }
    }
}

impl From<(u64, u64)> for AbelianRank2 {
    fn from((m1, m2): (u64, u64)) -> Self {
        AbelianRank2 { m1, m2 }
    }
}

fn injection_cache() -> &'static Mutex<HashMap<(AbelianRank2, AbelianRank2), u64>> {
    static CACHE: OnceLock<Mutex<HashMap<(AbelianRank2, AbelianRank2), u64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Number of injective homomorphisms `A -> B`, by brute force over the
/// images of the two generators of `A` (memoized).
pub fn count_injections(a: AbelianRank2, b: AbelianRank2) -> u64 {
    if let Some(&v) = injection_cache().lock().unwrap().get(&(a, b)) {
        return v;
    }
    let v = count_injections_uncached(a, b);
    injection_cache().lock().unwrap().insert((a, b), v);
    v
}

fn count_injections_uncached(a: AbelianRank2, b: AbelianRank2) -> u64 {
    let (b1, b2) = (b.m1, b.m2);
    let order = |x: u64, y: u64| {
        let o1 = b1 / gcd(x, b1);
        let o2 = b2 / gcd(y, b2);
        o1 / gcd(o1, o2) * o2
    };
    let elems_of_order = |k: u64| {
        let mut v = Vec::new();
        for x in 0..b1 {
            for y in 0..b2 {
                if order(x, y) == k {
                    v.push((x, y));
                }
            }
        }
        v
    };
    let xs = elems_of_order(a.m1);
    let ys = elems_of_order(a.m2);
    let mut count = 0;
    let mut in_span = vec![false; (b1 * b2) as usize];
    for &(x1, x2) in &xs {
        let mut cur = (0, 0);
        let mut marked = Vec::with_capacity(a.m1 as usize);
        for _ in 0..a.m1 {
            let idx = (cur.0 * b2 + cur.1) as usize;
            in_span[idx] = true;
            marked.push(idx);
            cur = ((cur.0 + x1) % b1, (cur.1 + x2) % b2);
        }
        for &(y1, y2) in &ys {
            let mut ok = true;
            let mut cur = (y1, y2);
            for _ in 1..a.m2 {
                if in_span[(cur.0 * b2 + cur.1) as usize] {
                    ok = false;
                    break;
                }
                cur = ((cur.0 + y1) % b1, (cur.1 + y2) % b2);
            }
            if ok {
                count += 1;
            }
        }
        for idx in marked {
            in_span[idx] = false;
        }
    }
    count
}

fn check_coprime(level: &LevelSpec, q: u64) -> Result<()> {
    if gcd(q, level.level()) != 1 {
        return Err(Error::NotCoprime {
            q,
            level: level.level(),
            what: "level",
        });
    }
    Ok(())
}

/// `E(F_q)[MN]` as an invariant-factor pair.
pub fn level_torsion(level: &LevelSpec, record: &IsoClassRecord) -> AbelianRank2 {
    AbelianRank2::from(record.group).torsion(level.level())
}

/// `#{Z/MN x Z/M -> E(F_q)} / |Aut(E)|`, the number of level structures on
/// `E` up to isomorphism.
pub fn fiber_size(level: &LevelSpec, record: &IsoClassRecord) -> Result<Q> {
    check_coprime(level, record.representative.field().p())?;
    let inj = count_injections(level.torsion_group(), level_torsion(level, record));
    Ok(Q::new(inj as i128, record.aut_count as i128))
}

/// Position of a point of `P(u0, u1)(F_q)` for the weight function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointTag {
    /// Both coordinates nonzero.
    Interior,
    /// Second coordinate zero, `[a, 0]`.
    Axis0,
    /// First coordinate zero, `[0, b]`.
    Axis1,
    /// The dummy point.
    Star,
}

/// `wt(*) = 1`; otherwise `(q-1) / #mu_g(F_q)` with `g = gcd(u0,u1)`,
/// `u0` or `u1` according to which coordinates vanish.
pub fn wps_weight(u0: u64, u1: u64, tag: PointTag, q: u64) -> Q {
    let g = match tag {
        PointTag::Star => return Q::from_integer(1),
        PointTag::Interior => gcd(u0, u1),
        PointTag::Axis0 => u0,
        PointTag::Axis1 => u1,
    };
    Q::new((q - 1) as i128, gcd(g, q - 1) as i128)
}

/// The map `a -> H_Gamma(a, q)` for `|a| <= 2 sqrt(q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HGammaTable {
    pub level: LevelSpec,
    pub q: u64,
    pub values: BTreeMap<i64, Q>,
}

/// `H_Gamma(a, q) = (q-1)/q^2 * sum over classes of trace a of fiber_size`.
pub fn h_gamma(level: &LevelSpec, census: &CurveCensus) -> Result<HGammaTable> {
    let q = census.p();
    check_coprime(level, q)?;
    let r = isqrt(4 * q) as i64;
    let mut values: BTreeMap<i64, Q> = (-r..=r).map(|a| (a, Q::from_integer(0))).collect();
    for c in &census.classes {
        *values.get_mut(&c.trace_a).expect("Hasse bound") += fiber_size(level, c)?;
    }
    let scale = Q::new((q - 1) as i128, (q * q) as i128);
    for v in values.values_mut() {
        *v *= scale;
    }
    Ok(HGammaTable {
        level: *level,
        q,
        values,
    })
}

/// `sum_a a^R H_Gamma(a, q)`.
pub fn moment(table: &HGammaTable, r: u32) -> Q {
    table
        .values
        .iter()
        .map(|(&a, &h)| h * Q::from_integer((a as i128).pow(r)))
        .sum()
}

/// `E_q(w(a) Phi_A) = (1/q) sum over classes with A -> E(F_q) of w(a)/|Aut|`.
pub fn expectation_phi<F>(a: AbelianRank2, census: &CurveCensus, weight: F) -> Result<Q>
where
    F: Fn(i64) -> Q,
{
    let q = census.p();
    if gcd(q, a.m1) != 1 {
        return Err(Error::NotCoprime {
            q,
            level: a.m1,
            what: "group exponent",
        });
    }
    let mut total = Q::from_integer(0);
    for c in &census.classes {
        let target = AbelianRank2::from(c.group).torsion(a.m1);
        if count_injections(a, target) > 0 {
            total += weight(c.trace_a) / Q::from_integer(c.aut_count as i128);
        }
    }
    Ok(total / Q::from_integer(q as i128))
}

/// The groups `Z/MN x Z/M <= A_i <= Z/MN x Z/MN` with the inclusion-exclusion weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupLattice {
    pub groups: Vec<AbelianRank2>,
    pub omega_tilde: Vec<Q>,
    pub omega: Vec<Q>,
}

impl GroupLattice {
    /// Whether `groups[j]` is a proper subgroup of `groups[i]`.
    pub fn below(&self, j: usize, i: usize) -> bool {
        j != i && count_injections(self.groups[j], self.groups[i]) > 0
    }
}

/// Builds the lattice for `level` and evaluates `omega_i = omega~_i - sum_{A_j < A_i} omega_j`.
pub fn omega_lattice(level: &LevelSpec, census: &CurveCensus) -> Result<GroupLattice> {
    check_coprime(level, census.p())?;
    let l = level.level();
    let groups: Vec<AbelianRank2> = divisors(l)
        .into_iter()
        .filter(|m| m % level.m == 0)
        .map(|m| AbelianRank2 { m1: l, m2: m })
        .collect();
    let omega_tilde: Vec<Q> = groups
        .iter()
        .map(|&g| Q::from_integer(count_injections(level.torsion_group(), g) as i128))
        .collect();
    let mut lat = GroupLattice {
        groups,
        omega_tilde,
        omega: Vec::new(),
    };
    for i in 0..lat.groups.len() {
        let mut w = lat.omega_tilde[i];
        for j in 0..i {
            if lat.below(j, i) {
                w -= lat.omega[j];
            }
        }
        lat.omega.push(w);
    }
    Ok(lat)
}

/// Both sides of `(q/(q-1)) sum a^R H = sum_i omega_i E_q(a^R Phi_{A_i})`.
pub fn moment_identity(level: &LevelSpec, census: &CurveCensus, r: u32) -> Result<(Q, Q)> {
    let q = census.p() as i128;
    let table = h_gamma(level, census)?;
    let lhs = Q::new(q, q - 1) * moment(&table, r);
    let lat = omega_lattice(level, census)?;
    let mut rhs = Q::from_integer(0);
    for (g, w) in lat.groups.iter().zip(&lat.omega) {
        let e = expectation_phi(*g, census, |a| Q::from_integer((a as i128).pow(r)))?;
        rhs += *w * e;
    }
    Ok((lhs, rhs))
}

/// CSV with columns `q,a,H_num,H_den`.
pub fn write_hgamma_csv<W: Write>(table: &HGammaTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["q", "a", "H_num", "H_den"])
        .map_err(csv_err)?;
    for (a, h) in &table.values {
        out.write_record([
            table.q.to_string(),
            a.to_string(),
            h.numer().to_string(),
            h.denom().to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// CSV with columns `q,m0_num,m0_den,m1_num,...` for `R = 0..=max_r`.
pub fn write_moments_csv<W: Write>(tables: &[HGammaTable], max_r: u32, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["q".to_string()];
    for r in 0..=max_r {
        header.push(format!("m{r}_num"));
        header.push(format!("m{r}_den"));
    }
    out.write_record(&header).map_err(csv_err)?;
    for t in tables {
        let mut row = vec![t.q.to_string()];
        for r in 0..=max_r {
            let m = moment(t, r);
            row.push(m.numer().to_string());
            row.push(m.denom().to_string());
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

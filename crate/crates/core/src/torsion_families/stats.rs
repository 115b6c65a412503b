//! Reduction types of family members at a prime and their tallies.

use std::collections::BTreeMap;
use std::io::Write;

use super::{family_bounds, FamilyParametrization, GlobalCurve};
use crate::arith::{gcd, inv_mod, is_prime, legendre, mul_mod, pow_mod, rem_i128, Q};
use crate::cusp_census::rational_cusp_count;
use crate::error::{Error, Result};
use crate::ff_curves::CurveCensus;
use crate::level_fibers::{csv_err, fiber_size, LevelSpec};
use crate::wps_rational::{reduce_mod_p, Monomial, ReducedPoint, Reduction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocalKind {
    Good(i64),
    Split,
    Nonsplit,
    Additive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalReport {
    pub q: u64,
    pub kind: LocalKind,
    pub reduced: ReducedPoint,
}

fn check_prime(level: &LevelSpec, q: u64) -> Result<()> {
    if q < 5 || !is_prime(q) {
        return Err(Error::BadInput(format!("q={q} must be a prime >= 5")));
    }
    if gcd(q, level.level()) != 1 {
        return Err(Error::NotCoprime {
            q,
            level: level.level(),
            what: "6 * level",
        });
    }
    Ok(())
}

/// Split iff the node slopes `+-sqrt(3 alpha)`, `alpha = -3B / (2A)`, are rational.
fn is_split(q: u64, a: u64, b: u64) -> bool {
    let alpha = mul_mod(
        mul_mod(3, (q - b) % q, q),
        inv_mod(2 * a % q, q).expect("A != 0"),
        q,
    );
    legendre(3 * alpha % q, q) == 1
}

/// Reduction type of `curve` at `q`. Additive reduction in a representable
/// family is a hard error.
pub fn local_type(level: &LevelSpec, curve: &GlobalCurve, q: u64) -> Result<LocalReport> {
    check_prime(level, q)?;
    let reduced = reduce_mod_p(&curve.point, q);
    let kind = match &reduced.value {
        Reduction::Star => {
            if level.representable() {
                return Err(Error::AdditiveInRepresentable {
                    level: level.to_string(),
                    q,
                    a: curve.a(),
                    b: curve.b(),
                });
            }
            LocalKind::Additive
        }
        Reduction::Point(c) => {
            let (a, b) = (c[0], c[1]);
            if crate::ff_curves::is_singular(q, a, b) {
                if is_split(q, a, b) {
                    LocalKind::Split
                } else {
                    LocalKind::Nonsplit
                }
            } else {
                let curve = crate::ff_curves::ShortWeierstrassCurve::new(
                    crate::ff_curves::PrimeField::new(q)?,
                    a as i64,
                    b as i64,
                )?;
                LocalKind::Good(q as i64 + 1 - crate::ff_curves::point_count(&curve) as i64)
            }
        }
    };
    Ok(LocalReport { q, kind, reduced })
}

/// Maps every `(A, B) mod q` to a code: a census class index, or one of the
/// three singular kinds.
#[derive(Clone, Debug)]
pub struct KindTable {
    pub q: u64,
    pub n_classes: u32,
    table: Vec<u32>,
}

impl KindTable {
    pub fn new(census: &CurveCensus) -> Self {
        let q = census.p();
        let n = census.classes.len() as u32;
        let mut table = census.class_table();
        for a in 0..q {
            for b in 0..q {
                let slot = &mut table[(a * q + b) as usize];
                if *slot == u32::MAX {
                    *slot = if a == 0 && b == 0 {
                        n + 2
                    } else if is_split(q, a, b) {
                        n
                    } else {
                        n + 1
                    };
                }
            }
        }
        KindTable {
            q,
            n_classes: n,
            table,
        }
    }

    #[inline]
    pub fn code(&self, a: u64, b: u64) -> u32 {
        self.table[(a * self.q + b) as usize]
    }

    pub fn split(&self) -> u32 {
        self.n_classes
    }

    pub fn nonsplit(&self) -> u32 {
        self.n_classes + 1
    }

    pub fn star(&self) -> u32 {
        self.n_classes + 2
    }

    pub fn codes(&self) -> usize {
        self.n_classes as usize + 3
    }
}

/// Counts by reduction class at one prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalStatistics {
    pub level: LevelSpec,
    pub q: u64,
    pub total: u64,
    /// Keyed by the lexicographically least representative `(A, B)` of the class.
    pub classes: BTreeMap<(u64, u64), u64>,
    pub traces: BTreeMap<i64, u64>,
    pub split: u64,
    pub nonsplit: u64,
    pub additive: u64,
}

impl LocalStatistics {
    /// From per-code counts (see [`KindTable`]).
    pub fn from_codes(level: &LevelSpec, census: &CurveCensus, counts: &[u64]) -> Self {
        let n = census.classes.len();
        let mut classes = BTreeMap::new();
        let mut traces = BTreeMap::new();
        for (i, c) in census.classes.iter().enumerate() {
            classes.insert((c.representative.a(), c.representative.b()), counts[i]);
            *traces.entry(c.trace_a).or_insert(0) += counts[i];
        }
        LocalStatistics {
            level: *level,
            q: census.p(),
            total: counts.iter().sum(),
            classes,
            traces,
            split: counts[n],
            nonsplit: counts[n + 1],
            additive: counts[n + 2],
        }
    }

    pub fn multiplicative(&self) -> u64 {
        self.split + self.nonsplit
    }

    pub fn fraction(&self, count: u64) -> f64 {
        count as f64 / self.total as f64
    }

    /// `max_z |empirical fraction - predicted fraction|` over good classes.
    pub fn max_class_deviation(&self, pred: &Predictions) -> f64 {
        self.classes
            .iter()
            .map(|(z, &c)| (self.fraction(c) - q_f64(pred.classes[z])).abs())
            .fold(0.0, f64::max)
    }

    /// Every class and kind count sums to the total.
    pub fn check_partition(&self) -> Result<()> {
        let s: u64 =
            self.classes.values().sum::<u64>() + self.split + self.nonsplit + self.additive;
        if s != self.total {
            return Err(Error::Invariant(format!(
                "q={}: class counts sum to {s}, total {}",
                self.q, self.total
            )));
        }
        Ok(())
    }
}

pub(crate) fn q_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// Tallies of a list of curves; errors on additive reduction in a representable family.
pub fn local_statistics(
    level: &LevelSpec,
    curves: &[GlobalCurve],
    census: &CurveCensus,
) -> Result<LocalStatistics> {
    let q = census.p();
    check_prime(level, q)?;
    let table = KindTable::new(census);
    let mut counts = vec![0u64; table.codes()];
    for c in curves {
        let code = table.code(rem_i128(c.a(), q), rem_i128(c.b(), q));
        if code == table.star() && level.representable() {
            return Err(Error::AdditiveInRepresentable {
                level: level.to_string(),
                q,
                a: c.a(),
                b: c.b(),
            });
        }
        counts[code as usize] += 1;
    }
    Ok(LocalStatistics::from_codes(level, census, &counts))
}

fn eval_mod(f: &[Monomial], x: &[u64], q: u64) -> u64 {
    let mut acc = 0u64;
    for m in f {
        let mut term = rem_i128(m.coef, q);
        for (&xi, &e) in x.iter().zip(&m.exps) {
            term = mul_mod(term, pow_mod(xi, e as u64, q), q);
        }
        acc = (acc + term) % q;
    }
    acc
}

/// Reduction codes of all nonzero parameter residues mod `q`.
#[derive(Clone, Debug)]
pub struct ResidueCensus {
    pub q: u64,
    /// `u0 + u1` for the source weights.
    pub weight_sum: u32,
    /// Residue pairs per code.
    pub counts: Vec<u64>,
    /// Per `(x0 mod q, x1 mod q)`, the code.
    pub table: Vec<u32>,
    pub kinds: KindTable,
}

impl ResidueCensus {
    /// Local density of minimal parameters reducing to `code`.
    pub fn density(&self, code: u32) -> Q {
        let q = self.q as i128;
        let w = self.weight_sum;
        let scale = q.pow(w - 2);
        let mut num = self.counts[code as usize] as i128 * scale;
        if code == self.kinds.star() {
            num += scale - 1;
        }
        Q::new(num, q.pow(w) - 1)
    }

    #[inline]
    pub fn code(&self, x0: u64, x1: u64) -> u32 {
        self.table[(x0 * self.q + x1) as usize]
    }
}

/// Requires that `q` carries no content for the family, so reduction of the
/// normalized curve depends only on the parameter residues.
pub fn residue_census(
    param: &FamilyParametrization,
    census: &CurveCensus,
) -> Result<ResidueCensus> {
    let q = census.p();
    check_prime(&param.level, q)?;
    let bounds = family_bounds(param)?;
    if !bounds.content.proven || bounds.content.is_content_prime(q) {
        return Err(Error::BadInput(format!(
            "q={q} may carry content for {}",
            param.level
        )));
    }
    let kinds = KindTable::new(census);
    let mut counts = vec![0u64; kinds.codes()];
    let mut table = vec![kinds.star(); (q * q) as usize];
    for x0 in 0..q {
        for x1 in 0..q {
            if x0 == 0 && x1 == 0 {
                continue;
            }
            let a = eval_mod(&param.morphism.polys[0], &[x0, x1], q);
            let b = eval_mod(&param.morphism.polys[1], &[x0, x1], q);
            let code = kinds.code(a, b);
            table[(x0 * q + x1) as usize] = code;
            counts[code as usize] += 1;
        }
    }
    let w = param.source().entries().iter().sum();
    Ok(ResidueCensus {
        q,
        weight_sum: w,
        counts,
        table,
        kinds,
    })
}

/// Predicted limiting fractions at `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub classes: BTreeMap<(u64, u64), Q>,
    pub traces: BTreeMap<i64, Q>,
    pub multiplicative: Q,
    pub split: Q,
    pub nonsplit: Q,
    pub additive: Q,
}

/// For representable levels: `fiber_size(z) / (q + 1)` per class and
/// `c / (q + 1)` for multiplicative reduction with `c` the rational cusps.
/// Split, nonsplit and all predictions for non-representable levels come
/// from the local densities of parameter residues.
pub fn predictions(param: &FamilyParametrization, census: &CurveCensus) -> Result<Predictions> {
    let q = census.p();
    let res = residue_census(param, census)?;
    let level = param.level;
    let mut classes = BTreeMap::new();
    let mut traces = BTreeMap::new();
    for (i, c) in census.classes.iter().enumerate() {
        let v = if level.representable() {
            fiber_size(&level, c)? / Q::from_integer(q as i128 + 1)
        } else {
            res.density(i as u32)
        };
        classes.insert((c.representative.a(), c.representative.b()), v);
        *traces.entry(c.trace_a).or_insert(Q::from_integer(0)) += v;
    }
    let split = res.density(res.kinds.split());
    let nonsplit = res.density(res.kinds.nonsplit());
    let multiplicative = if level.representable() {
        Q::new(rational_cusp_count(&level, q)? as i128, q as i128 + 1)
    } else {
        split + nonsplit
    };
    Ok(Predictions {
        classes,
        traces,
        multiplicative,
        split,
        nonsplit,
        additive: res.density(res.kinds.star()),
    })
}

/// CSV with columns `q,z_or_kind,count,predicted_fraction_num,predicted_fraction_den`.
pub fn write_stats_csv<W: Write>(rows: &[(LocalStatistics, Predictions)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "q",
        "z_or_kind",
        "count",
        "predicted_fraction_num",
        "predicted_fraction_den",
    ])
    .map_err(csv_err)?;
    for (s, p) in rows {
        let mut emit = |label: String, count: u64, pred: Q| -> Result<()> {
            out.write_record([
                s.q.to_string(),
                label,
                count.to_string(),
                pred.numer().to_string(),
                pred.denom().to_string(),
            ])
            .map_err(csv_err)
        };
        for (z, &c) in &s.classes {
            emit(format!("good:{}:{}", z.0, z.1), c, p.classes[z])?;
        }
        for (a, &c) in &s.traces {
            emit(format!("trace:{a}"), c, p.traces[a])?;
        }
        emit(
            "multiplicative".into(),
            s.multiplicative(),
            p.multiplicative,
        )?;
        emit("split".into(), s.split, p.split)?;
        emit("nonsplit".into(), s.nonsplit, p.nonsplit)?;
        emit("additive".into(), s.additive, p.additive)?;
        emit("total".into(), s.total, Q::from_integer(1))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff_curves::{build_census, PrimeField};
    use crate::torsion_families::builtin_parametrization;
    use crate::wps_rational::{normalize, WeightVector};

    fn curve(a: i128, b: i128) -> GlobalCurve {
        GlobalCurve {
            t: vec![],
            point: normalize(&WeightVector::new(vec![4, 6]).unwrap(), &[a, b]).unwrap(),
        }
    }

    #[test]
    fn node_examples() {
        let l = LevelSpec::gamma1(5);
        assert_eq!(
            local_type(&l, &curve(-3, 2), 11).unwrap().kind,
            LocalKind::Split
        );
        assert_eq!(
            local_type(&l, &curve(-3, 2), 7).unwrap().kind,
            LocalKind::Nonsplit
        );
        assert_eq!(
            local_type(&l, &curve(-3, 2), 13).unwrap().kind,
            LocalKind::Split
        );
        assert!(local_type(&l, &curve(-3, 2), 5).is_err());
        let LocalKind::Good(a) = local_type(&l, &curve(2, 1), 7).unwrap().kind else {
            panic!()
        };
        assert_eq!(a, 7 + 1 - 5);
        assert!(matches!(
            local_type(&l, &curve(7, 7), 7),
            Err(Error::AdditiveInRepresentable { .. })
        ));
        assert_eq!(
            local_type(&LevelSpec::gamma1(4), &curve(7, 7), 7)
                .unwrap()
                .kind,
            LocalKind::Additive
        );
    }

    #[test]
    fn representable_predictions_match_residue_densities() {
        for n in [5u64, 7] {
            let p = builtin_parametrization(&LevelSpec::gamma1(n)).unwrap();
            for q in [11u64, 13, 29] {
                let census = build_census(PrimeField::new(q).unwrap()).unwrap();
                let res = residue_census(&p, &census).unwrap();
                let pred = predictions(&p, &census).unwrap();
                for (i, c) in census.classes.iter().enumerate() {
                    let z = (c.representative.a(), c.representative.b());
                    assert_eq!(pred.classes[&z], res.density(i as u32), "N={n} q={q}");
                }
                assert_eq!(pred.multiplicative, pred.split + pred.nonsplit);
                assert_eq!(pred.additive, Q::from_integer(0));
            }
        }
    }

    #[test]
    fn gamma1_3_never_nonsplit_at_7() {
        let p = builtin_parametrization(&LevelSpec::gamma1(3)).unwrap();
        let census = build_census(PrimeField::new(7).unwrap()).unwrap();
        let res = residue_census(&p, &census).unwrap();
        assert_eq!(res.counts[res.kinds.nonsplit() as usize], 0);
        assert!(res.counts[res.kinds.split() as usize] > 0);
    }
}

//! Elliptic curves over `Q` with a rational point of order `N`, produced from
//! Tate normal form parametrizations, and their reduction statistics.
//!
//! For `N = 5..10, 12` the family is a morphism `P(1,1) -> P(4,6)` of reduced
//! degree `e = [SL2(Z) : Gamma1(N)] / 24`. `Gamma1(3)` and `Gamma1(4)` are
//! parametrized by the weighted spaces `P(1,3)` (coefficients `a1, a3`) and
//! `P(1,2)` (`s, r`), each of reduced degree 1.

mod certificate;
mod content;
mod sample;
mod stats;
mod stream;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level_fibers::LevelSpec;
use crate::wps_rational::{
    for_each_point, normalize, Monomial, WeightVector, WpsMorphism, WpsPoint, DEFAULT_SCAN_CEILING,
};

pub use certificate::{aux_prime_orders, tate_model, torsion_certificate, TorsionCertificate};
pub use content::{family_bounds, ContentBound, FamilyBounds};
pub use sample::{sample_family, FamilySample};
pub use stats::{
    local_statistics, local_type, predictions, residue_census, write_stats_csv, KindTable,
    LocalKind, LocalReport, LocalStatistics, Predictions, ResidueCensus,
};
pub use stream::{gamma1_5_scan, ScanReport};

/// Levels with a stored parametrization.
pub const SUPPORTED_LEVELS: [u64; 9] = [3, 4, 5, 6, 7, 8, 9, 10, 12];

/// `(A, B)` as weighted-homogeneous forms on the parameter space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyParametrization {
    pub level: LevelSpec,
    pub morphism: WpsMorphism,
}

impl FamilyParametrization {
    pub fn source(&self) -> &WeightVector {
        &self.morphism.source
    }

    /// Reduced degree `e`.
    pub fn e(&self) -> u32 {
        self.morphism.e
    }

    /// `(A(x), B(x))` before normalization.
    pub fn eval(&self, x: &[i128]) -> Result<(i128, i128)> {
        let v = self.morphism.eval(x)?;
        Ok((v[0], v[1]))
    }

    /// Coefficients of `A(t, 1)` and `B(t, 1)` in ascending powers of `t`;
    /// only meaningful for `P(1,1)` families.
    pub fn binary_coefficients(&self) -> (Vec<i128>, Vec<i128>) {
        let one = |f: &Vec<Monomial>, d: u32| {
            let mut c = vec![0i128; d as usize + 1];
            for m in f {
                c[m.exps[0] as usize] += m.coef;
            }
            c
        };
        let e = self.e();
        (
            one(&self.morphism.polys[0], 4 * e),
            one(&self.morphism.polys[1], 6 * e),
        )
    }
}

fn binary_form(coefs: &[i128]) -> Vec<Monomial> {
    let d = coefs.len() as u32 - 1;
    coefs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| Monomial {
            coef: c,
            exps: vec![i as u32, d - i as u32],
        })
        .collect()
}

fn mono(coef: i128, e0: u32, e1: u32) -> Monomial {
    Monomial {
        coef,
        exps: vec![e0, e1],
    }
}

/// Ascending coefficients of `A(t)` and `B(t)` for the `P(1,1)` families.
fn binary_data(n: u64) -> Option<(Vec<i128>, Vec<i128>)> {
    let (a, b): (&[i128], &[i128]) = match n {
        5 => (
            &[-27, -324, -378, 324, -27],
            &[54, 972, 4050, 0, 4050, -972, 54],
        ),
        6 => (
            &[-27, -324, -810, -324, -243],
            &[54, 972, 5346, 9720, 7290, -2916, -1458],
        ),
        7 => (
            &[-27, -108, 378, 0, -945, 1512, -1134, 324, -27],
            &[
                54, 324, -810, -2484, 9396, -11988, 14742, -26244, 30780, -19116, 6318, -972, 54,
            ],
        ),
        8 => (
            &[-27, 432, -2592, 7776, -12960, 12096, -6048, 1728, -432],
            &[
                54, -1296, 12960, -71712, 246240, -554688, 840672, -855360, 555984, -190080, 0,
                20736, -3456,
            ],
        ),
        9 => (
            &[
                -27, 0, 324, -756, 486, 972, -3078, 4860, -5103, 3456, -1458, 324, -27,
            ],
            &[
                54, 0, -972, 2268, 1458, -16524, 39690, -58320, 73386, -109728, 174960, -228420,
                222912, -160380, 84078, -30780, 7290, -972, 54,
            ],
        ),
        10 => (
            &[
                -27, 216, -432, -1080, 6480, -11664, 6912, 7776, -19440, 19440, -11232, 3456, -432,
            ],
            &[
                54, -648, 2592, -216, -32400, 112752, -128304, -199584, 981072, -1803600, 2133216,
                -2037312, 1926288, -1767744, 1296000, -661824, 217728, -41472, 3456,
            ],
        ),
        12 => (
            &[
                -27, 648, -7128, 47952, -221616, 747792, -1907712, 3753216, -5747760, 6855840,
                -6318000, 4416768, -2269296, 816480, -194400, 31104, -3888,
            ],
            &[
                54,
                -1944,
                33048,
                -353808,
                2682720,
                -15353712,
                68988672,
                -249811776,
                742184208,
                -1831706784,
                3786612624,
                -6590020032,
                9676823760,
                -11984223456,
                12478123872,
                -10854518400,
                7806726864,
                -4566176064,
                2114216640,
                -738377856,
                175146624,
                -19502208,
                -2519424,
                1119744,
                -93312,
            ],
        ),
        _ => return None,
    };
    Some((a.to_vec(), b.to_vec()))
}

/// The stored parametrization of `Gamma1(N)`.
pub fn builtin_parametrization(level: &LevelSpec) -> Result<FamilyParametrization> {
    let unsupported = || {
        Error::BadInput(format!("no stored parametrization for {level}; supported: Gamma1(N), N in {SUPPORTED_LEVELS:?}"))
    };
    if level.m != 1 {
        return Err(unsupported());
    }
    let target = WeightVector::new(vec![4, 6])?;
    let morphism = match level.n {
        3 => WpsMorphism::new(
            WeightVector::new(vec![1, 3])?,
            target,
            vec![
                vec![mono(-27, 4, 0), mono(648, 1, 1)],
                vec![mono(54, 6, 0), mono(-1944, 3, 1), mono(11664, 0, 2)],
            ],
            1,
        )?,
        4 => WpsMorphism::new(
            WeightVector::new(vec![1, 2])?,
            target,
            vec![
                vec![mono(-27, 4, 0), mono(-432, 2, 1), mono(-432, 0, 2)],
                vec![
                    mono(54, 6, 0),
                    mono(1296, 4, 1),
                    mono(6480, 2, 2),
                    mono(-3456, 0, 3),
                ],
            ],
            1,
        )?,
        n => {
            let (a, b) = binary_data(n).ok_or_else(unsupported)?;
            let e = (a.len() as u32 - 1) / 4;
            WpsMorphism::new(
                WeightVector::new(vec![1, 1])?,
                target,
                vec![binary_form(&a), binary_form(&b)],
                e,
            )?
        }
    };
    Ok(FamilyParametrization {
        level: *level,
        morphism,
    })
}

/// `4A^3 + 27B^2 != 0`.
pub fn nonsingular(a: i128, b: i128) -> bool {
    let (a, b) = (BigInt::from(a), BigInt::from(b));
    !(BigInt::from(4) * &a * &a * &a + BigInt::from(27) * &b * &b).is_zero()
}

/// A member of a family: the minimal model in `P(4,6)` and the parameter it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalCurve {
    pub t: Vec<i128>,
    pub point: WpsPoint,
}

impl GlobalCurve {
    pub fn a(&self) -> i128 {
        self.point.coords()[0]
    }

    pub fn b(&self) -> i128 {
        self.point.coords()[1]
    }
}

/// The family member attached to a parameter point, or `None` when the curve is singular.
pub fn curve_at(param: &FamilyParametrization, x: &[i128]) -> Result<Option<GlobalCurve>> {
    let (a, b) = match param.eval(x) {
        Ok(v) => v,
        Err(Error::Overflow(_)) => eval_reduced(param, x)?,
        Err(e) => return Err(e),
    };
    if !nonsingular(a, b) {
        return Ok(None);
    }
    let point = normalize(&WeightVector::new(vec![4, 6])?, &[a, b])?;
    Ok(Some(GlobalCurve {
        t: x.to_vec(),
        point,
    }))
}

/// Every curve whose minimal `(A, B)` leaves `i128` has height above this.
const OVERFLOW_HEIGHT: u64 = 2_300_000;

/// `(A(x), B(x))` evaluated exactly, with small weighted-content primes
/// divided out until both fit in `i128`. Large families overflow before
/// their content is removed even when the minimal model is small.
fn eval_reduced(param: &FamilyParametrization, x: &[i128]) -> Result<(i128, i128)> {
    let xs: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
    let mut a = content::eval_big(&param.morphism.polys[0], &xs);
    let mut b = content::eval_big(&param.morphism.polys[1], &xs);
    if a.is_zero() && b.is_zero() {
        return Ok((0, 0));
    }
    for p in crate::arith::primes_up_to(97) {
        let (p4, p6) = (BigInt::from(p).pow(4), BigInt::from(p).pow(6));
        while (&a % &p4).is_zero() && (&b % &p6).is_zero() {
            a /= &p4;
            b /= &p6;
        }
    }
    match (i128::try_from(&a), i128::try_from(&b)) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(Error::Overflow(format!("minimal model at {x:?}"))),
    }
}

/// Tuning of [`generate_family_with`].
#[derive(Clone, Copy, Debug)]
pub struct GenerationOptions {
    /// Safety factor applied to the numerically found height constant.
    pub margin: f64,
    /// Maximal number of parameter tuples to scan.
    pub ceiling: u128,
    /// Rescan with a 25% larger parameter box and compare.
    pub self_test: bool,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        GenerationOptions {
            margin: 0.9,
            ceiling: DEFAULT_SCAN_CEILING,
            self_test: true,
        }
    }
}

/// All curves of height at most `bound`, each once, ordered by `(H^12, A, B)`.
#[derive(Clone, Debug)]
pub struct Family {
    pub level: LevelSpec,
    pub bound: u64,
    pub curves: Vec<GlobalCurve>,
    /// Parameter height up to which the source was scanned.
    pub scan_height: f64,
    /// Largest number of parameter points mapping to one curve.
    pub max_preimages: usize,
    /// False when the content bound is unproven or the self-test disagreed.
    pub complete: bool,
}

pub fn generate_family(param: &FamilyParametrization, bound: u64) -> Result<Family> {
    generate_family_with(param, bound, GenerationOptions::default())
}

pub fn generate_family_with(
    param: &FamilyParametrization,
    bound: u64,
    opts: GenerationOptions,
) -> Result<Family> {
    let bounds = family_bounds(param)?;
    let scan = |t: f64| -> Result<(Vec<GlobalCurve>, usize)> {
        let mut seen: HashMap<(i128, i128), usize> = HashMap::new();
        let mut curves = Vec::new();
        for_each_point(param.source(), t, opts.ceiling, |x| {
            let c = match curve_at(param, x) {
                Ok(Some(c)) => c,
                Ok(None) => return Ok(()),
                // An i128-overflowing minimal model has height above 2^(127/6).
                Err(Error::Overflow(_)) if bound < OVERFLOW_HEIGHT => return Ok(()),
                Err(e) => return Err(e),
            };
            if c.point.height_at_most(bound) {
                *seen.entry((c.a(), c.b())).or_insert_with(|| {
                    curves.push(c.clone());
                    0
                }) += 1;
            }
            Ok(())
        })?;
        let max_pre = seen.values().copied().max().unwrap_or(0);
        curves.sort_by(|x, y| {
            (x.point.height12(), x.a(), x.b()).cmp(&(y.point.height12(), y.a(), y.b()))
        });
        Ok((curves, max_pre))
    };
    let t = bounds.parameter_height(bound as f64, opts.margin);
    let (curves, max_preimages) = scan(t)?;
    let mut complete = bounds.content.proven;
    if opts.self_test {
        let (wider, _) = scan(t * 1.25)?;
        complete &= wider.len() == curves.len();
    }
    Ok(Family {
        level: param.level,
        bound,
        curves,
        scan_height: t,
        max_preimages,
        complete,
    })
}

#[derive(Serialize, Deserialize)]
struct FamilyLine {
    t: Vec<serde_json::Value>,
    #[serde(rename = "A")]
    a: serde_json::Value,
    #[serde(rename = "B")]
    b: serde_json::Value,
    height12: serde_json::Value,
}

fn num(v: impl ToString) -> serde_json::Value {
    crate::wps_rational::big_number(&v.to_string())
}

/// One JSON object per curve: `{"t":[t0,t1],"A":..,"B":..,"height12":..}`.
pub fn write_family_jsonl<W: Write>(family: &Family, w: W) -> Result<()> {
    write_curves_jsonl(&family.curves, w)
}

pub fn write_curves_jsonl<W: Write>(curves: &[GlobalCurve], mut w: W) -> Result<()> {
    for c in curves {
        let line = FamilyLine {
            t: c.t.iter().map(num).collect(),
            a: num(c.a()),
            b: num(c.b()),
            height12: num(c.point.height12().expect("weights divide 12")),
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a family cache; every line is renormalized and its height re-checked.
pub fn read_family_jsonl<R: BufRead>(r: R) -> Result<Vec<GlobalCurve>> {
    let w46 = WeightVector::new(vec![4, 6])?;
    let int = |v: &serde_json::Value| -> Result<i128> {
        v.to_string()
            .parse()
            .map_err(|_| Error::Parse(format!("not an integer: {v}")))
    };
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FamilyLine = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        let point = normalize(&w46, &[int(&rec.a)?, int(&rec.b)?])?;
        if point.coords() != [int(&rec.a)?, int(&rec.b)?] {
            return Err(Error::Invariant(format!(
                "line {}: ({}, {}) is not minimal",
                i + 1,
                rec.a,
                rec.b
            )));
        }
        if num(point.height12().expect("weights divide 12")) != rec.height12 {
            return Err(Error::Invariant(format!(
                "line {}: stored height12 is wrong",
                i + 1
            )));
        }
        let t = rec.t.iter().map(int).collect::<Result<Vec<_>>>()?;
        out.push(GlobalCurve { t, point });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusp_census::index_and_e;

    #[test]
    fn degrees_match_index() {
        for n in [5, 6, 7, 8, 9, 10, 12] {
            let p = builtin_parametrization(&LevelSpec::gamma1(n)).unwrap();
            let (_, e) = index_and_e(&LevelSpec::gamma1(n)).unwrap();
            assert_eq!(crate::Q::from_integer(p.e() as i128), e, "N={n}");
            let (a, b) = p.binary_coefficients();
            assert_eq!(
                (a.len() - 1, b.len() - 1),
                (4 * p.e() as usize, 6 * p.e() as usize)
            );
        }
        assert_eq!(
            builtin_parametrization(&LevelSpec::gamma1(5)).unwrap().e(),
            1
        );
        assert_eq!(
            builtin_parametrization(&LevelSpec::gamma1(7)).unwrap().e(),
            2
        );
        assert!(builtin_parametrization(&LevelSpec::gamma1(11)).is_err());
        assert!(builtin_parametrization(&LevelSpec::gamma(5)).is_err());
    }

    #[test]
    fn content_is_removed_before_i128_conversion() {
        // Raw values at (15, -13) overflow i128 for N = 12.
        let p = builtin_parametrization(&LevelSpec::gamma1(12)).unwrap();
        assert!(matches!(p.eval(&[15, -13]), Err(Error::Overflow(_))));
        let fam = generate_family(&p, 8000).unwrap();
        assert!(fam.complete);
        for c in &fam.curves {
            assert_eq!(torsion_certificate(&p, c).unwrap().order, 12);
            let (a, b) = p
                .eval(&c.t)
                .unwrap_or_else(|_| eval_reduced(&p, &c.t).unwrap());
            let direct = normalize(&WeightVector::new(vec![4, 6]).unwrap(), &[a, b]).unwrap();
            assert_eq!(direct, c.point);
        }
    }

    #[test]
    fn small_family_round_trip() {
        let p = builtin_parametrization(&LevelSpec::gamma1(5)).unwrap();
        let fam = generate_family(&p, 60).unwrap();
        assert!(fam.complete);
        assert!(!fam.curves.is_empty());
        assert_eq!(fam.max_preimages, 2);
        let mut buf = Vec::new();
        write_family_jsonl(&fam, &mut buf).unwrap();
        let back = read_family_jsonl(&buf[..]).unwrap();
        assert_eq!(back, fam.curves);
        assert!(generate_family(&p, 0).unwrap().curves.is_empty());
    }
}

//! Torsion certificates: the Tate normal form point `(0, 0)` carried to the
//! normalized short model, with its order checked by the group law over `Q`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{FamilyParametrization, GlobalCurve};
use crate::arith::{gcd, is_prime, rem_i128};
use crate::error::{Error, Result};
use crate::ff_curves::{point_count, PrimeField, ShortWeierstrassCurve};

type R = BigRational;

fn r(v: i128) -> R {
    R::from_integer(BigInt::from(v))
}

/// Weierstrass coefficients `[a1, a2, a3, a4, a6]` of the Tate-form curve at
/// parameter `x`, or `None` at a pole.
pub fn tate_model(param: &FamilyParametrization, x: &[i128]) -> Option<[R; 5]> {
    let zero = R::zero;
    match param.level.n {
        3 => Some([r(x[0]), zero(), r(x[1]), zero(), zero()]),
        4 => Some([r(x[0]), -r(x[1]), -r(x[0]) * r(x[1]), zero(), zero()]),
        n => {
            if x[1] == 0 {
                return None;
            }
            let t = R::new(BigInt::from(x[0]), BigInt::from(x[1]));
            let one = R::one;
            let (b, c) = match n {
                5 => (t.clone(), t),
                6 => (&t + &t * &t, t),
                7 => (&t * &t * &t - &t * &t, &t * &t - &t),
                8 => {
                    if t.is_zero() {
                        return None;
                    }
                    let b = (r(2) * &t - one()) * (&t - one());
                    let c = &b / &t;
                    (b, c)
                }
                9 => {
                    let c = &t * &t * (&t - one());
                    (&c * (&t * &t - &t + one()), c)
                }
                10 => {
                    let d = &t * &t - r(3) * &t + one();
                    if d.is_zero() {
                        return None;
                    }
                    let c = -(&t * (&t - one()) * (r(2) * &t - one())) / &d;
                    (-(&c * &t * &t) / &d, c)
                }
                12 => {
                    if t == one() {
                        return None;
                    }
                    let m = (r(3) * &t - r(3) * &t * &t - one()) / (&t - one());
                    let f = &m / (one() - &t);
                    let d = &m + &t;
                    let c = &f * (&d - one());
                    (&c * &d, c)
                }
                _ => return None,
            };
            Some([one() - c, -b.clone(), -b, zero(), zero()])
        }
    }
}

/// `(c4, c6)` of a general Weierstrass model.
fn c4_c6(a: &[R; 5]) -> (R, R) {
    let [a1, a2, a3, a4, a6] = a;
    let b2 = a1 * a1 + r(4) * a2;
    let b4 = r(2) * a4 + a1 * a3;
    let b6 = a3 * a3 + r(4) * a6;
    let c4 = &b2 * &b2 - r(24) * &b4;
    let c6 = -(&b2 * &b2 * &b2) + r(36) * &b2 * &b4 - r(216) * &b6;
    (c4, c6)
}

#[derive(Clone, Debug, PartialEq)]
enum Pt {
    Inf,
    Aff(R, R),
}

fn add(p: &Pt, q: &Pt, a: &R) -> Pt {
    match (p, q) {
        (Pt::Inf, _) => q.clone(),
        (_, Pt::Inf) => p.clone(),
        (Pt::Aff(x1, y1), Pt::Aff(x2, y2)) => {
            let lambda = if x1 == x2 {
                if (y1 + y2).is_zero() {
                    return Pt::Inf;
                }
                (r(3) * x1 * x1 + a) / (r(2) * y1)
            } else {
                (y2 - y1) / (x2 - x1)
            };
            let x3 = &lambda * &lambda - x1 - x2;
            let y3 = &lambda * (x1 - &x3) - y1;
            Pt::Aff(x3, y3)
        }
    }
}

fn exact_sqrt(v: &R) -> Option<R> {
    if v.is_negative() {
        return None;
    }
    let n = v.numer().sqrt();
    let d = v.denom().sqrt();
    (&n * &n == *v.numer() && &d * &d == *v.denom()).then(|| R::new(n, d))
}

/// A rational point on the normalized curve and its exact order.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionCertificate {
    pub x: BigRational,
    pub y: BigRational,
    pub order: u64,
    /// Integral coordinates with `y = 0` or `y^2 | 4A^3 + 27B^2`.
    pub nagell_lutz: bool,
}

/// Carries the Tate point to `curve` (whose parameter must be `curve.t`) and
/// computes its order, up to `2 * level + 2`.
pub fn torsion_certificate(
    param: &FamilyParametrization,
    curve: &GlobalCurve,
) -> Result<TorsionCertificate> {
    let model = tate_model(param, &curve.t).ok_or_else(|| {
        Error::BadInput(format!(
            "parameter {:?} is a pole of the Tate form",
            curve.t
        ))
    })?;
    let (c4, c6) = c4_c6(&model);
    let (a0, b0) = (r(-27) * c4, r(-54) * c6);
    let (a, b) = (r(curve.a()), r(curve.b()));
    if a0.is_zero() || b0.is_zero() {
        return Err(Error::BadInput("certificates need j != 0, 1728".into()));
    }
    // (A, B) = (s^4 A0, s^6 B0) with s rational.
    let s2 = (&b * &a0) / (&a * &b0);
    if &s2 * &s2 != &a / &a0 {
        return Err(Error::Invariant(format!(
            "curve {:?} is not a rescaling of its Tate model",
            curve.point
        )));
    }
    let s = exact_sqrt(&s2).ok_or_else(|| {
        Error::Invariant(format!(
            "curve {:?} is a twist of its Tate model",
            curve.point
        ))
    })?;
    let [a1, a2, a3, ..] = &model;
    let b2 = a1 * a1 + r(4) * a2;
    let (x, y) = (&s2 * r(3) * b2, &s2 * &s * r(108) * a3);
    if &y * &y != &x * &x * &x + &a * &x + &b {
        return Err(Error::Invariant(
            "transported point is not on the curve".into(),
        ));
    }
    let start = Pt::Aff(x.clone(), y.clone());
    let mut acc = start.clone();
    let mut order = 1;
    let limit = 2 * param.level.level() + 2;
    while acc != Pt::Inf {
        if order > limit {
            return Err(Error::Invariant(format!(
                "point on {:?} has order above {limit}",
                curve.point
            )));
        }
        acc = add(&acc, &start, &a);
        order += 1;
    }
    let disc = BigInt::from(4) * BigInt::from(curve.a()).pow(3)
        + BigInt::from(27) * BigInt::from(curve.b()).pow(2);
    let nagell_lutz = x.is_integer()
        && y.is_integer()
        && (y.is_zero() || (&disc % (y.numer() * y.numer())).is_zero());
    Ok(TorsionCertificate {
        x,
        y,
        order,
        nagell_lutz,
    })
}

/// `#E(F_l)` for the first `count` primes `l >= 5` of good reduction not dividing the level.
pub fn aux_prime_orders(curve: &GlobalCurve, level: u64, count: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut l = 5;
    while out.len() < count {
        if is_prime(l) && gcd(l, level) == 1 {
            let (a, b) = (rem_i128(curve.a(), l), rem_i128(curve.b(), l));
            if let Ok(c) =
                ShortWeierstrassCurve::new(PrimeField::new(l).expect("prime"), a as i64, b as i64)
            {
                out.push((l, point_count(&c)));
            }
        }
        l += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level_fibers::LevelSpec;
    use crate::torsion_families::{builtin_parametrization, curve_at};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fifty_random_parameters_per_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in [3u64, 4, 5, 6, 7, 8, 9, 10, 12] {
            let p = builtin_parametrization(&LevelSpec::gamma1(n)).unwrap();
            let mut done = 0;
            while done < 50 {
                let x = [rng.gen_range(-30i128..=30), rng.gen_range(1i128..=30)];
                let Ok(Some(c)) = curve_at(&p, &x) else {
                    continue;
                };
                if c.a() == 0 || c.b() == 0 || tate_model(&p, &x).is_none() {
                    continue;
                }
                let cert = torsion_certificate(&p, &c).unwrap();
                assert_eq!(cert.order, n, "N={n} x={x:?}");
                if n >= 5 {
                    assert!(cert.nagell_lutz, "N={n} x={x:?}");
                }
                for (l, order) in aux_prime_orders(&c, n, 2) {
                    assert_eq!(order % n, 0, "N={n} x={x:?} l={l}");
                }
                done += 1;
            }
        }
    }
}

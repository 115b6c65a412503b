//! Seeded uniform sampling of a family at heights too large to enumerate.
//!
//! Parameters are drawn uniformly from the box that contains every minimal
//! parameter of a curve of height `<= B`, and rejected unless minimal,
//! sign-canonical, nonsingular and of height `<= B`. Accepted curves are
//! uniform over minimal parameters, i.e. over curves counted with their
//! number of parameters (one for all but a thin subset).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{curve_at, family_bounds, FamilyParametrization, GlobalCurve};
use crate::error::{Error, Result};
use crate::wps_rational::normalize;

#[derive(Clone, Debug)]
pub struct FamilySample {
    pub bound: u64,
    pub curves: Vec<GlobalCurve>,
    pub draws: u64,
    /// Half-widths of the sampling box.
    pub box_limits: Vec<i128>,
}

pub fn sample_family(
    param: &FamilyParametrization,
    bound: u64,
    n: usize,
    seed: u64,
) -> Result<FamilySample> {
    let bounds = family_bounds(param)?;
    let k = bounds.parameter_height(bound as f64, 0.9);
    let box_limits: Vec<i128> = param
        .source()
        .entries()
        .iter()
        .map(|&w| k.powi(w as i32).floor() as i128)
        .collect();
    if box_limits.iter().any(|&m| m > 1i128 << 60) {
        return Err(Error::Resource(format!(
            "sampling box {box_limits:?} is too large"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_draws = (n as u64).saturating_mul(10_000).max(1_000_000);
    let mut curves = Vec::with_capacity(n);
    let mut draws = 0;
    while curves.len() < n {
        if draws >= max_draws {
            return Err(Error::Resource(format!(
                "only {} of {n} samples accepted in {draws} draws",
                curves.len()
            )));
        }
        draws += 1;
        let x: Vec<i128> = box_limits.iter().map(|&m| rng.gen_range(-m..=m)).collect();
        if x.iter().all(|&c| c == 0) || normalize(param.source(), &x)?.coords() != x.as_slice() {
            continue;
        }
        let Some(c) = curve_at(param, &x)? else {
            continue;
        };
        if c.point.height_at_most(bound) {
            curves.push(c);
        }
    }
    Ok(FamilySample {
        bound,
        curves,
        draws,
        box_limits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level_fibers::LevelSpec;
    use crate::torsion_families::{builtin_parametrization, generate_family};

    #[test]
    fn samples_lie_in_the_enumerated_family() {
        let p = builtin_parametrization(&LevelSpec::gamma1(3)).unwrap();
        let fam = generate_family(&p, 6).unwrap();
        let s = sample_family(&p, 6, 300, 0).unwrap();
        let set: std::collections::HashSet<_> = fam.curves.iter().map(|c| (c.a(), c.b())).collect();
        assert!(s.curves.iter().all(|c| set.contains(&(c.a(), c.b()))));
        let again = sample_family(&p, 6, 300, 0).unwrap();
        assert_eq!(s.curves, again.curves);
    }
}

//! Pointwise Monte Carlo simulation of `T`, independent of the set algebra.
//!
//! A point is a level of some stage tower. Stepping past the top of a tower
//! draws which column of the next stage the point sits in; the `r` copies of a
//! level have equal measure, so the draw is uniform. Columns are drawn only
//! when an ascent needs them.

use num_bigint::{BigInt, RandBigInt, Sign};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::StageGeometry;
use crate::levelset::LevelSet;
use crate::rational::to_f64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointState {
    pub stage: usize,
    pub level: BigInt,
}

impl PointState {
    pub fn new(stage: usize, level: impl Into<BigInt>) -> Self {
        Self {
            stage,
            level: level.into(),
        }
    }
}

// Re-express `state` one stage up, inside column `column` (1-based).
fn lift(geom: &StageGeometry, state: &mut PointState, column: usize) -> Result<()> {
    if state.stage >= geom.depth() {
        return Err(Error::InsufficientDepth {
            needed: state.stage + 1,
            built: geom.depth(),
        });
    }
    let k = geom.base(column, state.stage)?;
    state.level += k;
    state.stage += 1;
    Ok(())
}

/// One application of `T`. `draw(r)` returns a column in `1..=r`.
pub fn successor(
    geom: &StageGeometry,
    state: &PointState,
    mut draw: impl FnMut(usize) -> usize,
) -> Result<PointState> {
    let mut next = state.clone();
    while &next.level + 1 >= *geom.height(next.stage)? {
        let r = geom.r(next.stage)?;
        lift(geom, &mut next, draw(r))?;
    }
    next.level += 1;
    Ok(next)
}

/// `T^d` for `d ≥ 0`, drawing exactly the columns `d` single steps would draw.
pub fn advance(
    geom: &StageGeometry,
    state: &PointState,
    d: &BigInt,
    mut draw: impl FnMut(usize) -> usize,
) -> Result<PointState> {
    if d.sign() == Sign::Minus {
        return Err(Error::InvalidParams(
            "backward orbits are not simulated".into(),
        ));
    }
    let mut next = state.clone();
    while &next.level + d >= *geom.height(next.stage)? {
        let r = geom.r(next.stage)?;
        lift(geom, &mut next, draw(r))?;
    }
    next.level += d;
    Ok(next)
}

/// Level of `state` inside the stage-`stage` tower, or `None` when the point
/// sits on a spacer added after that stage.
pub fn project(geom: &StageGeometry, state: &PointState, stage: usize) -> Result<Option<BigInt>> {
    let mut level = state.level.clone();
    let mut cur = state.stage;
    while cur > stage {
        let st = geom.stage(cur - 1)?;
        match st.locate(geom.height(cur - 1)?, &level) {
            Some((_, inner)) => level = inner,
            None => return Ok(None),
        }
        cur -= 1;
    }
    Ok(Some(level))
}

/// Stream for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
}

/// Monte Carlo estimate of `ρ_F(d)`: start uniformly on `F`, apply `T^d`,
/// record whether the point is back in `F`.
///
/// Each sample draws from its own stream, so the result does not depend on
/// scheduling.
pub fn estimate_autocorrelation(
    geom: &StageGeometry,
    set: &LevelSet,
    d: &BigInt,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::InvalidParams("sample count must be positive".into()));
    }
    if d.sign() == Sign::Minus {
        return Err(Error::InvalidParams("shift must be non-negative".into()));
    }
    let mass = to_f64(&set.measure(geom)?);
    let levels = set.level_count();
    if levels.is_zero() {
        return Ok(Estimate {
            estimate: 0.0,
            std_error: 0.0,
            hits: 0,
            samples,
        });
    }
    let stage = set.stage();
    let hits = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let mut rng = sample_rng(seed, i);
            let idx = rng.gen_bigint_range(&BigInt::zero(), &levels);
            let level = set.nth_level(&idx).expect("index below level count");
            let start = PointState::new(stage, level);
            let end = advance(geom, &start, d, |r| rng.gen_range(1..=r))?;
            let hit = match project(geom, &end, stage)? {
                Some(l) => set.contains(&l),
                None => false,
            };
            Ok(hit as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p = hits as f64 / samples as f64;
    Ok(Estimate {
        estimate: mass * p,
        std_error: mass * (p * (1.0 - p) / samples as f64).sqrt(),
        hits,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::levelset::tower_set;
    use crate::params::reference::decimal_sidon;
    use std::collections::HashSet;

    fn dec() -> StageGeometry {
        build_geometry(&decimal_sidon(3), 4).unwrap()
    }

    #[test]
    fn successor_examples() {
        let g = dec();
        let s = successor(&g, &PointState::new(2, 5), |_| unreachable!()).unwrap();
        assert_eq!(s, PointState::new(2, 6));
        let top = PointState::new(2, 1109);
        assert_eq!(
            successor(&g, &top, |_| 1).unwrap(),
            PointState::new(3, 1110)
        );
        assert_eq!(
            successor(&g, &top, |_| 3).unwrap(),
            PointState::new(3, 123_210)
        );
    }

    #[test]
    fn ascent_beyond_depth_fails() {
        let g = dec();
        let top = PointState::new(4, g.height(4).unwrap() - 1);
        assert!(matches!(
            successor(&g, &top, |_| 1),
            Err(Error::InsufficientDepth { needed: 5, .. })
        ));
    }

    #[test]
    fn advance_equals_repeated_successor() {
        let g = dec();
        for seed in 0..20u64 {
            let d = 1 + (seed * 7919) % 3000;
            let mut rng_a = sample_rng(seed, 0);
            let mut rng_b = sample_rng(seed, 0);
            let start = PointState::new(1, 0);
            let jumped = advance(&g, &start, &BigInt::from(d), |r| rng_a.gen_range(1..=r)).unwrap();
            let mut walked = start.clone();
            let mut seen = HashSet::new();
            for _ in 0..d {
                walked = successor(&g, &walked, |r| rng_b.gen_range(1..=r)).unwrap();
                // states along a single orbit never repeat
                assert!(seen.insert(walked.clone()));
            }
            assert_eq!(jumped, walked);
        }
    }

    #[test]
    fn projection_drops_spacers() {
        let g = dec();
        assert_eq!(
            project(&g, &PointState::new(2, 110), 1).unwrap(),
            Some(0.into())
        );
        assert_eq!(project(&g, &PointState::new(2, 111), 1).unwrap(), None);
        assert_eq!(
            project(&g, &PointState::new(3, 122_210), 2).unwrap(),
            Some(110.into())
        );
    }

    #[test]
    fn zero_shift_is_exact() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        let e = estimate_autocorrelation(&g, &x1, &BigInt::from(0), 1000, 7).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        let d = BigInt::from(10);
        let a = estimate_autocorrelation(&g, &x1, &d, 5000, 11).unwrap();
        let b = estimate_autocorrelation(&g, &x1, &d, 5000, 11).unwrap();
        assert_eq!(a, b);
    }
}

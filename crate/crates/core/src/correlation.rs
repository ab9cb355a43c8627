//! Intersection measures `μ(T^d A ∩ B)` and autocorrelations of level sets.
//!
//! Two independent engines are provided:
//!
//! * the run-list engine refines both sets to a stage deep enough that a
//!   shift by `d` stays inside the tower, then intersects run lists;
//! * the stacked engine never materialises deep refinements. It uses that a
//!   stage-`l` set is the union of `r_{l-1}` translated copies of its
//!   stage-`(l-1)` form, so the plain overlap count satisfies
//!   `N_l(e) = Σ_{c,c'} N_{l-1}(e + k(c) - k(c'))`, with `N_l(e) = 0` once
//!   `|e| ≥ h_l`. Counts are memoised per `(stage, offset)`.
//!
//! Shift profiles over large ranges of `d` are computed from the run-list
//! form: each pair of runs contributes a trapezoid in `d`, so the overlap
//! count is piecewise linear with integer breakpoints.

use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::geometry::StageGeometry;
use crate::levelset::LevelSet;
use crate::rational::Rational;

/// Upper bound on run pairs a single profile may touch.
pub const DEFAULT_PAIR_BUDGET: usize = 40_000_000;

fn lift_to_common(
    geom: &StageGeometry,
    a: &LevelSet,
    b: &LevelSet,
) -> Result<(LevelSet, LevelSet)> {
    let s = a.stage().max(b.stage());
    Ok((a.refine(geom, s)?, b.refine(geom, s)?))
}

/// Smallest stage `K ≥ set.stage()` at which every level of `set` shifted by
/// `|d|` stays below `h_K`.
pub fn headroom_stage(geom: &StageGeometry, set: &LevelSet, d: &BigInt) -> Result<usize> {
    let d = d.abs();
    let mut k = set.stage();
    let mut m = match set.max_level() {
        Some(m) => m,
        None => return Ok(k),
    };
    loop {
        if &m + &d < *geom.height(k)? {
            return Ok(k);
        }
        if k >= geom.depth() {
            return Err(Error::InsufficientDepth {
                needed: k + 1,
                built: geom.depth(),
            });
        }
        m += geom.stage(k)?.bases.last().expect("r >= 1");
        k += 1;
    }
}

/// Shallowest stage at which plain integer overlap counts give `μ(T^d A ∩ B)`
/// for every `0 ≤ d ≤ hi`.
///
/// Going from stage `L` to `L + 1` multiplies every count by `r_L` as long as
/// no shift can carry a copy of the stage-`L` tower onto another one, which
/// holds when `hi ≤ min_i s_L(i)`. Starting from the headroom stage, stages
/// are dropped while that holds.
pub fn profile_stage(geom: &StageGeometry, set: &LevelSet, hi: &BigInt) -> Result<usize> {
    let mut k = headroom_stage(geom, set, hi)?;
    while k > set.stage() {
        let st = geom.stage(k - 1)?;
        match st.spacers.iter().min() {
            Some(s) if hi <= s => k -= 1,
            _ => break,
        }
    }
    Ok(k)
}

/// Exact `μ(T^d A ∩ B)` by refinement and run-list intersection.
///
/// Negative shifts use `μ(T^{-d} A ∩ B) = μ(A ∩ T^d B)`.
pub fn measure_intersection(
    geom: &StageGeometry,
    a: &LevelSet,
    b: &LevelSet,
    d: &BigInt,
) -> Result<Rational> {
    if d.is_negative() {
        return measure_intersection(geom, b, a, &-d);
    }
    let (a, b) = lift_to_common(geom, a, b)?;
    let k = headroom_stage(geom, &a, d)?;
    let a = a.refine(geom, k)?;
    let b = b.refine(geom, k)?;
    Ok(Rational::from_integer(a.shifted_overlap(&b, d)) * geom.level_measure(k)?)
}

/// Memoised stacked engine for `μ(T^d A ∩ B)`.
pub struct Correlator<'g> {
    geom: &'g StageGeometry,
    a: LevelSet,
    b: LevelSet,
    counts: RwLock<HashMap<(usize, BigInt), BigInt>>,
}

impl<'g> Correlator<'g> {
    pub fn new(geom: &'g StageGeometry, a: &LevelSet, b: &LevelSet) -> Result<Self> {
        let (a, b) = lift_to_common(geom, a, b)?;
        Ok(Self {
            geom,
            a,
            b,
            counts: RwLock::new(HashMap::new()),
        })
    }

    pub fn geometry(&self) -> &'g StageGeometry {
        self.geom
    }

    /// Plain overlap count `|(A_l + e) ∩ B_l|` of the stage-`l` representations.
    pub fn overlap_count(&self, l: usize, e: &BigInt) -> Result<BigInt> {
        let s = self.a.stage();
        if l == s {
            return Ok(self.a.shifted_overlap(&self.b, e));
        }
        if &e.abs() >= self.geom.height(l)? {
            return Ok(BigInt::zero());
        }
        let key = (l, e.clone());
        if let Some(v) = self.counts.read().expect("poisoned").get(&key) {
            return Ok(v.clone());
        }
        let h_prev = self.geom.height(l - 1)?;
        let st = self.geom.stage(l - 1)?;
        let lo = -(h_prev + e);
        let hi = h_prev - e;
        let mut total = BigInt::zero();
        for (delta, mult) in st.differences_between(&lo, &hi) {
            let sub = self.overlap_count(l - 1, &(e + delta))?;
            if !sub.is_zero() {
                total += sub * *mult;
            }
        }
        self.counts
            .write()
            .expect("poisoned")
            .insert(key, total.clone());
        Ok(total)
    }

    /// Exact `μ(T^d A ∩ B)`.
    pub fn measure(&self, d: &BigInt) -> Result<Rational> {
        let probe = if d.is_negative() { &self.b } else { &self.a };
        let k = headroom_stage(self.geom, probe, d)?;
        Ok(Rational::from_integer(self.overlap_count(k, d)?) * self.geom.level_measure(k)?)
    }
}

/// `ρ_F(d) = μ(T^d F ∩ F)` with a per-set cache keyed by `|d|`.
///
/// Safe to share across threads; concurrent inserts of the same key are benign
/// since values are deterministic.
pub struct Autocorrelator<'g> {
    engine: Correlator<'g>,
    cache: RwLock<HashMap<BigInt, Rational>>,
    set: LevelSet,
}

impl<'g> Autocorrelator<'g> {
    pub fn new(geom: &'g StageGeometry, set: &LevelSet) -> Result<Self> {
        geom.check_stage(set.stage())?;
        Ok(Self {
            engine: Correlator::new(geom, set, set)?,
            cache: RwLock::new(HashMap::new()),
            set: set.clone(),
        })
    }

    pub fn set(&self) -> &LevelSet {
        &self.set
    }

    pub fn geometry(&self) -> &'g StageGeometry {
        self.engine.geom
    }

    /// `μ(F)`.
    pub fn mass(&self) -> Result<Rational> {
        self.set.measure(self.engine.geom)
    }

    pub fn rho(&self, d: &BigInt) -> Result<Rational> {
        let key = d.abs();
        if let Some(v) = self.cache.read().expect("poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = self.engine.measure(&key)?;
        self.cache.write().expect("poisoned").insert(key, v.clone());
        Ok(v)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().expect("poisoned").len()
    }
}

/// One-shot `ρ_F(d)`.
pub fn autocorrelation(geom: &StageGeometry, set: &LevelSet, d: &BigInt) -> Result<Rational> {
    Autocorrelator::new(geom, set)?.rho(d)
}

/// Piecewise-linear overlap count of `T^d A ∩ B` for `d ∈ [lo, hi]`.
///
/// `knots` holds `(d, count)` at `lo`, `hi` and every breakpoint in between;
/// the count is linear between consecutive knots.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub stage: usize,
    pub lo: BigInt,
    pub hi: BigInt,
    pub level_measure: Rational,
    knots: Vec<(BigInt, BigInt)>,
}

/// Inclusive integer range.
pub type Span = (BigInt, BigInt);

impl Profile {
    pub fn knots(&self) -> &[(BigInt, BigInt)] {
        &self.knots
    }

    pub fn count_at(&self, d: &BigInt) -> Option<BigInt> {
        if d < &self.lo || d > &self.hi {
            return None;
        }
        let idx = self.knots.partition_point(|(x, _)| x <= d);
        let (x0, c0) = &self.knots[idx - 1];
        if x0 == d || idx == self.knots.len() {
            return Some(c0.clone());
        }
        let (x1, c1) = &self.knots[idx];
        let slope = (c1 - c0) / (x1 - x0);
        Some(c0 + slope * (d - x0))
    }

    pub fn rho_at(&self, d: &BigInt) -> Option<Rational> {
        self.count_at(d)
            .map(|c| Rational::from_integer(c) * &self.level_measure)
    }

    /// Maximum over the range and the first `d` attaining it.
    pub fn max(&self) -> (BigInt, Rational) {
        let (mut arg, mut best) = (self.knots[0].0.clone(), self.knots[0].1.clone());
        for (x, c) in &self.knots[1..] {
            if c > &best {
                best = c.clone();
                arg = x.clone();
            }
        }
        (arg, Rational::from_integer(best) * &self.level_measure)
    }

    /// Maximum over `[lo, hi] ∩ [self.lo, self.hi]` and the first `d` attaining it.
    pub fn max_in(&self, lo: &BigInt, hi: &BigInt) -> Option<(BigInt, Rational)> {
        let lo = if lo > &self.lo { lo } else { &self.lo };
        let hi = if hi < &self.hi { hi } else { &self.hi };
        if lo > hi {
            return None;
        }
        let mut best = (lo.clone(), self.count_at(lo)?);
        let inner = self.knots.iter().filter(|(x, _)| x > lo && x <= hi);
        for (x, c) in inner.chain(std::iter::once(&(hi.clone(), self.count_at(hi)?))) {
            if c > &best.1 {
                best = (x.clone(), c.clone());
            }
        }
        Some((best.0, Rational::from_integer(best.1) * &self.level_measure))
    }

    /// Maximal integer ranges on which the count is positive.
    pub fn support(&self) -> Vec<Span> {
        let mut out: Vec<Span> = Vec::new();
        let mut push = |lo: BigInt, hi: BigInt| match out.last_mut() {
            Some((_, last_hi)) if &*last_hi + 1 >= lo => {
                if hi > *last_hi {
                    *last_hi = hi;
                }
            }
            _ => out.push((lo, hi)),
        };
        for (i, (x, c)) in self.knots.iter().enumerate() {
            if c.is_positive() {
                push(x.clone(), x.clone());
            }
            if let Some((x1, c1)) = self.knots.get(i + 1) {
                if (c.is_positive() || c1.is_positive()) && x1 - x > BigInt::from(1) {
                    push(x + 1, x1 - 1);
                }
            }
        }
        out
    }

    /// Every `(d, ρ(d))` with `ρ(d) > 0`, failing if there are more than `limit`.
    pub fn points(&self, limit: usize) -> Result<Vec<(BigInt, Rational)>> {
        let support = self.support();
        let total: BigInt = support.iter().map(|(a, b)| b - a + 1).sum();
        if total > BigInt::from(limit) {
            return Err(Error::Budget(format!(
                "{total} nonzero shifts exceed the listing limit {limit}"
            )));
        }
        let mut out = Vec::new();
        for (a, b) in support {
            let mut d = a;
            while d <= b {
                let v = self.rho_at(&d).expect("in range");
                out.push((d.clone(), v));
                d += 1;
            }
        }
        Ok(out)
    }
}

/// Exhaustive profile of `μ(T^d A ∩ B)` for `0 ≤ lo ≤ d ≤ hi`.
pub fn shift_profile(
    geom: &StageGeometry,
    a: &LevelSet,
    b: &LevelSet,
    lo: &BigInt,
    hi: &BigInt,
) -> Result<Profile> {
    shift_profile_with_budget(geom, a, b, lo, hi, DEFAULT_PAIR_BUDGET)
}

pub fn shift_profile_with_budget(
    geom: &StageGeometry,
    a: &LevelSet,
    b: &LevelSet,
    lo: &BigInt,
    hi: &BigInt,
    budget: usize,
) -> Result<Profile> {
    if lo.is_negative() || lo > hi {
        return Err(Error::InvalidParams(format!(
            "shift range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
        )));
    }
    let (a, b) = lift_to_common(geom, a, b)?;
    let k = profile_stage(geom, &a, hi)?.max(profile_stage(geom, &b, hi)?);
    let a = a.refine(geom, k)?;
    let b = b.refine(geom, k)?;
    profile_at_stage(geom, &a, &b, lo, hi, budget)
}

/// Profile of two sets already refined to a common stage with headroom for `hi`.
pub(crate) fn profile_at_stage(
    geom: &StageGeometry,
    a: &LevelSet,
    b: &LevelSet,
    lo: &BigInt,
    hi: &BigInt,
    budget: usize,
) -> Result<Profile> {
    let stage = a.stage();
    debug_assert_eq!(stage, b.stage());
    let bruns = b.runs();
    let mut events: Vec<(BigInt, i8)> = Vec::new();
    let mut pairs = 0usize;
    for ar in a.runs() {
        let first = bruns.partition_point(|br| br.end <= &ar.start + lo);
        let last = bruns.partition_point(|br| br.start < &ar.end + hi);
        if first >= last {
            continue;
        }
        pairs += last - first;
        if pairs > budget {
            return Err(Error::Budget(format!(
                "more than {budget} run pairs needed for shifts in [{lo}, {hi}]"
            )));
        }
        let la = ar.len();
        for br in &bruns[first..last] {
            let lb = br.len();
            let m = if la < lb { &la } else { &lb };
            let t1 = &br.start - &ar.end;
            let t4 = &br.end - &ar.start;
            let t2 = &t1 + m;
            let t3 = &t4 - m;
            events.push((t1, 1));
            events.push((t2, -1));
            events.push((t3, -1));
            events.push((t4, 1));
        }
    }
    events.sort();

    let mut xs: Vec<BigInt> = Vec::with_capacity(events.len() + 2);
    xs.push(lo.clone());
    xs.extend(
        events
            .iter()
            .filter(|(t, _)| t > lo && t < hi)
            .map(|(t, _)| t.clone()),
    );
    xs.push(hi.clone());
    xs.dedup();

    // f(x) = Σ_{t ≤ x} w (x - t)
    let mut knots = Vec::with_capacity(xs.len());
    let mut sw = BigInt::zero();
    let mut swt = BigInt::zero();
    let mut ev = events.iter().peekable();
    for x in xs {
        while let Some((t, w)) = ev.peek() {
            if *t > x {
                break;
            }
            sw += *w as i64;
            swt += t * (*w as i64);
            ev.next();
        }
        let c = &x * &sw - &swt;
        knots.push((x, c));
    }
    Ok(Profile {
        stage,
        lo: lo.clone(),
        hi: hi.clone(),
        level_measure: geom.level_measure(stage)?.clone(),
        knots,
    })
}

/// `max_{lo ≤ d ≤ hi} μ(T^d A ∩ A)` and the first `d` attaining it.
///
/// At the profile stage `K` the set is `r_{K-1}` translated copies of its
/// stage-`(K-1)` form, so the plain count is `Σ_D mult(D) N_{K-1}(d - D)` over
/// base differences `D`. Only the small profile `N_{K-1}` is built; differences
/// closer than `2 h_{K-1}` are summed together, the rest act on disjoint windows.
pub fn autocorrelation_max(
    geom: &StageGeometry,
    set: &LevelSet,
    lo: &BigInt,
    hi: &BigInt,
) -> Result<(BigInt, Rational)> {
    if lo.is_negative() || lo > hi {
        return Err(Error::InvalidParams(format!(
            "shift range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
        )));
    }
    let k = profile_stage(geom, set, hi)?;
    if k == set.stage() {
        return Ok(shift_profile(geom, set, set, lo, hi)?.max());
    }
    let s = set.refine(geom, k - 1)?;
    let h = geom.height(k - 1)?;
    let top = h - 1;
    let base = profile_at_stage(geom, &s, &s, &BigInt::zero(), &top, DEFAULT_PAIR_BUDGET)?;
    let n_at = |e: &BigInt| -> BigInt {
        let e = e.abs();
        if e > top {
            BigInt::zero()
        } else {
            base.count_at(&e).expect("inside the base range")
        }
    };

    let bases = &geom.stage(k - 1)?.bases;
    let mut diffs: std::collections::BTreeMap<BigInt, u64> = std::collections::BTreeMap::new();
    for a in bases {
        for b in bases {
            let d = b - a;
            if &d - h < *hi && &d + h > *lo {
                *diffs.entry(d).or_default() += 1;
            }
        }
    }
    let diffs: Vec<(BigInt, u64)> = diffs.into_iter().collect();
    let two_h = h * 2;
    let mut best: Option<(BigInt, BigInt)> = None;
    let consider = |x: BigInt, c: BigInt, best: &mut Option<(BigInt, BigInt)>| {
        let better = match best {
            None => true,
            Some((bx, bc)) => c > *bc || (c == *bc && x < *bx),
        };
        if better {
            *best = Some((x, c));
        }
    };
    let mut i = 0;
    while i < diffs.len() {
        let mut j = i + 1;
        while j < diffs.len() && &diffs[j].0 - &diffs[j - 1].0 < two_h {
            j += 1;
        }
        let cluster = &diffs[i..j];
        let wlo = std::cmp::max(&cluster[0].0 - h + 1u32, lo.clone());
        let whi = std::cmp::min(&cluster[j - i - 1].0 + h - 1u32, hi.clone());
        let value = |x: &BigInt| -> BigInt {
            cluster
                .iter()
                .map(|(d, m)| n_at(&(x - d)) * BigInt::from(*m))
                .sum()
        };
        if cluster.len() == 1 && wlo <= cluster[0].0 && cluster[0].0 <= whi {
            // a self-overlap peaks at zero shift
            let (d, m) = &cluster[0];
            consider(
                d.clone(),
                n_at(&BigInt::zero()) * BigInt::from(*m),
                &mut best,
            );
        } else if wlo <= whi {
            let mut xs = vec![wlo.clone(), whi.clone()];
            for (d, _) in cluster {
                for (e, _) in base.knots() {
                    for x in [d + e, d - e] {
                        if x >= wlo && x <= whi {
                            xs.push(x);
                        }
                    }
                }
            }
            xs.sort();
            xs.dedup();
            for x in xs {
                let c = value(&x);
                consider(x, c, &mut best);
            }
        }
        i = j;
    }
    let (x, c) = match best {
        Some(b) => b,
        None => (lo.clone(), BigInt::zero()),
    };
    Ok((x, Rational::from_integer(c) * geom.level_measure(k)?))
}

/// Stage-`j` column decomposition of `set`, both refined to `stage`:
/// `(i, set ∩ X_{i,j})` for every column `i`.
pub fn column_parts(
    geom: &StageGeometry,
    set: &LevelSet,
    j: usize,
    stage: usize,
) -> Result<Vec<(usize, LevelSet)>> {
    let set = set.refine(geom, stage)?;
    let r = geom.r(j)?;
    (1..=r)
        .map(|i| {
            let col = crate::levelset::column_set(geom, i, j)?.refine(geom, stage)?;
            Ok((i, set.intersection(&col)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::levelset::{column_set, tower_set, Run};
    use crate::params::reference::*;
    use crate::rational::{int, rat};

    #[test]
    fn clustered_max_matches_full_profile() {
        for params in [decimal_sidon(3), separated_four(3), separated_two(3)] {
            let g = build_geometry(&params, 4).unwrap();
            for j in 1..=2 {
                let x = tower_set(&g, 1).unwrap();
                let (lo, hi) = (
                    g.height(j).unwrap().clone(),
                    g.height(j + 1).unwrap().clone(),
                );
                let full = shift_profile(&g, &x, &x, &lo, &hi).unwrap().max();
                assert_eq!(autocorrelation_max(&g, &x, &lo, &hi).unwrap(), full);
                // a window cutting through the first nonzero bump
                let mid = &lo + BigInt::from(5);
                let part = shift_profile(&g, &x, &x, &mid, &hi).unwrap().max();
                assert_eq!(autocorrelation_max(&g, &x, &mid, &hi).unwrap(), part);
            }
        }
    }

    fn dec() -> StageGeometry {
        build_geometry(&decimal_sidon(3), 4).unwrap()
    }

    #[test]
    fn decimal_intersections() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        let m = |d: i64| measure_intersection(&g, &x1, &x1, &BigInt::from(d)).unwrap();
        assert_eq!(m(0), int(1));
        assert_eq!(m(10), rat(1, 3));
        assert_eq!(m(90), Rational::zero());
        assert_eq!(m(-10), rat(1, 3));
        let ac = Autocorrelator::new(&g, &x1).unwrap();
        assert_eq!(ac.rho(&BigInt::from(110)).unwrap(), rat(1, 3));
        assert_eq!(ac.rho(&BigInt::from(-10)).unwrap(), rat(1, 3));
        assert_eq!(ac.rho(&BigInt::from(0)).unwrap(), int(1));
        assert_eq!(ac.cached_len(), 3);
    }

    #[test]
    fn headroom_and_depth_error() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        assert_eq!(headroom_stage(&g, &x1, &BigInt::from(0)).unwrap(), 1);
        assert_eq!(headroom_stage(&g, &x1, &BigInt::from(1)).unwrap(), 2);
        assert_eq!(headroom_stage(&g, &x1, &BigInt::from(1110)).unwrap(), 3);
        let huge = g.height(4).unwrap().clone();
        let err = measure_intersection(&g, &x1, &x1, &huge).unwrap_err();
        assert_eq!(
            err,
            Error::InsufficientDepth {
                needed: 5,
                built: 4
            }
        );
        assert!(autocorrelation(&g, &x1, &huge).is_err());
    }

    #[test]
    fn engines_agree_on_decimal_sweep() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        let ac = Autocorrelator::new(&g, &x1).unwrap();
        for d in 0..1300 {
            let d = BigInt::from(d);
            assert_eq!(
                ac.rho(&d).unwrap(),
                measure_intersection(&g, &x1, &x1, &d).unwrap(),
                "d = {d}"
            );
        }
    }

    #[test]
    fn profile_matches_pointwise() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        let p = shift_profile(&g, &x1, &x1, &BigInt::from(2), &BigInt::from(1110)).unwrap();
        assert_eq!(
            p.support(),
            vec![
                (BigInt::from(10), BigInt::from(10)),
                (BigInt::from(100), BigInt::from(100)),
                (BigInt::from(110), BigInt::from(110))
            ]
        );
        assert_eq!(p.max().1, rat(1, 3));
        let pts = p.points(100).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|(_, v)| *v == rat(1, 3)));

        let a = LevelSet::new(2, vec![Run::new(3, 40), Run::new(100, 130)]);
        let b = LevelSet::new(2, vec![Run::new(0, 25), Run::new(60, 200)]);
        let p = shift_profile(&g, &a, &b, &BigInt::from(0), &BigInt::from(400)).unwrap();
        for d in 0..=400 {
            let d = BigInt::from(d);
            assert_eq!(
                p.rho_at(&d).unwrap(),
                measure_intersection(&g, &a, &b, &d).unwrap(),
                "d = {d}"
            );
        }
    }

    #[test]
    fn shallow_profile_agrees_with_stacked_engine() {
        let g = build_geometry(&separated_four(3), 4).unwrap();
        let x1 = tower_set(&g, 1).unwrap();
        let hi = g.height(3).unwrap().clone();
        assert_eq!(headroom_stage(&g, &x1, &hi).unwrap(), 4);
        assert_eq!(profile_stage(&g, &x1, &hi).unwrap(), 3);
        let p = shift_profile(&g, &x1, &x1, &BigInt::zero(), &hi).unwrap();
        assert_eq!(p.stage, 3);
        let ac = Autocorrelator::new(&g, &x1).unwrap();
        for (x, _) in p.knots() {
            for d in [x - 1, x.clone(), x + 1] {
                if let Some(v) = p.rho_at(&d) {
                    assert_eq!(v, ac.rho(&d).unwrap(), "d = {d}");
                }
            }
        }

        // zero spacers never collapse
        let flat = build_geometry(
            &crate::params::ConstructionParams::new(
                1,
                vec![crate::params::StageParams::new(vec![0.into(), 5.into()]); 3],
            ),
            4,
        )
        .unwrap();
        let x1 = tower_set(&flat, 1).unwrap();
        let hi = BigInt::from(3);
        assert_eq!(
            profile_stage(&flat, &x1, &hi).unwrap(),
            headroom_stage(&flat, &x1, &hi).unwrap()
        );
    }

    #[test]
    fn column_parts_partition_tower() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        let parts = column_parts(&g, &x1, 1, 3).unwrap();
        assert_eq!(parts.len(), 3);
        let total: BigInt = parts.iter().map(|(_, p)| p.level_count()).sum();
        assert_eq!(total, BigInt::from(9));
        let col2 = column_set(&g, 2, 1).unwrap().refine(&g, 3).unwrap();
        assert_eq!(
            parts[1].1,
            x1.refine(&g, 3).unwrap().intersection(&col2).unwrap()
        );
    }

    #[test]
    fn profile_budget() {
        let g = dec();
        let x1 = tower_set(&g, 1).unwrap();
        let err = shift_profile_with_budget(&g, &x1, &x1, &BigInt::from(0), &BigInt::from(1110), 1);
        assert!(matches!(err, Err(Error::Budget(_))));
        assert!(shift_profile(&g, &x1, &x1, &BigInt::from(5), &BigInt::from(4)).is_err());
    }
}

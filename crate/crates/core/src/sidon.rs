//! Column structure of self-intersections `T^m X ∩ X`.
//!
//! Every sweep here is exhaustive over its integer range. Shifts are grouped
//! into maximal segments on which the same column pairs `(a, b)` are active,
//! where pair `(a, b)` is active at `m` when `T^m (X ∩ X_{a,j}) ∩ (X ∩ X_{b,j})`
//! is nonempty.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{
    autocorrelation_max, column_parts, profile_at_stage, profile_stage, shift_profile, Profile,
    Span, DEFAULT_PAIR_BUDGET,
};
use crate::error::{Error, Result};
use crate::geometry::StageGeometry;
use crate::levelset::{tower_set, LevelSet};
use crate::rational::Rational;

type ColumnPair = (usize, usize);

/// Every `(m, ρ_F(m))` with `ρ_F(m) > 0` and `lo ≤ m ≤ hi`.
pub fn intersection_profile(
    geom: &StageGeometry,
    set: &LevelSet,
    lo: &BigInt,
    hi: &BigInt,
    limit: usize,
) -> Result<Vec<(BigInt, Rational)>> {
    shift_profile(geom, set, set, lo, hi)?.points(limit)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSegment {
    #[serde(with = "crate::rational::serde_bigint")]
    pub lo: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub hi: BigInt,
    /// Active `(source, target)` column pairs, 1-based.
    pub pairs: Vec<(usize, usize)>,
    /// Distinct target columns.
    pub targets: Vec<usize>,
    /// `k(b) - k(a)` for a single active pair.
    #[serde(with = "crate::rational::serde_bigint::option")]
    pub matched_difference: Option<BigInt>,
    /// Largest `|m - (k(b) - k(a))|` over the segment.
    #[serde(with = "crate::rational::serde_bigint::option")]
    pub residual: Option<BigInt>,
    /// The matched difference is the only base difference within `h_j` of
    /// some `m` in the segment, and the residual is below `h_j`.
    pub unique_match: bool,
    /// Single pair with `b = a + 1` and residual below `h_j`.
    pub literal_window: bool,
    /// Largest `μ(T^m X ∩ X)` on the segment.
    #[serde(with = "crate::rational::serde_num_den")]
    pub peak: Rational,
}

impl ColumnSegment {
    pub fn single_column(&self) -> bool {
        self.targets.len() <= 1
    }

    pub fn len(&self) -> BigInt {
        &self.hi - &self.lo + 1
    }
}

/// Segments of `[lo, hi]` (with `lo ≥ 0`) on which `T^m set ∩ set` is nonempty,
/// together with the full profile.
pub fn column_segments(
    geom: &StageGeometry,
    set: &LevelSet,
    j: usize,
    lo: &BigInt,
    hi: &BigInt,
) -> Result<(Vec<ColumnSegment>, Profile)> {
    if lo.is_negative() || lo > hi {
        return Err(Error::InvalidParams(format!(
            "shift range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
        )));
    }
    let st = geom.stage(j)?;
    let h = geom.height(j)?;
    let lifted = set.refine(geom, j + 1)?;
    let k = profile_stage(geom, &lifted, hi)?;
    let parts = column_parts(geom, &lifted, j, k)?;
    let whole = lifted.refine(geom, k)?;
    let total = profile_at_stage(geom, &whole, &whole, lo, hi, DEFAULT_PAIR_BUDGET)?;

    let pairs: Vec<(usize, usize)> = parts
        .iter()
        .filter(|(_, p)| !p.is_empty())
        .flat_map(|(a, _)| {
            parts
                .iter()
                .filter(|(_, p)| !p.is_empty())
                .map(move |(b, _)| (*a, *b))
        })
        .collect();
    let spans: Vec<(ColumnPair, Vec<Span>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let prof = profile_at_stage(
                geom,
                &parts[a - 1].1,
                &parts[b - 1].1,
                lo,
                hi,
                DEFAULT_PAIR_BUDGET,
            )?;
            Ok(((a, b), prof.support()))
        })
        .collect::<Result<_>>()?;

    // sweep over span boundaries
    let mut events: Vec<(BigInt, bool, (usize, usize))> = Vec::new();
    for (pair, ss) in &spans {
        for (u, v) in ss {
            events.push((u.clone(), true, *pair));
            events.push((v + 1, false, *pair));
        }
    }
    events.sort_by(|x, y| x.0.cmp(&y.0));
    let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut raw: Vec<(BigInt, BigInt, Vec<ColumnPair>)> = Vec::new();
    let mut idx = 0;
    while idx < events.len() {
        let x = events[idx].0.clone();
        while idx < events.len() && events[idx].0 == x {
            let (_, open, pair) = &events[idx];
            if *open {
                active.insert(*pair);
            } else {
                active.remove(pair);
            }
            idx += 1;
        }
        if active.is_empty() || idx == events.len() {
            continue;
        }
        let end = &events[idx].0 - 1;
        let now: Vec<(usize, usize)> = active.iter().copied().collect();
        match raw.last_mut() {
            Some((_, last_hi, last_pairs)) if &*last_hi + 1 == x && *last_pairs == now => {
                *last_hi = end;
            }
            _ => raw.push((x, end, now)),
        }
    }

    let segments = raw
        .into_iter()
        .map(|(slo, shi, pairs)| {
            let targets: Vec<usize> = pairs
                .iter()
                .map(|p| p.1)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let (matched, residual) = if pairs.len() == 1 {
                let (a, b) = pairs[0];
                let delta = &st.bases[b - 1] - &st.bases[a - 1];
                let res = (&slo - &delta).abs().max((&shi - &delta).abs());
                (Some(delta), Some(res))
            } else {
                (None, None)
            };
            let within = residual.as_ref().is_some_and(|r| r < h);
            let nearby = st.differences_between(&(&slo - h), &(&shi + h));
            let unique_match = within
                && nearby.len() == 1
                && nearby[0].1 == 1
                && Some(&nearby[0].0) == matched.as_ref();
            let literal_window = within && pairs.len() == 1 && pairs[0].1 == pairs[0].0 + 1;
            let peak = total
                .max_in(&slo, &shi)
                .map(|(_, v)| v)
                .unwrap_or_else(Rational::zero);
            ColumnSegment {
                lo: slo,
                hi: shi,
                pairs,
                targets,
                matched_difference: matched,
                residual,
                unique_match,
                literal_window,
                peak,
            }
        })
        .collect();
    Ok((segments, total))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidonVerdict {
    Sidon,
    Multiple,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidonReport {
    pub stage: usize,
    #[serde(with = "crate::rational::serde_bigint")]
    pub lo: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub hi: BigInt,
    pub segments: Vec<ColumnSegment>,
    /// Number of `m` with a nonempty intersection.
    #[serde(with = "crate::rational::serde_bigint")]
    pub nonzero_shifts: BigInt,
    pub multiple_segments: usize,
    pub all_matches_unique: bool,
    /// Segments outside the next-column window; informational.
    pub literal_window_misses: usize,
    pub verdict: SidonVerdict,
}

fn default_range(geom: &StageGeometry, j: usize) -> Result<(BigInt, BigInt)> {
    Ok((geom.height(j)? + 1, geom.height(j + 1)?.clone()))
}

/// Checks that `T^m X_j ∩ X_j` meets a single stage-`j` column for every
/// `m` in `range`, by default `(h_j, h_{j+1}]`.
pub fn sidon_check(
    geom: &StageGeometry,
    j: usize,
    range: Option<(BigInt, BigInt)>,
) -> Result<SidonReport> {
    let (dlo, dhi) = default_range(geom, j)?;
    let (lo, hi) = range.unwrap_or((dlo.clone(), dhi.clone()));
    if lo < dlo || hi > dhi {
        return Err(Error::InvalidParams(format!(
            "range [{lo}, {hi}] leaves (h_{j}, h_{}] = [{dlo}, {dhi}]",
            j + 1
        )));
    }
    let xj = tower_set(geom, j)?;
    let (segments, _) = column_segments(geom, &xj, j, &lo, &hi)?;
    let multiple_segments = segments.iter().filter(|s| !s.single_column()).count();
    Ok(SidonReport {
        stage: j,
        nonzero_shifts: segments.iter().map(ColumnSegment::len).sum(),
        multiple_segments,
        all_matches_unique: segments.iter().all(|s| s.unique_match),
        literal_window_misses: segments.iter().filter(|s| !s.literal_window).count(),
        verdict: if multiple_segments == 0 {
            SidonVerdict::Sidon
        } else {
            SidonVerdict::Multiple
        },
        lo,
        hi,
        segments,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingRow {
    pub stage: usize,
    pub r: usize,
    #[serde(with = "crate::rational::serde_bigint")]
    pub lo: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub hi: BigInt,
    /// `max_m μ(X_p ∩ T^m X_p)` over `[h_j, h_{j+1}]`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub max: Rational,
    #[serde(with = "crate::rational::serde_bigint")]
    pub argmax: BigInt,
    /// `μ(X_p)/r_j`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub bound: Rational,
    pub tight: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingReport {
    pub base_stage: usize,
    pub rows: Vec<MixingRow>,
    pub violations: Vec<usize>,
}

impl MixingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `μ(X_p ∩ T^m X_p) ≤ μ(X_p)/r_j` for all `m ∈ [h_j, h_{j+1}]`, `j ∈ stages`.
pub fn mixing_bound_check(
    geom: &StageGeometry,
    p: usize,
    stages: impl IntoIterator<Item = usize>,
) -> Result<MixingReport> {
    let xp = tower_set(geom, p)?;
    let mass = xp.measure(geom)?;
    let mut rows = Vec::new();
    for j in stages {
        if j < p {
            return Err(Error::InvalidParams(format!(
                "stage {j} precedes the base stage {p}"
            )));
        }
        let r = geom.r(j)?;
        let lo = geom.height(j)?.clone();
        let hi = geom.height(j + 1)?.clone();
        let (argmax, max) = autocorrelation_max(geom, &xp, &lo, &hi)?;
        let bound = &mass / Rational::from_integer(r.into());
        rows.push(MixingRow {
            stage: j,
            r,
            lo,
            hi,
            tight: max == bound,
            holds: max <= bound,
            max,
            argmax,
            bound,
        });
    }
    let violations = rows.iter().filter(|r| !r.holds).map(|r| r.stage).collect();
    Ok(MixingReport {
        base_stage: p,
        rows,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerViolation {
    /// Inclusive range of `m` with `ρ(m) > 0` and `ρ(p m) > 0`.
    #[serde(with = "crate::rational::serde_bigint")]
    pub lo: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub hi: BigInt,
    /// `ρ(p · lo)`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub rho_at_power: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerReport {
    pub stage: usize,
    pub power: u64,
    #[serde(with = "crate::rational::serde_bigint")]
    pub lo: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub hi: BigInt,
    /// Number of `m` in range with `ρ(m) > 0`.
    #[serde(with = "crate::rational::serde_bigint")]
    pub checked_shifts: BigInt,
    pub violations: Vec<PowerViolation>,
}

impl PowerReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every `m` in `range` (default `(h_j, h_{j+1}]`) with
/// `T^m X_j ∩ X_j ≠ ∅`, checks `T^{pm} X_j ∩ X_j = ∅`.
pub fn power_disjointness_check(
    geom: &StageGeometry,
    j: usize,
    p: u64,
    range: Option<(BigInt, BigInt)>,
) -> Result<PowerReport> {
    if p < 2 {
        return Err(Error::InvalidParams("power must be at least 2".into()));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => default_range(geom, j)?,
    };
    if lo.is_negative() || lo > hi {
        return Err(Error::InvalidParams(format!(
            "shift range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
        )));
    }
    let xj = tower_set(geom, j)?;
    let base = shift_profile(geom, &xj, &xj, &lo, &hi)?;
    let support = base.support();
    let checked_shifts = support.iter().map(|(a, b)| b - a + 1).sum();
    let mut violations = Vec::new();
    if let (Some(first), Some(last)) = (support.first(), support.last()) {
        let pb = BigInt::from(p);
        let powered = shift_profile(geom, &xj, &xj, &(&first.0 * &pb), &(&last.1 * &pb))?;
        let hits = powered.support();
        for (a, b) in &support {
            for (u, v) in &hits {
                let m_lo = u.div_ceil(&pb).max(a.clone());
                let m_hi = v.div_floor(&pb).min(b.clone());
                if m_lo <= m_hi {
                    let rho = powered
                        .rho_at(&(&m_lo * &pb))
                        .expect("inside powered range");
                    violations.push(PowerViolation {
                        lo: m_lo,
                        hi: m_hi,
                        rho_at_power: rho,
                    });
                }
            }
        }
    }
    violations.sort_by(|x, y| x.lo.cmp(&y.lo));
    Ok(PowerReport {
        stage: j,
        power: p,
        lo,
        hi,
        checked_shifts,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissipativityStage {
    pub stage: usize,
    pub r: usize,
    #[serde(with = "crate::rational::serde_bigint")]
    pub lo: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub hi: BigInt,
    /// Segments of `[h_j, h_{j+1})` with `T^h X_p ∩ X_p ≠ ∅`.
    pub return_segments: usize,
    /// Segments meeting more than one column.
    pub multiple: Vec<(String, String)>,
    pub single_column: bool,
    /// `μ(X_p ∩ X_{i,j})` for each column.
    #[serde(with = "crate::rational::serde_num_den::vec")]
    pub column_masses: Vec<Rational>,
    #[serde(with = "crate::rational::serde_num_den")]
    pub column_mass_sq_sum: Rational,
    /// `μ(X_p)² / r_j`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub column_mass_target: Rational,
    pub identity_holds: bool,
    /// `μ̄(C_p)/r_j` when returns occur, else 0.
    #[serde(with = "crate::rational::serde_num_den")]
    pub return_bound: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissipativityReport {
    pub base_stage: usize,
    pub horizon: usize,
    /// `μ̄(C_p) = μ(X_p)²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub product_mass: Rational,
    pub stages: Vec<DissipativityStage>,
    /// `Σ_j μ̄(C_p)/r_j` over stages with returns.
    #[serde(with = "crate::rational::serde_num_den")]
    pub return_bound: Rational,
    /// `μ̄(C_p) Σ_{p ≤ j < J} 1/r_j`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub series_bound: Rational,
    /// `max(0, μ̄(C_p) - return_bound)`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub non_return_bound: Rational,
}

impl DissipativityReport {
    pub fn holds(&self) -> bool {
        self.stages
            .iter()
            .all(|s| s.single_column && s.identity_holds)
    }
}

/// Returns of `C_p = X_p × X_p` under `T × T` at times `h ∈ [h_p, h_J)`,
/// through their one-dimensional reductions.
pub fn dissipativity_report(
    geom: &StageGeometry,
    p: usize,
    horizon: usize,
) -> Result<DissipativityReport> {
    if horizon <= p {
        return Err(Error::InvalidParams(format!(
            "horizon {horizon} must exceed the base stage {p}"
        )));
    }
    let xp = tower_set(geom, p)?;
    let mass = xp.measure(geom)?;
    let product_mass = &mass * &mass;
    let mut stages = Vec::new();
    let mut return_bound = Rational::zero();
    let mut series = Rational::zero();
    for j in p..horizon {
        let r = geom.r(j)?;
        let rr = Rational::from_integer(r.into());
        let lo = geom.height(j)?.clone();
        let hi = geom.height(j + 1)? - 1;
        let (segments, _) = column_segments(geom, &xp, j, &lo, &hi)?;
        let multiple: Vec<(String, String)> = segments
            .iter()
            .filter(|s| !s.single_column())
            .map(|s| (s.lo.to_string(), s.hi.to_string()))
            .collect();
        let column_masses: Vec<Rational> = column_parts(geom, &xp, j, j + 1)?
            .iter()
            .map(|(_, part)| part.measure(geom))
            .collect::<Result<_>>()?;
        let column_mass_sq_sum: Rational = column_masses.iter().map(|m| m * m).sum();
        let column_mass_target = &product_mass / &rr;
        let stage_bound = if segments.is_empty() {
            Rational::zero()
        } else {
            &product_mass / &rr
        };
        return_bound += &stage_bound;
        series += Rational::one() / &rr;
        stages.push(DissipativityStage {
            stage: j,
            r,
            lo,
            hi,
            return_segments: segments.len(),
            single_column: multiple.is_empty(),
            multiple,
            identity_holds: column_mass_sq_sum == column_mass_target,
            column_masses,
            column_mass_sq_sum,
            column_mass_target,
            return_bound: stage_bound,
        });
    }
    let non_return = &product_mass - &return_bound;
    Ok(DissipativityReport {
        base_stage: p,
        horizon,
        series_bound: &product_mass * series,
        non_return_bound: if non_return.is_negative() {
            Rational::zero()
        } else {
            non_return
        },
        return_bound,
        product_mass,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::params::reference::*;
    use crate::params::{ConstructionParams, StageParams};
    use crate::rational::{int, rat};

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn decimal_profile_and_window() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let x1 = tower_set(&g, 1).unwrap();
        let pts = intersection_profile(&g, &x1, &b(2), &b(1110), 100).unwrap();
        assert_eq!(
            pts,
            vec![(b(10), rat(1, 3)), (b(100), rat(1, 3)), (b(110), rat(1, 3))]
        );
        assert!(intersection_profile(&g, &x1, &b(134), &b(9989), 100)
            .unwrap()
            .is_empty());
        assert_eq!(
            intersection_profile(&g, &x1, &b(0), &b(0), 1).unwrap(),
            vec![(b(0), int(1))]
        );
    }

    #[test]
    fn decimal_sidon_stage_one() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let rep = sidon_check(&g, 1, None).unwrap();
        assert_eq!(rep.verdict, SidonVerdict::Sidon);
        assert_eq!(rep.nonzero_shifts, b(3));
        let seg110 = rep.segments.iter().find(|s| s.lo == b(110)).unwrap();
        assert_eq!(seg110.pairs, vec![(1, 3)]);
        assert_eq!(seg110.matched_difference, Some(b(110)));
        assert_eq!(seg110.residual, Some(b(0)));
        assert!(seg110.unique_match);
        assert!(!seg110.literal_window);
        let seg10 = &rep.segments[0];
        assert_eq!(seg10.pairs, vec![(1, 2)]);
        assert!(seg10.literal_window);
        assert!(rep.all_matches_unique);
        assert_eq!(rep.literal_window_misses, 1);
    }

    #[test]
    fn decimal_sidon_every_stage() {
        let g = build_geometry(&decimal_sidon(4), 5).unwrap();
        for j in 1..=3 {
            let rep = sidon_check(&g, j, None).unwrap();
            assert_eq!(rep.verdict, SidonVerdict::Sidon, "stage {j}");
            assert!(rep.all_matches_unique, "stage {j}");
        }
    }

    #[test]
    fn sidon_range_contract() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        assert!(sidon_check(&g, 1, Some((b(1), b(20)))).is_err());
        let rep = sidon_check(&g, 1, Some((b(2), b(50)))).unwrap();
        assert_eq!(rep.segments.len(), 1);
    }

    #[test]
    fn one_column_stage_is_sidon() {
        let p = ConstructionParams::new(
            2,
            vec![
                StageParams::fictive(5.into()),
                StageParams::new(vec![100.into(), 100.into()]),
            ],
        );
        let g = build_geometry(&p, 3).unwrap();
        let rep = sidon_check(&g, 1, None).unwrap();
        assert_eq!(rep.verdict, SidonVerdict::Sidon);
        assert!(rep.segments.is_empty());
    }

    #[test]
    fn close_columns_are_multiple() {
        // zero spacers: shifting by h_1 moves columns 1→2 and 2→3 at once
        let p = ConstructionParams::new(
            2,
            vec![
                StageParams::new(vec![0.into(), 0.into(), 0.into()]),
                StageParams::new(vec![100.into(), 100.into()]),
            ],
        );
        let g = build_geometry(&p, 3).unwrap();
        let rep = sidon_check(&g, 1, None).unwrap();
        assert_eq!(rep.verdict, SidonVerdict::Multiple);
        assert!(rep.multiple_segments > 0);
    }

    #[test]
    fn decimal_mixing_bound() {
        let g = build_geometry(&decimal_sidon(4), 5).unwrap();
        let rep = mixing_bound_check(&g, 1, 1..=3).unwrap();
        assert!(rep.holds());
        assert_eq!(rep.rows[0].max, rat(1, 3));
        assert!(rep.rows[0].tight);
        assert_eq!(rep.rows[1].bound, rat(1, 3));
        assert!(mixing_bound_check(&g, 2, [1]).is_err());
    }

    #[test]
    fn decimal_power_disjointness() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let ok = power_disjointness_check(&g, 1, 2, None).unwrap();
        assert!(ok.holds());
        assert_eq!(ok.checked_shifts, b(3));
        let bad = power_disjointness_check(&g, 1, 11, None).unwrap();
        assert_eq!(bad.violations.len(), 1);
        assert_eq!(bad.violations[0].lo, b(10));
        assert_eq!(bad.violations[0].hi, b(10));
        assert_eq!(bad.violations[0].rho_at_power, rat(1, 3));
        assert!(power_disjointness_check(&g, 1, 1, None).is_err());
    }

    #[test]
    fn separated_power_disjointness() {
        let g = build_geometry(&separated_four(4), 5).unwrap();
        for j in [2, 3] {
            for p in [2, 3, 5] {
                let rep = power_disjointness_check(&g, j, p, None).unwrap();
                assert!(rep.holds(), "j = {j}, p = {p}");
                assert!(rep.checked_shifts > BigInt::zero());
            }
        }
    }

    #[test]
    fn decimal_column_mass_identity() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let rep = dissipativity_report(&g, 1, 2).unwrap();
        let s = &rep.stages[0];
        assert_eq!(s.column_masses, vec![rat(1, 3); 3]);
        assert_eq!(s.column_mass_sq_sum, rat(1, 3));
        assert!(s.identity_holds);
        assert!(s.single_column);
    }

    #[test]
    fn growing_columns_dissipativity() {
        let g = build_geometry(&separated_growing(3), 4).unwrap();
        let rep = dissipativity_report(&g, 1, 3).unwrap();
        assert!(rep.holds());
        assert_eq!(rep.series_bound, rat(1, 4) + rat(1, 16));
        assert!(rep.return_bound <= rep.series_bound);
        assert!(rep.non_return_bound >= rat(2, 3));
    }

    #[test]
    fn no_returns_means_full_non_return() {
        // huge first spacer: X_1 never returns during [h_1, h_2)
        let p = ConstructionParams::new(
            3,
            vec![
                StageParams::fictive(50.into()),
                StageParams::new(vec![1000.into(), 1000.into()]),
            ],
        );
        let g = build_geometry(&p, 3).unwrap();
        let rep = dissipativity_report(&g, 1, 2).unwrap();
        assert_eq!(rep.return_bound, Rational::zero());
        assert_eq!(rep.non_return_bound, rep.product_mass);
    }
}

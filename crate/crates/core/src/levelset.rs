//! Unions of full tower levels, stored as sorted disjoint runs.

use std::cmp::{max, min};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StageGeometry;
use crate::rational::Rational;

/// Half-open run `[start, end)` of level indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Run {
    #[serde(with = "crate::rational::serde_bigint")]
    pub start: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub end: BigInt,
}

impl Run {
    pub fn new(start: impl Into<BigInt>, end: impl Into<BigInt>) -> Self {
        Self {
            start: start.into(),
            end: end.into(),
        }
    }

    pub fn len(&self) -> BigInt {
        &self.end - &self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// A measurable set represented at a fixed stage as a union of full levels.
///
/// Runs are sorted, pairwise disjoint and maximal, so equal sets at the same
/// stage compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelSet {
    stage: usize,
    runs: Vec<Run>,
}

fn canonical(mut runs: Vec<Run>) -> Vec<Run> {
    runs.retain(|r| !r.is_empty());
    runs.sort();
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs {
        match out.last_mut() {
            Some(last) if r.start <= last.end => {
                if r.end > last.end {
                    last.end = r.end;
                }
            }
            _ => out.push(r),
        }
    }
    out
}

impl LevelSet {
    /// Canonicalises arbitrary runs. Bounds are checked against a geometry by
    /// [`LevelSet::checked`].
    pub fn new(stage: usize, runs: Vec<Run>) -> Self {
        Self {
            stage,
            runs: canonical(runs),
        }
    }

    pub fn empty(stage: usize) -> Self {
        Self {
            stage,
            runs: Vec::new(),
        }
    }

    pub fn checked(self, geom: &StageGeometry) -> Result<Self> {
        let h = geom.height(self.stage)?;
        if let (Some(first), Some(last)) = (self.runs.first(), self.runs.last()) {
            if first.start.is_negative() || &last.end > h {
                return Err(Error::OutOfRange(format!(
                    "levels outside [0, h_{}) = [0, {h})",
                    self.stage
                )));
            }
        }
        Ok(self)
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn level_count(&self) -> BigInt {
        self.runs.iter().map(Run::len).sum()
    }

    /// Largest level index, if any.
    pub fn max_level(&self) -> Option<BigInt> {
        self.runs.last().map(|r| &r.end - 1)
    }

    pub fn contains(&self, level: &BigInt) -> bool {
        let idx = self.runs.partition_point(|r| &r.end <= level);
        self.runs.get(idx).is_some_and(|r| &r.start <= level)
    }

    /// The `idx`-th level (0-based) in increasing order.
    pub fn nth_level(&self, idx: &BigInt) -> Option<BigInt> {
        let mut rest = idx.clone();
        for r in &self.runs {
            let len = r.len();
            if rest < len {
                return Some(&r.start + rest);
            }
            rest -= len;
        }
        None
    }

    pub fn measure(&self, geom: &StageGeometry) -> Result<Rational> {
        Ok(Rational::from_integer(self.level_count()) * geom.level_measure(self.stage)?)
    }

    /// Index translation by `d`, without reference to any tower.
    pub fn translated(&self, d: &BigInt) -> Self {
        Self {
            stage: self.stage,
            runs: self
                .runs
                .iter()
                .map(|r| Run {
                    start: &r.start + d,
                    end: &r.end + d,
                })
                .collect(),
        }
    }

    fn same_stage(&self, other: &Self) -> Result<()> {
        if self.stage != other.stage {
            return Err(Error::InvalidParams(format!(
                "sets live at different stages ({} and {})",
                self.stage, other.stage
            )));
        }
        Ok(())
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.same_stage(other)?;
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.runs.len() && j < other.runs.len() {
            let a = &self.runs[i];
            let b = &other.runs[j];
            let lo = max(&a.start, &b.start);
            let hi = min(&a.end, &b.end);
            if lo < hi {
                out.push(Run::new(lo.clone(), hi.clone()));
            }
            if a.end <= b.end {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Self {
            stage: self.stage,
            runs: out,
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.same_stage(other)?;
        let mut runs = self.runs.clone();
        runs.extend(other.runs.iter().cloned());
        Ok(Self::new(self.stage, runs))
    }

    /// `|(self + d) ∩ other|` counted in levels, as plain integer sets.
    pub fn shifted_overlap(&self, other: &Self, d: &BigInt) -> BigInt {
        let mut total = BigInt::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.runs.len() && j < other.runs.len() {
            let a_start = &self.runs[i].start + d;
            let a_end = &self.runs[i].end + d;
            let b = &other.runs[j];
            let lo = max(&a_start, &b.start);
            let hi = min(&a_end, &b.end);
            if lo < hi {
                total += hi - lo;
            }
            if a_end <= b.end {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// The same set represented at stage `target`: every level of stage `j`
    /// reappears at `k(i, j) + level` in stage `j + 1`, once per column `i`.
    pub fn refine(&self, geom: &StageGeometry, target: usize) -> Result<Self> {
        if target < self.stage {
            return Err(Error::InvalidParams(format!(
                "cannot refine stage-{} set down to stage {target}",
                self.stage
            )));
        }
        geom.check_stage(target)?;
        let mut cur = self.clone();
        while cur.stage < target {
            cur = cur.refine_once(geom)?;
        }
        Ok(cur)
    }

    fn refine_once(&self, geom: &StageGeometry) -> Result<Self> {
        let st = geom.stage(self.stage)?;
        let mut runs = Vec::with_capacity(self.runs.len() * st.r);
        for k in &st.bases {
            runs.extend(self.runs.iter().map(|r| Run {
                start: &r.start + k,
                end: &r.end + k,
            }));
        }
        // copies are laid out in increasing order, only touching runs need merging
        Ok(Self::new(self.stage + 1, runs))
    }
}

/// `X_j`: the whole stage-`j` tower, as the single run `[0, h_j)`.
pub fn tower_set(geom: &StageGeometry, j: usize) -> Result<LevelSet> {
    let h = geom.height(j)?;
    Ok(LevelSet::new(j, vec![Run::new(0, h.clone())]))
}

/// `X_{i,j}`: column `i` of the stage-`j` tower, seen at stage `j + 1`.
pub fn column_set(geom: &StageGeometry, i: usize, j: usize) -> Result<LevelSet> {
    let k = geom.base(i, j)?.clone();
    geom.check_stage(j + 1)?;
    let h = geom.height(j)?;
    let end = &k + h;
    Ok(LevelSet::new(j + 1, vec![Run::new(k, end)]))
}

/// `E_j`: the base level of the stage-`j` tower.
pub fn base_set(geom: &StageGeometry, j: usize) -> Result<LevelSet> {
    geom.check_stage(j)?;
    Ok(LevelSet::new(j, vec![Run::new(0, 1)]))
}

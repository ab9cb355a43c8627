//! Heights, column bases and level measures of the stacked towers.

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::params::ConstructionParams;
use crate::rational::Rational;

/// Derived data for one stage that has cutting parameters.
#[derive(Clone, Debug)]
pub struct StageData {
    pub r: usize,
    pub spacers: Vec<BigInt>,
    /// `k(i, j)` for `i = 1..=r`: where the copy of the stage-`j` tower that
    /// forms column `i` starts inside the stage-`j+1` tower.
    pub bases: Vec<BigInt>,
    /// Distinct values of `k(c) - k(c')` over all ordered column pairs, sorted,
    /// with multiplicity. Contains `(0, r)`.
    pub differences: Vec<(BigInt, u64)>,
}

impl StageData {
    fn new(h: &BigInt, spacers: &[BigInt]) -> Self {
        let r = spacers.len();
        let mut bases = Vec::with_capacity(r);
        let mut k = BigInt::from(0);
        for s in spacers {
            bases.push(k.clone());
            k += h + s;
        }
        let mut all: Vec<BigInt> = Vec::with_capacity(r * r);
        for a in &bases {
            for b in &bases {
                all.push(a - b);
            }
        }
        all.sort();
        let mut differences: Vec<(BigInt, u64)> = Vec::new();
        for d in all {
            match differences.last_mut() {
                Some((last, m)) if *last == d => *m += 1,
                _ => differences.push((d, 1)),
            }
        }
        Self {
            r,
            spacers: spacers.to_vec(),
            bases,
            differences,
        }
    }

    /// Differences `delta` with `lo < delta < hi`.
    pub fn differences_between(&self, lo: &BigInt, hi: &BigInt) -> &[(BigInt, u64)] {
        let start = self.differences.partition_point(|(d, _)| d <= lo);
        let end = self.differences.partition_point(|(d, _)| d < hi);
        if start >= end {
            &[]
        } else {
            &self.differences[start..end]
        }
    }

    /// Column (1-based) whose tower copy contains `level` of the next stage,
    /// together with the level inside the copy. `None` for spacer levels.
    pub fn locate(&self, h: &BigInt, level: &BigInt) -> Option<(usize, BigInt)> {
        let idx = self.bases.partition_point(|k| k <= level);
        if idx == 0 {
            return None;
        }
        let inner = level - &self.bases[idx - 1];
        if &inner < h {
            Some((idx, inner))
        } else {
            None
        }
    }
}

/// Heights `h_j`, column bases `k(i, j)` and level measures for stages `1..=depth`.
///
/// Stage `j < depth` carries its cutting data; the last stage is known only by
/// its height. The measure of a stage-1 level is normalised to 1.
#[derive(Clone, Debug)]
pub struct StageGeometry {
    heights: Vec<BigInt>,
    stages: Vec<StageData>,
    level_measures: Vec<Rational>,
}

impl StageGeometry {
    pub fn depth(&self) -> usize {
        self.heights.len()
    }

    pub fn check_stage(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.depth() {
            Err(Error::InsufficientDepth {
                needed: j.max(1),
                built: self.depth(),
            })
        } else {
            Ok(())
        }
    }

    /// `h_j`.
    pub fn height(&self, j: usize) -> Result<&BigInt> {
        self.check_stage(j)?;
        Ok(&self.heights[j - 1])
    }

    pub fn heights(&self) -> &[BigInt] {
        &self.heights
    }

    /// Cutting data of stage `j`; requires `j < depth`.
    pub fn stage(&self, j: usize) -> Result<&StageData> {
        if j == 0 || j > self.stages.len() {
            return Err(Error::InsufficientDepth {
                needed: j + 1,
                built: self.depth(),
            });
        }
        Ok(&self.stages[j - 1])
    }

    pub fn r(&self, j: usize) -> Result<usize> {
        Ok(self.stage(j)?.r)
    }

    /// `k(i, j)`, 1-based column index.
    pub fn base(&self, i: usize, j: usize) -> Result<&BigInt> {
        let st = self.stage(j)?;
        st.bases
            .get(i.wrapping_sub(1))
            .ok_or_else(|| Error::OutOfRange(format!("column {i} of stage {j} (r = {})", st.r)))
    }

    /// Measure of a single level of the stage-`j` tower.
    pub fn level_measure(&self, j: usize) -> Result<&Rational> {
        self.check_stage(j)?;
        Ok(&self.level_measures[j - 1])
    }
}

/// Builds the geometry for stages `1..=depth`. Needs `depth - 1` parameter stages.
pub fn build_geometry(params: &ConstructionParams, depth: usize) -> Result<StageGeometry> {
    params.check_well_formed()?;
    if depth == 0 {
        return Err(Error::InvalidParams(
            "geometry depth must be at least 1".into(),
        ));
    }
    if depth > params.stages.len() + 1 {
        return Err(Error::InsufficientDepth {
            needed: depth,
            built: params.stages.len() + 1,
        });
    }
    let mut heights = Vec::with_capacity(depth);
    let mut stages = Vec::with_capacity(depth - 1);
    let mut level_measures = Vec::with_capacity(depth);
    let mut h = params.h1.clone();
    let mut lm = Rational::one();
    heights.push(h.clone());
    level_measures.push(lm.clone());
    for st in params.stages.iter().take(depth - 1) {
        let data = StageData::new(&h, &st.s);
        h = &h * st.r + st.spacer_total();
        lm /= Rational::from_integer(BigInt::from(st.r));
        debug_assert!(h.is_positive());
        stages.push(data);
        heights.push(h.clone());
        level_measures.push(lm.clone());
    }
    Ok(StageGeometry {
        heights,
        stages,
        level_measures,
    })
}

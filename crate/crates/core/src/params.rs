//! Construction parameters and their validation.
//!
//! A rank-one construction is fixed by the height `h1` of the first tower and,
//! for every stage, the number of columns `r` together with the spacer counts
//! added above each column.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{int, serde_bigint, serde_num_den, Rational};

/// Parameters of one cutting-and-stacking stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageParams {
    /// Number of columns the tower is cut into.
    pub r: usize,
    /// Spacer count above column `i`, for `i = 1..=r`.
    #[serde(with = "serde_bigint::vec")]
    pub s: Vec<BigInt>,
}

impl StageParams {
    pub fn new(s: Vec<BigInt>) -> Self {
        Self { r: s.len(), s }
    }

    /// A stage with a single column that only adds `spacers` levels on top.
    pub fn fictive(spacers: BigInt) -> Self {
        Self {
            r: 1,
            s: vec![spacers],
        }
    }

    pub fn is_fictive(&self) -> bool {
        self.r == 1
    }

    pub fn spacer_total(&self) -> BigInt {
        self.s.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    #[serde(with = "serde_bigint")]
    pub h1: BigInt,
    pub stages: Vec<StageParams>,
}

impl ConstructionParams {
    pub fn new(h1: impl Into<BigInt>, stages: Vec<StageParams>) -> Self {
        Self {
            h1: h1.into(),
            stages,
        }
    }

    /// `s_j(i) = base^i h_j - h_j` with a fixed column count. With `base = 10`
    /// and `r = 3` this is the reference decimal Sidon construction.
    pub fn sidon_power(h1: u64, r: usize, base: u64, stages: usize) -> Self {
        let base = BigInt::from(base);
        Self::from_rule(h1, stages, |_, h| {
            (1..=r as u32).map(|i| base.pow(i) * h - h).collect()
        })
    }

    /// `s_j(1) = psi_j h_j`, `s_j(i+1) = psi_j s_j(i)` with `psi_j = psi0 + growth (j - 1)`.
    ///
    /// `columns(j)` gives `r_j`.
    pub fn geometric_psi(
        h1: u64,
        stages: usize,
        psi0: u64,
        growth: u64,
        columns: impl Fn(usize) -> usize,
    ) -> Self {
        Self::from_rule(h1, stages, |j, h| {
            let psi = BigInt::from(psi0 + growth * (j as u64 - 1));
            let mut out = Vec::with_capacity(columns(j));
            let mut s = h.clone();
            for _ in 0..columns(j) {
                s *= &psi;
                out.push(s.clone());
            }
            out
        })
    }

    /// Builds stages from a rule `(j, h_j) -> s_j`, tracking heights along the way.
    pub fn from_rule(
        h1: u64,
        stages: usize,
        mut rule: impl FnMut(usize, &BigInt) -> Vec<BigInt>,
    ) -> Self {
        let mut h = BigInt::from(h1);
        let mut out = Vec::with_capacity(stages);
        for j in 1..=stages {
            let s = rule(j, &h);
            let st = StageParams::new(s);
            h = &h * st.r + st.spacer_total();
            out.push(st);
        }
        Self::new(h1, out)
    }

    pub fn stage(&self, j: usize) -> Option<&StageParams> {
        j.checked_sub(1).and_then(|i| self.stages.get(i))
    }

    pub fn check_well_formed(&self) -> Result<()> {
        if !self.h1.is_positive() {
            return Err(Error::InvalidParams("h1 must be at least 1".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::InvalidParams("no stages given".into()));
        }
        for (idx, st) in self.stages.iter().enumerate() {
            let stage = idx + 1;
            if st.r < 1 {
                return Err(Error::MalformedStage {
                    stage,
                    reason: "column count r must be at least 1".into(),
                });
            }
            if st.s.len() != st.r {
                return Err(Error::MalformedStage {
                    stage,
                    reason: format!("{} spacer counts given for r = {}", st.s.len(), st.r),
                });
            }
            if let Some(i) = st.s.iter().position(|s| s.is_negative()) {
                return Err(Error::MalformedStage {
                    stage,
                    reason: format!("negative spacer count at column {}", i + 1),
                });
            }
        }
        Ok(())
    }
}

/// Outcome of [`validate_params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub well_formed: bool,
    /// Prefix sums of `sum_i s_j(i) / (h_j r_j)`; divergence means infinite measure.
    #[serde(with = "serde_num_den::vec")]
    pub infinite_measure_partial_sums: Vec<Rational>,
    /// Every partial sum is zero: no spacers at all in the given prefix.
    pub finite_type_prefix: bool,
    /// Infimum over all stages of the separation ratios `s_j(1)/h_j`, `s_j(i+1)/s_j(i)`.
    /// Any `psi` strictly below it satisfies the separation inequalities.
    #[serde(with = "serde_num_den::option")]
    pub sidon_psi: Option<Rational>,
    /// `sidon_psi > 3`.
    pub sidon_sufficient: bool,
    /// Per-stage separation ratio `psi(j)`; `None` when the stage imposes no bound.
    #[serde(with = "serde_num_den::vec_option")]
    pub simple_sidon_schedule: Vec<Option<Rational>>,
    /// The schedule increases strictly from stage to stage.
    pub schedule_increasing: bool,
}

// ratio of a strict inequality `num > psi * den`; None when no psi is excluded
fn separation_ratio(num: &BigInt, den: &BigInt) -> Option<Rational> {
    if den.is_zero() {
        if num.is_positive() {
            None
        } else {
            Some(Rational::zero())
        }
    } else {
        Some(Rational::new(num.clone(), den.clone()))
    }
}

fn min_opt(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if a < b { a } else { b }),
        (a, None) => a,
        (None, b) => b,
    }
}

pub fn stage_psi(h: &BigInt, st: &StageParams) -> Option<Rational> {
    let mut psi = separation_ratio(&st.s[0], h);
    for w in st.s.windows(2) {
        psi = min_opt(psi, separation_ratio(&w[1], &w[0]));
    }
    psi
}

pub fn validate_params(params: &ConstructionParams) -> Result<ValidationReport> {
    params.check_well_formed()?;

    let mut h = params.h1.clone();
    let mut acc = Rational::zero();
    let mut partial = Vec::with_capacity(params.stages.len());
    let mut schedule = Vec::with_capacity(params.stages.len());
    let mut psi_all: Option<Rational> = None;

    for st in &params.stages {
        let total = st.spacer_total();
        acc += Rational::new(total.clone(), &h * st.r);
        partial.push(acc.clone());
        let psi = stage_psi(&h, st);
        psi_all = min_opt(psi_all, psi.clone());
        schedule.push(psi);
        h = &h * st.r + total;
    }

    let schedule_increasing = schedule.windows(2).all(|w| match (&w[0], &w[1]) {
        (Some(a), Some(b)) => b > a,
        (_, None) => true,
        (None, Some(_)) => false,
    });
    let sidon_sufficient = match &psi_all {
        Some(p) => *p > int(3),
        None => true,
    };

    Ok(ValidationReport {
        well_formed: true,
        finite_type_prefix: partial.iter().all(Zero::is_zero),
        infinite_measure_partial_sums: partial,
        sidon_psi: psi_all,
        sidon_sufficient,
        simple_sidon_schedule: schedule,
        schedule_increasing,
    })
}

/// Reference constructions used throughout the tests and examples.
pub mod reference {
    use super::*;

    /// `h1 = 1`, `r_j = 3`, `s_j(i) = 10^i h_j - h_j`.
    pub fn decimal_sidon(stages: usize) -> ConstructionParams {
        ConstructionParams::sidon_power(1, 3, 10, stages)
    }

    /// `h1 = 1`, `r_j = 4`, `s_j(i) = psi_j^i h_j` with `psi_j = 10 (j + 1)`.
    pub fn separated_four(stages: usize) -> ConstructionParams {
        ConstructionParams::geometric_psi(1, stages, 20, 10, |_| 4)
    }

    /// Same spacer rule as [`separated_four`] but `r_j = 4^j`, so `sum 1/r_j < 1/3`.
    pub fn separated_growing(stages: usize) -> ConstructionParams {
        ConstructionParams::geometric_psi(1, stages, 20, 10, |j| 4usize.pow(j as u32))
    }

    /// Two-column variant of [`separated_four`].
    pub fn separated_two(stages: usize) -> ConstructionParams {
        ConstructionParams::geometric_psi(1, stages, 20, 10, |_| 2)
    }
}

//! Shift polynomials acting on a slowly decaying vector in `l_p(ℤ)`.
//!
//! The vector `v` takes the value `2^{-j}` at `q(j) = ⌊2^{cj}⌋` positions
//! `-10^n`, block after block, so `|index|` grows with `j`. With
//! `Q_j(S) = Σ_{n in block j} S^{10^n}` one gets `(Q_j(S) v)(0) = q(j) 2^{-j}`,
//! and the remaining terms `Δ_j` sit at the pairwise distinct indices
//! `10^n - 10^m`. Hence
//! `‖R_j(S) v - e_0‖_p^p = q(j)^{1-p} 2^{jp} (‖v‖_p^p - 2^{-jp})`
//! for `R_j = q(j)^{-1} 2^j Q_j`.
//!
//! Indices reach `10^{Σ q(t)}`, so beyond a few blocks only the closed form is
//! computable; the explicit sparse path cross-checks it on short schedules.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};

/// Explicit vectors are refused beyond this many support points.
pub const EXPLICIT_SUPPORT_LIMIT: u64 = 5_000;

/// Blocks summed for the tail-inclusive norm; the remainder is below
/// `2^{(c-p)(TAIL_BLOCKS+1)} / (1 - 2^{c-p})`.
pub const TAIL_BLOCKS: u32 = 400;

/// Finite map from integer index to nonzero rational value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseVector {
    entries: BTreeMap<BigInt, Rational>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (BigInt, Rational)>) -> Self {
        let mut v = Self::new();
        for (i, x) in entries {
            v.add(i, x);
        }
        v
    }

    /// Unit vector `e_i`.
    pub fn unit(i: BigInt) -> Self {
        Self::from_entries([(i, Rational::one())])
    }

    pub fn add(&mut self, index: BigInt, value: Rational) {
        if value.is_zero() {
            return;
        }
        match self.entries.entry(index) {
            Entry::Vacant(e) => {
                e.insert(value);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += value;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn get(&self, index: &BigInt) -> Rational {
        self.entries
            .get(index)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> &BTreeMap<BigInt, Rational> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `S^t w`, i.e. `(S^t w)(i) = w(i - t)`.
    pub fn translated(&self, t: &BigInt) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(i, x)| (i + t, x.clone()))
                .collect(),
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, x) in &other.entries {
            out.add(i.clone(), -x.clone());
        }
        out
    }

    /// `‖w‖_p^p`.
    pub fn norm_pow(&self, p: u32) -> Rational {
        self.entries.values().map(|x| x.abs().pow(p as i32)).sum()
    }
}

/// `Σ_e coeff · S^e vec`, collisions summed.
pub fn apply_shift_poly(
    exponents: &[BigInt],
    coeff: &Rational,
    vec: &SparseVector,
) -> SparseVector {
    let mut out = SparseVector::new();
    for e in exponents {
        for (i, x) in vec.entries() {
            out.add(i + e, x * coeff);
        }
    }
    out
}

/// Indices hit by more than one summand `S^e vec`, ignoring `skip`.
pub fn shift_collisions(exponents: &[BigInt], vec: &SparseVector, skip: &BigInt) -> usize {
    let mut hits: BTreeMap<BigInt, u32> = BTreeMap::new();
    for e in exponents {
        for i in vec.entries().keys() {
            let k = i + e;
            if &k != skip {
                *hits.entry(k).or_default() += 1;
            }
        }
    }
    hits.values().filter(|&&c| c > 1).count()
}

/// Block structure of `v`: `q(j) = ⌊2^{cj}⌋` positions per block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSchedule {
    pub c: Rational,
    pub p: u32,
    pub blocks: u32,
    q: Vec<BigInt>,
}

impl LpSchedule {
    /// Requires `2 < c < p` and at least one block.
    pub fn new(c: Rational, p: u32, blocks: u32) -> Result<Self> {
        let two = Rational::from_integer(2.into());
        if c <= two || c >= Rational::from_integer(p.into()) {
            return Err(Error::InvalidParams(format!(
                "need 2 < c < p, got c = {c}, p = {p}"
            )));
        }
        if blocks == 0 {
            return Err(Error::InvalidParams("need at least one block".into()));
        }
        let q = (1..=blocks.max(TAIL_BLOCKS))
            .map(|j| floor_pow2(&c, j))
            .collect();
        Ok(Self { c, p, blocks, q })
    }

    /// `q(j)`, 1-based.
    pub fn q(&self, j: u32) -> &BigInt {
        &self.q[j as usize - 1]
    }

    /// Exponents `n` with `v(-10^n) = 2^{-j}`: `(Σ_{t<j} q(t), Σ_{t≤j} q(t)]`.
    pub fn positions(&self, j: u32) -> (BigInt, BigInt) {
        let before: BigInt = self.q[..j as usize - 1].iter().sum();
        let end = &before + self.q(j);
        (before + 1, end)
    }

    /// `h_j = 10^{1 + Σ_{t<j} q(t)}`, as its base-10 exponent.
    pub fn boundary_exponent(&self, j: u32) -> BigInt {
        self.positions(j).0
    }

    fn check_block(&self, j: u32) -> Result<()> {
        if j == 0 || j > self.blocks {
            return Err(Error::OutOfRange(format!(
                "block {j} outside 1..={}",
                self.blocks
            )));
        }
        Ok(())
    }

    fn block_sum(&self, upto: u32) -> Rational {
        (1..=upto)
            .map(|j| Rational::new(self.q(j).clone(), BigInt::one() << (self.p * j) as usize))
            .sum()
    }

    /// Truncated `‖v‖_p^p = Σ_{j ≤ blocks} q(j) 2^{-pj}`.
    pub fn v_norm_pow(&self) -> Rational {
        self.block_sum(self.blocks)
    }

    /// `‖v‖_p^p` summed over [`TAIL_BLOCKS`] blocks.
    pub fn v_norm_pow_tail(&self) -> Rational {
        self.block_sum(self.blocks.max(TAIL_BLOCKS))
    }

    /// Upper bound on `Σ_{j > TAIL_BLOCKS} q(j) 2^{-pj}`.
    pub fn tail_remainder_bound(&self) -> f64 {
        let e = to_f64(&self.c) - self.p as f64;
        let n = self.blocks.max(TAIL_BLOCKS) as f64 + 1.0;
        2f64.powf(e * n) / (1.0 - 2f64.powf(e))
    }

    fn deviation_pow_with(&self, j: u32, v_norm: &Rational) -> Rational {
        let q = Rational::from_integer(self.q(j).clone());
        let scale = Rational::from_integer(BigInt::one() << (self.p * j) as usize);
        let own = Rational::one() / &scale;
        (v_norm - own) * scale / q.pow(self.p as i32 - 1)
    }

    /// `‖Δ_j‖_p^p = q(j) (‖v‖_p^p - 2^{-jp})` for the truncated `v`.
    pub fn delta_norm_pow(&self, j: u32) -> Result<Rational> {
        self.check_block(j)?;
        let own = Rational::new(BigInt::one(), BigInt::one() << (self.p * j) as usize);
        Ok((self.v_norm_pow() - own) * Rational::from_integer(self.q(j).clone()))
    }

    /// `‖R_j(S) v - e_0‖_p^p` for the truncated `v`.
    pub fn deviation_pow(&self, j: u32) -> Result<Rational> {
        self.check_block(j)?;
        Ok(self.deviation_pow_with(j, &self.v_norm_pow()))
    }

    /// Same with the tail-inclusive `‖v‖_p^p`.
    pub fn deviation_pow_tail(&self, j: u32) -> Result<Rational> {
        self.check_block(j)?;
        Ok(self.deviation_pow_with(j, &self.v_norm_pow_tail()))
    }

    fn support_size(&self) -> BigInt {
        self.q[..self.blocks as usize].iter().sum()
    }

    /// The truncated `v` as an explicit vector.
    pub fn build_v(&self) -> Result<SparseVector> {
        if self.support_size() > BigInt::from(EXPLICIT_SUPPORT_LIMIT) {
            return Err(Error::Budget(format!(
                "explicit v needs {} entries, limit {EXPLICIT_SUPPORT_LIMIT}",
                self.support_size()
            )));
        }
        let mut v = SparseVector::new();
        for j in 1..=self.blocks {
            let val = Rational::new(BigInt::one(), BigInt::one() << j as usize);
            for n in range(&self.positions(j)) {
                v.add(-BigInt::from(10).pow(n), val.clone());
            }
        }
        Ok(v)
    }

    /// `10^n` for every position `n` of block `j`.
    pub fn block_exponents(&self, j: u32) -> Result<Vec<BigInt>> {
        self.check_block(j)?;
        if self.q(j) > &BigInt::from(EXPLICIT_SUPPORT_LIMIT) {
            return Err(Error::Budget(format!(
                "block {j} has {} exponents",
                self.q(j)
            )));
        }
        Ok(range(&self.positions(j))
            .map(|n| BigInt::from(10).pow(n))
            .collect())
    }
}

fn range((lo, hi): &(BigInt, BigInt)) -> impl Iterator<Item = u32> {
    let lo = u32::try_from(lo).expect("small schedule");
    let hi = u32::try_from(hi).expect("small schedule");
    lo..=hi
}

/// `⌊2^{cj}⌋` exactly, for rational `c = a/b`: the integer `b`-th root of `2^{aj}`.
pub fn floor_pow2(c: &Rational, j: u32) -> BigInt {
    let a = u32::try_from(c.numer()).expect("c numerator fits u32");
    let b = u32::try_from(c.denom()).expect("c denominator fits u32");
    (BigInt::one() << (a as usize * j as usize)).nth_root(b)
}

/// `R_j(S) vec = q(j)^{-1} 2^j Q_j(S) vec`.
pub fn r_poly_apply(j: u32, schedule: &LpSchedule, vec: &SparseVector) -> Result<SparseVector> {
    let exps = schedule.block_exponents(j)?;
    let coeff = Rational::new(BigInt::one() << j as usize, schedule.q(j).clone());
    Ok(apply_shift_poly(&exps, &coeff, vec))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub block: u32,
    #[serde(with = "crate::rational::serde_bigint")]
    pub q: BigInt,
    /// `‖Δ_j‖_p^p`, truncated `v`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub delta_norm_pow: Rational,
    /// `q(j) ‖v‖_p^p`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub bound: Rational,
    pub bound_holds: bool,
    /// `‖R_j(S) v - e_0‖_p^p`, truncated `v`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub deviation_pow: Rational,
    /// `p`-th root of `deviation_pow`, approximate.
    pub deviation: f64,
    /// Same with the tail-inclusive `‖v‖_p^p`, approximate.
    pub deviation_tail: f64,
    /// `(R_j(S) v)(0)`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub center: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpReport {
    #[serde(with = "crate::rational::serde_num_den")]
    pub c: Rational,
    pub p: u32,
    pub blocks: u32,
    #[serde(with = "crate::rational::serde_num_den")]
    pub v_norm_pow: Rational,
    pub v_norm_pow_tail: f64,
    pub tail_remainder_bound: f64,
    pub rows: Vec<LpRow>,
    pub strictly_decreasing: bool,
    /// Least-squares slope of `log2 deviation` against `j`.
    pub fitted_slope: f64,
    /// `1 - c (1 - 1/p)`.
    pub predicted_slope: f64,
}

impl LpReport {
    pub fn holds(&self) -> bool {
        self.strictly_decreasing && self.rows.iter().all(|r| r.bound_holds && r.center.is_one())
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn root(x: &Rational, p: u32) -> f64 {
    to_f64(x).powf(1.0 / p as f64)
}

/// Per-block deviations, bounds and decay rate.
pub fn lp_convergence_report(c: Rational, p: u32, blocks: u32) -> Result<LpReport> {
    let s = LpSchedule::new(c, p, blocks)?;
    let v_norm = s.v_norm_pow();
    let mut rows = Vec::new();
    for j in 1..=blocks {
        let q = s.q(j).clone();
        let delta = s.delta_norm_pow(j)?;
        let bound = Rational::from_integer(q.clone()) * &v_norm;
        let dev = s.deviation_pow(j)?;
        // the value 2^{-j} sits at q(j) positions, each hit once at index 0
        let center = Rational::new(BigInt::one() << j as usize, q.clone())
            * Rational::new(q.clone(), BigInt::one() << j as usize);
        rows.push(LpRow {
            block: j,
            bound_holds: delta <= bound,
            deviation: root(&dev, p),
            deviation_tail: root(&s.deviation_pow_tail(j)?, p),
            q,
            delta_norm_pow: delta,
            bound,
            deviation_pow: dev,
            center,
        });
    }
    let strictly_decreasing = rows
        .windows(2)
        .all(|w| w[1].deviation_pow < w[0].deviation_pow);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deviation > 0.0)
        .map(|r| (r.block as f64, r.deviation.log2()))
        .collect();
    let cf = to_f64(&s.c);
    Ok(LpReport {
        v_norm_pow_tail: to_f64(&s.v_norm_pow_tail()),
        tail_remainder_bound: s.tail_remainder_bound(),
        fitted_slope: least_squares_slope(&pts),
        predicted_slope: 1.0 - cf * (1.0 - 1.0 / p as f64),
        strictly_decreasing,
        c: s.c,
        p,
        blocks,
        v_norm_pow: v_norm,
        rows,
    })
}

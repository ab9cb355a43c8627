//! Thinned copies `T_γ` of a base construction.
//!
//! Stages are grouped into blocks `G_n = {n², …, n² + 2n}`. For `n ∈ γ` the
//! stages of `G_n` keep the base parameters; otherwise each becomes a one-column
//! stage whose spacer restores the base height, so `h̃_j = h_j` throughout.
//! Index sets `γ` come from bit strings: the codes of all prefixes of a string
//! form a set, and two strings share exactly the codes of their common prefixes.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::correlation::{shift_profile, Autocorrelator, Span};
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, StageGeometry};
use crate::levelset::tower_set;
use crate::params::{ConstructionParams, StageParams};
use crate::poly::{block_average, poly_norm_sq, q_poly, rigidity_deficit, OperatorPolynomial};
use crate::rational::Rational;

/// `code(b_1 … b_n) = 2^n + Σ_t b_t 2^{n-t}`.
pub fn prefix_code(bits: &[bool]) -> u64 {
    bits.iter().fold(1u64, |acc, &b| 2 * acc + b as u64)
}

/// Prefix-code index set generated by a bit string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GammaSet {
    bits: Vec<bool>,
}

impl GammaSet {
    /// At most 62 bits so every code fits in `u64`.
    pub fn from_bits(bits: &str) -> Result<Self> {
        if bits.is_empty() || bits.len() > 62 {
            return Err(Error::InvalidParams(format!(
                "bit string must have 1 to 62 bits, got {}",
                bits.len()
            )));
        }
        let bits = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParams(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Codes of the prefixes of length `1..=len`, increasing.
    pub fn elements(&self) -> Vec<u64> {
        (1..=self.bits.len())
            .map(|k| prefix_code(&self.bits[..k]))
            .collect()
    }

    pub fn contains(&self, n: u64) -> bool {
        // the prefix length is fixed by the position of the leading bit
        if n < 2 {
            return false;
        }
        let len = 63 - n.leading_zeros() as usize;
        len <= self.bits.len() && prefix_code(&self.bits[..len]) == n
    }

    pub fn common_prefix(&self, other: &Self) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .take_while(|(a, b)| a == b)
            .count()
    }
}

impl fmt::Display for GammaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl TryFrom<String> for GammaSet {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::from_bits(&s)
    }
}

impl From<GammaSet> for String {
    fn from(g: GammaSet) -> Self {
        g.to_string()
    }
}

/// `G_n = {n², …, n² + 2n}`.
pub fn block(n: u64) -> RangeInclusive<u64> {
    n * n..=n * n + 2 * n
}

/// The `n` with `j ∈ G_n`.
pub fn block_of(j: u64) -> u64 {
    j.sqrt()
}

/// Parameters of `T_γ` for stages `1..=stages`. Needs the base heights up to
/// `h_{stages+1}`.
///
/// Prefix codes are at least 2, so block `G_1` is always thinned.
pub fn gamma_params(
    base: &ConstructionParams,
    gamma: &GammaSet,
    stages: usize,
) -> Result<ConstructionParams> {
    gamma_params_with(base, |n| gamma.contains(n), stages)
}

/// [`gamma_params`] for an arbitrary block predicate.
pub fn gamma_params_with(
    base: &ConstructionParams,
    keep: impl Fn(u64) -> bool,
    stages: usize,
) -> Result<ConstructionParams> {
    let geom = build_geometry(base, stages + 1)?;
    let mut out = Vec::with_capacity(stages);
    for j in 1..=stages {
        if keep(block_of(j as u64)) {
            out.push(base.stages[j - 1].clone());
        } else {
            let gap = geom.height(j + 1)? - geom.height(j)?;
            out.push(StageParams::fictive(gap));
        }
    }
    Ok(ConstructionParams {
        h1: base.h1.clone(),
        stages: out,
    })
}

/// `P_n = (Q_{n²+1} + … + Q_{n²+n}) / n` from the base offsets.
pub fn block_polynomial(base: &StageGeometry, n: u64) -> Result<OperatorPolynomial> {
    let n2 = (n * n) as usize;
    let qs = (n2 + 1..=n2 + n as usize)
        .map(|l| q_poly(base, l))
        .collect::<Result<Vec<_>>>()?;
    block_average(&qs)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerPair {
    pub power: u64,
    /// `‖P_n(T_γ^p) f‖²` on the side containing the block.
    #[serde(with = "crate::rational::serde_num_den")]
    pub rigid_side: Rational,
    /// `‖P_n(T_γ'^p) f‖²` on the other side.
    #[serde(with = "crate::rational::serde_num_den")]
    pub mixing_side: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointnessReport {
    pub block: u64,
    /// Side containing the block.
    pub rigid: GammaSet,
    pub mixing: GammaSet,
    pub stages: (usize, usize),
    /// Average of `1 - 1/r_l` over the block's stages.
    #[serde(with = "crate::rational::serde_num_den")]
    pub target_scale: Rational,
    /// `‖P_n(T_γ) f - t f‖²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub rigidity_deficit: Rational,
    /// `‖P_n(T_γ) f - f‖²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub deficit_to_f: Rational,
    /// `‖P_n(T_γ') f‖²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub mixing_norm: Rational,
    /// `rigidity_deficit < mixing_norm`.
    pub ordering_holds: bool,
    pub powers: Vec<PowerPair>,
    #[serde(with = "crate::rational::serde_bigint")]
    pub sweep_lo: BigInt,
    #[serde(with = "crate::rational::serde_bigint")]
    pub sweep_hi: BigInt,
    /// Ranges of `k` where both `ρ_γ(k)` and `ρ_γ'(k)` are positive.
    pub shared: Vec<(String, String)>,
    #[serde(with = "crate::rational::serde_bigint")]
    pub shared_count: BigInt,
    /// Every `k ≥ k0` in the sweep has at most one side positive.
    #[serde(with = "crate::rational::serde_bigint")]
    pub k0: BigInt,
    /// `h_{(c+1)²}` where `c` is the largest block in both sets (`h_1` if none).
    #[serde(with = "crate::rational::serde_bigint")]
    pub predicted_threshold: BigInt,
    pub separated_past_prediction: bool,
}

impl DisjointnessReport {
    pub fn holds(&self) -> bool {
        self.ordering_holds && self.separated_past_prediction
    }
}

fn intersect_spans(a: &[Span], b: &[Span]) -> Vec<Span> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.clone().max(b[j].0.clone());
        let hi = a[i].1.clone().min(b[j].1.clone());
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Settings for [`disjointness_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub block: u64,
    pub powers: Vec<u64>,
    /// Stages of `T_γ` to build; must cover the block and the sweep.
    pub stages: usize,
    /// Inclusive `k` range of the support sweep.
    pub sweep: (BigInt, BigInt),
}

/// Evaluates the base block polynomial `P_n` on `T_γ` and `T_γ'` and sweeps
/// the supports of `ρ_γ` and `ρ_γ'` on `X_1`.
pub fn disjointness_experiment(
    base: &ConstructionParams,
    gamma1: &GammaSet,
    gamma2: &GammaSet,
    spec: &ExperimentSpec,
) -> Result<DisjointnessReport> {
    let n = spec.block;
    let (rigid, mixing) = match (gamma1.contains(n), gamma2.contains(n)) {
        (true, false) => (gamma1, gamma2),
        (false, true) => (gamma2, gamma1),
        _ => return Err(Error::NonDiscriminatingBlock { block: n }),
    };
    if spec.powers.contains(&0) {
        return Err(Error::InvalidParams("powers must be at least 1".into()));
    }
    let base_geom = build_geometry(base, spec.stages + 1)?;
    let p_n = block_polynomial(&base_geom, n)?;
    let g_rigid = build_geometry(&gamma_params(base, rigid, spec.stages)?, spec.stages + 1)?;
    let g_mixing = build_geometry(&gamma_params(base, mixing, spec.stages)?, spec.stages + 1)?;
    let x_rigid = tower_set(&g_rigid, 1)?;
    let x_mixing = tower_set(&g_mixing, 1)?;
    let ac_rigid = Autocorrelator::new(&g_rigid, &x_rigid)?;
    let ac_mixing = Autocorrelator::new(&g_mixing, &x_mixing)?;

    let n2 = (n * n) as usize;
    let stages = (n2 + 1, n2 + n as usize);
    let mut target_sum = Rational::zero();
    for l in stages.0..=stages.1 {
        let r = Rational::from_integer(base_geom.r(l)?.into());
        target_sum += Rational::one() - Rational::one() / r;
    }
    let target_scale = target_sum / Rational::from_integer(n.into());
    let deficit = rigidity_deficit(&ac_rigid, &p_n, &target_scale)?;
    let mixing_norm = poly_norm_sq(&ac_mixing, &p_n)?;
    let mut powers = Vec::new();
    for &p in &spec.powers {
        let pp = p_n.substitute_power(p)?;
        powers.push(PowerPair {
            power: p,
            rigid_side: poly_norm_sq(&ac_rigid, &pp)?,
            mixing_side: poly_norm_sq(&ac_mixing, &pp)?,
        });
    }

    let (lo, hi) = &spec.sweep;
    let sa = shift_profile(&g_rigid, &x_rigid, &x_rigid, lo, hi)?.support();
    let sb = shift_profile(&g_mixing, &x_mixing, &x_mixing, lo, hi)?.support();
    let shared = intersect_spans(&sa, &sb);
    let shared_count = shared.iter().map(|(a, b)| b - a + 1).sum();
    let k0 = shared
        .last()
        .map(|(_, b)| b + 1)
        .unwrap_or_else(|| lo.clone());

    let common = rigid
        .elements()
        .into_iter()
        .filter(|&e| mixing.contains(e))
        .max();
    let predicted_stage = common.map(|c| ((c + 1) * (c + 1)) as usize).unwrap_or(1);
    let predicted_threshold = base_geom.height(predicted_stage)?.clone();

    Ok(DisjointnessReport {
        block: n,
        rigid: rigid.clone(),
        mixing: mixing.clone(),
        stages,
        ordering_holds: deficit < mixing_norm,
        deficit_to_f: rigidity_deficit(&ac_rigid, &p_n, &Rational::one())?,
        rigidity_deficit: deficit,
        target_scale,
        mixing_norm,
        powers,
        sweep_lo: lo.clone(),
        sweep_hi: hi.clone(),
        shared: shared
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        shared_count,
        separated_past_prediction: k0 <= predicted_threshold,
        k0,
        predicted_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::reference::*;
    use crate::rational::rat;

    fn g(bits: &str) -> GammaSet {
        GammaSet::from_bits(bits).unwrap()
    }

    #[test]
    fn codes_of_prefixes() {
        assert_eq!(g("0000").elements(), vec![2, 4, 8, 16]);
        assert_eq!(g("1111").elements(), vec![3, 7, 15, 31]);
        assert_eq!(g("1000").elements(), vec![3, 6, 12, 24]);
        assert_eq!(g("0100").elements(), vec![2, 5, 10, 20]);
        assert!(g("0100").contains(10));
        assert!(!g("0100").contains(11));
        assert!(!g("0100").contains(1));
        assert!(!g("0100").contains(40));
        assert!(GammaSet::from_bits("").is_err());
        assert!(GammaSet::from_bits("012").is_err());
    }

    #[test]
    fn blocks_tile() {
        for n in 1..=100u64 {
            assert_eq!(*block(n).end() + 1, (n + 1) * (n + 1));
            assert_eq!(block(n).count() as u64, 2 * n + 1);
            for j in block(n) {
                assert_eq!(block_of(j), n);
            }
        }
    }

    #[test]
    fn heights_align() {
        let base = separated_four(16);
        let bg = build_geometry(&base, 17).unwrap();
        for bits in ["0000", "0100", "1000", "1111"] {
            let p = gamma_params(&base, &g(bits), 16).unwrap();
            let tg = build_geometry(&p, 17).unwrap();
            assert_eq!(tg.heights(), bg.heights(), "{bits}");
        }
        let all = gamma_params(&base, &g("0000"), 3).unwrap();
        assert!(all.stages.iter().all(StageParams::is_fictive));
        assert!(gamma_params(&base, &g("0000"), 17).is_err());
    }

    #[test]
    fn kept_blocks_copy_the_base() {
        let base = separated_four(8);
        assert_eq!(gamma_params_with(&base, |_| true, 8).unwrap(), base);
        let p = gamma_params(&base, &g("0"), 8).unwrap();
        assert!(p.stages[..3].iter().all(StageParams::is_fictive));
        assert_eq!(p.stages[3..8], base.stages[3..8]);
    }

    #[test]
    fn non_discriminating_block() {
        let base = separated_four(10);
        let spec = ExperimentSpec {
            block: 2,
            powers: vec![],
            stages: 9,
            sweep: (BigInt::from(1), BigInt::from(10)),
        };
        let err = disjointness_experiment(&base, &g("0000"), &g("0100"), &spec);
        assert_eq!(err.unwrap_err(), Error::NonDiscriminatingBlock { block: 2 });
    }

    #[test]
    fn block_two_experiment() {
        let base = separated_four(11);
        let bg = build_geometry(&base, 12).unwrap();
        let spec = ExperimentSpec {
            block: 2,
            powers: vec![2],
            stages: 11,
            sweep: (BigInt::from(1), bg.height(10).unwrap().clone()),
        };
        let rep = disjointness_experiment(&base, &g("0000"), &g("1000"), &spec).unwrap();
        assert_eq!(rep.stages, (5, 6));
        assert_eq!(rep.target_scale, rat(3, 4));
        assert_eq!(rep.rigidity_deficit, rat(15, 32));
        assert_eq!(rep.mixing_norm, rat(12, 32));
        assert!(!rep.ordering_holds);
        assert_eq!(rep.shared_count, BigInt::zero());
        assert!(rep.separated_past_prediction);
    }

    #[test]
    fn two_column_base_orders() {
        // deficit (r-1)(2r-3)/(r² n) against (r-1)/(r n): ordered only for r = 2
        let base = separated_two(11);
        let bg = build_geometry(&base, 12).unwrap();
        let spec = ExperimentSpec {
            block: 2,
            powers: vec![],
            stages: 11,
            sweep: (BigInt::from(1), bg.height(10).unwrap().clone()),
        };
        let rep = disjointness_experiment(&base, &g("0000"), &g("1000"), &spec).unwrap();
        assert_eq!(rep.rigidity_deficit, rat(1, 8));
        assert_eq!(rep.mixing_norm, rat(1, 4));
        assert!(rep.holds());
    }
}

//! Block-by-block verification of the rigid/mixing polynomial identities.
//!
//! For a block `Q_l` with bases `k_1 < … < k_r` the squared norm
//! `‖Q_l(T^p) f‖² = r⁻² Σ ρ_f(p(k_i - k_i' - k_m + k_m'))` runs over quadruples
//! `(i, i', m, m')` with `i ≠ i'`, `m ≠ m'`. Under enough separation only three
//! kinds of quadruple contribute:
//!
//! * `A`: `i = m, i' = m'`, value `μ(F)`;
//! * `B`: `i = m, i' ≠ m'`, value `μ(F)/r` when `p = 1`, else 0;
//! * `C`: `i' = m', i ≠ m`, same as `B`;
//! * `D`: everything else, value 0.
//!
//! Every quadruple is checked against its prediction. Mismatches are listed,
//! not raised.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::Autocorrelator;
use crate::error::{Error, Result};
use crate::geometry::StageGeometry;
use crate::levelset::LevelSet;
use crate::poly::{
    block_average, poly_against_f, poly_inner, poly_norm_sq, q_plus_poly, q_poly, rigidity_deficit,
    support_collisions, OperatorPolynomial,
};
use crate::rational::Rational;

/// Violations beyond this many are counted but not listed.
pub const MAX_LISTED_VIOLATIONS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadrupleClass {
    A,
    B,
    C,
    D,
}

impl QuadrupleClass {
    pub fn of(i: usize, i2: usize, m: usize, m2: usize) -> Self {
        match (i == m, i2 == m2) {
            (true, true) => Self::A,
            (true, false) => Self::B,
            (false, true) => Self::C,
            (false, false) => Self::D,
        }
    }

    /// Predicted `ρ_f` value for a quadruple of this class under power `p`.
    pub fn predicted(self, mass: &Rational, r: usize, power: u64) -> Rational {
        match self {
            Self::A => mass.clone(),
            Self::B | Self::C if power == 1 => mass / Rational::from_integer(r.into()),
            _ => Rational::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub class: QuadrupleClass,
    pub count: u64,
    #[serde(with = "crate::rational::serde_num_den")]
    pub predicted_each: Rational,
    /// Exact `Σ ρ_f` over the quadruples of this class.
    #[serde(with = "crate::rational::serde_num_den")]
    pub exact_sum: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrupleViolation {
    pub stage: usize,
    pub power: u64,
    /// 1-based column indices `(i, i', m, m')`.
    pub columns: [usize; 4],
    pub class: QuadrupleClass,
    #[serde(with = "crate::rational::serde_bigint")]
    pub shift: BigInt,
    #[serde(with = "crate::rational::serde_num_den")]
    pub predicted: Rational,
    #[serde(with = "crate::rational::serde_num_den")]
    pub exact: Rational,
}

/// Classification of `‖Q_l(T^p) f‖²` for one power.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub power: u64,
    pub tallies: Vec<ClassTally>,
    /// `r⁻² Σ_{all classes} exact_sum`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub norm_sq_from_classes: Rational,
    pub violation_count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerNorm {
    pub power: u64,
    /// `‖Q_l(T^p) f‖²` from the polynomial.
    #[serde(with = "crate::rational::serde_num_den")]
    pub exact: Rational,
    /// `(r - 1)/r · μ(F)`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub formula: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockReport {
    pub stage: usize,
    pub r: usize,
    pub classifications: Vec<Classification>,
    /// `‖Q_l(T) f‖²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub q_norm_sq: Rational,
    /// `μ(F)·[(r-1)/r + 2(r-1)(r-2)/r²]`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub q_norm_sq_formula: Rational,
    /// `3(r-1)/r · μ(F)`, the large-`r` constant.
    #[serde(with = "crate::rational::serde_num_den")]
    pub q_norm_sq_leading: Rational,
    pub power_norms: Vec<PowerNorm>,
    /// `(Q_l f, f)`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub q_against_f: Rational,
    #[serde(with = "crate::rational::serde_num_den")]
    pub q_against_f_formula: Rational,
    /// `‖Q_l f - (1 - 1/r) f‖²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub delta_norm_sq: Rational,
    /// `μ(F)(r-1)(2r-3)/r²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub delta_norm_sq_formula: Rational,
    /// `2(1 - 1/r) μ(F)`, the large-`r` constant.
    #[serde(with = "crate::rational::serde_num_den")]
    pub delta_norm_sq_leading: Rational,
    #[serde(with = "crate::rational::serde_num_den")]
    pub q_plus_norm_sq: Rational,
    #[serde(with = "crate::rational::serde_num_den")]
    pub q_plus_against_f: Rational,
}

impl BlockReport {
    pub fn identities_hold(&self) -> bool {
        self.q_norm_sq == self.q_norm_sq_formula
            && self.q_against_f == self.q_against_f_formula
            && self.delta_norm_sq == self.delta_norm_sq_formula
            && self.power_norms.iter().all(|p| p.exact == p.formula)
            && self.classifications.iter().all(|c| c.violation_count == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossProduct {
    pub stages: (usize, usize),
    /// 1 for the `Δ` products, otherwise the power applied to both blocks.
    pub power: u64,
    #[serde(with = "crate::rational::serde_num_den")]
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerBound {
    pub power: u64,
    /// `‖P(T^p) f‖²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub norm_sq: Rational,
    /// `μ(F)/m`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub bound: Rational,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theorem41Report {
    pub stage: usize,
    pub blocks_used: usize,
    pub powers: Vec<u64>,
    #[serde(with = "crate::rational::serde_num_den")]
    pub f_mass: Rational,
    pub blocks: Vec<BlockReport>,
    pub violations: Vec<QuadrupleViolation>,
    pub violation_count: u64,
    /// `(Δ_l f, Δ_l' f)` for `l < l'`.
    pub delta_cross: Vec<CrossProduct>,
    /// `(Q_l(T^p) f, Q_l'(T^p) f)` for `l < l'`.
    pub power_cross: Vec<CrossProduct>,
    /// Exponents shared by two blocks of `P`.
    pub support_collisions: usize,
    pub power_bounds: Vec<PowerBound>,
    /// Average of `1 - 1/r_l` over the blocks.
    #[serde(with = "crate::rational::serde_num_den")]
    pub target_scale: Rational,
    /// `‖P(T) f - t f‖²` for the target scale `t`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub rigidity_deficit: Rational,
    /// `2 μ(F)/m`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub rigidity_bound: Rational,
    pub rigidity_bound_holds: bool,
    /// `‖P(T) f - f‖²`.
    #[serde(with = "crate::rational::serde_num_den")]
    pub deficit_to_f: Rational,
}

impl Theorem41Report {
    pub fn all_hold(&self) -> bool {
        self.violation_count == 0
            && self.support_collisions == 0
            && self.blocks.iter().all(BlockReport::identities_hold)
            && self.delta_cross.iter().all(|c| c.value.is_zero())
            && self.power_cross.iter().all(|c| c.value.is_zero())
            && self.power_bounds.iter().all(|b| b.holds)
            && self.rigidity_bound_holds
    }
}

fn r_rat(r: usize) -> Rational {
    Rational::from_integer(BigInt::from(r))
}

fn classify_block(
    ac: &Autocorrelator<'_>,
    stage: usize,
    bases: &[BigInt],
    mass: &Rational,
    power: u64,
) -> Result<(Classification, Vec<QuadrupleViolation>)> {
    let r = bases.len();
    let quads: Vec<[usize; 4]> = (0..r)
        .flat_map(|i| (0..r).map(move |i2| (i, i2)))
        .filter(|(i, i2)| i != i2)
        .flat_map(|(i, i2)| {
            (0..r)
                .flat_map(move |m| (0..r).map(move |m2| [i, i2, m, m2]))
                .filter(|q| q[2] != q[3])
        })
        .collect();
    let values: Vec<(QuadrupleClass, BigInt, Rational)> = quads
        .par_iter()
        .map(|&[i, i2, m, m2]| {
            let shift = (&bases[i] - &bases[i2] - &bases[m] + &bases[m2]) * power;
            let v = ac.rho(&shift)?;
            Ok((QuadrupleClass::of(i, i2, m, m2), shift, v))
        })
        .collect::<Result<_>>()?;

    let classes = [
        QuadrupleClass::A,
        QuadrupleClass::B,
        QuadrupleClass::C,
        QuadrupleClass::D,
    ];
    let mut tallies: Vec<ClassTally> = classes
        .iter()
        .map(|&class| ClassTally {
            class,
            count: 0,
            predicted_each: class.predicted(mass, r, power),
            exact_sum: Rational::zero(),
        })
        .collect();
    let mut violations = Vec::new();
    let mut total = Rational::zero();
    let mut violation_count = 0;
    for (q, (class, shift, v)) in quads.iter().zip(values) {
        let t = &mut tallies[class as usize];
        t.count += 1;
        t.exact_sum += &v;
        total += &v;
        if v != t.predicted_each {
            violation_count += 1;
            violations.push(QuadrupleViolation {
                stage,
                power,
                columns: [q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1],
                class,
                shift,
                predicted: t.predicted_each.clone(),
                exact: v,
            });
        }
    }
    let rr = r_rat(r);
    Ok((
        Classification {
            power,
            tallies,
            norm_sq_from_classes: total / (&rr * &rr),
            violation_count,
        },
        violations,
    ))
}

fn block_report(
    geom: &StageGeometry,
    ac: &Autocorrelator<'_>,
    stage: usize,
    powers: &[u64],
    mass: &Rational,
) -> Result<(BlockReport, Vec<QuadrupleViolation>, OperatorPolynomial)> {
    let q = q_poly(geom, stage)?;
    let st = geom.stage(stage)?;
    let r = st.r;
    let rr = r_rat(r);
    let one = Rational::one();
    let keep = &one - &one / &rr;

    let mut classifications = Vec::new();
    let mut violations = Vec::new();
    let mut all_powers = vec![1];
    all_powers.extend(powers.iter().copied().filter(|&p| p != 1));
    for &p in &all_powers {
        let (c, v) = classify_block(ac, stage, &st.bases, mass, p)?;
        classifications.push(c);
        violations.extend(v);
    }

    let mut power_norms = Vec::new();
    for &p in powers {
        power_norms.push(PowerNorm {
            power: p,
            exact: poly_norm_sq(ac, &q.substitute_power(p)?)?,
            formula: if p == 1 {
                mass * (&keep
                    + Rational::from_integer(BigInt::from(2 * (r - 1) * (r - 2))) / (&rr * &rr))
            } else {
                mass * &keep
            },
        });
    }

    let rm1 = Rational::from_integer(BigInt::from(r - 1));
    let q_plus = q_plus_poly(geom, stage)?;
    let report = BlockReport {
        stage,
        r,
        classifications,
        q_norm_sq: poly_norm_sq(ac, &q)?,
        q_norm_sq_formula: mass
            * (&keep + Rational::from_integer(BigInt::from(2 * (r - 1) * (r - 2))) / (&rr * &rr)),
        q_norm_sq_leading: mass * Rational::from_integer(3.into()) * &keep,
        power_norms,
        q_against_f: poly_against_f(ac, &q)?,
        q_against_f_formula: mass * &keep,
        delta_norm_sq: rigidity_deficit(ac, &q, &keep)?,
        delta_norm_sq_formula: mass * &rm1 * Rational::from_integer(BigInt::from(2 * r as i64 - 3))
            / (&rr * &rr),
        delta_norm_sq_leading: mass * Rational::from_integer(2.into()) * &keep,
        q_plus_norm_sq: poly_norm_sq(ac, &q_plus)?,
        q_plus_against_f: poly_against_f(ac, &q_plus)?,
    };
    Ok((report, violations, q))
}

/// Checks blocks `Q_{j+1}, …, Q_{j+m}` and the averaged polynomial
/// `P_j = (Q_{j+1} + … + Q_{j+m})/m` against `f = χ_F`.
///
/// `m = None` uses `m = j`.
pub fn theorem41_report(
    geom: &StageGeometry,
    f: &LevelSet,
    j: usize,
    powers: &[u64],
    m: Option<usize>,
) -> Result<Theorem41Report> {
    let m = m.unwrap_or(j);
    if m == 0 {
        return Err(Error::EmptyBlockList);
    }
    if powers.contains(&0) {
        return Err(Error::InvalidParams("powers must be at least 1".into()));
    }
    let ac = Autocorrelator::new(geom, f)?;
    let mass = ac.mass()?;
    let one = Rational::one();

    let mut blocks = Vec::with_capacity(m);
    let mut violations = Vec::new();
    let mut qs = Vec::with_capacity(m);
    let mut deltas = Vec::with_capacity(m);
    let mut target_sum = Rational::zero();
    for l in j + 1..=j + m {
        let (b, v, q) = block_report(geom, &ac, l, powers, &mass)?;
        let keep = &one - &one / r_rat(b.r);
        deltas.push(q.minus(&OperatorPolynomial::identity().scaled(&keep)));
        target_sum += keep;
        blocks.push(b);
        violations.extend(v);
        qs.push(q);
    }
    let violation_count = violations.len() as u64;
    violations.truncate(MAX_LISTED_VIOLATIONS);

    let mut delta_cross = Vec::new();
    let mut power_cross = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let stages = (j + 1 + a, j + 1 + b);
            delta_cross.push(CrossProduct {
                stages,
                power: 1,
                value: poly_inner(&ac, &deltas[a], &deltas[b])?,
            });
            for &p in powers.iter().filter(|&&p| p != 1) {
                power_cross.push(CrossProduct {
                    stages,
                    power: p,
                    value: poly_inner(
                        &ac,
                        &qs[a].substitute_power(p)?,
                        &qs[b].substitute_power(p)?,
                    )?,
                });
            }
        }
    }

    let mr = r_rat(m);
    let p_avg = block_average(&qs)?;
    let mut power_bounds = Vec::new();
    for &p in powers.iter().filter(|&&p| p != 1) {
        let norm_sq = poly_norm_sq(&ac, &p_avg.substitute_power(p)?)?;
        let bound = &mass / &mr;
        power_bounds.push(PowerBound {
            power: p,
            holds: norm_sq < bound,
            norm_sq,
            bound,
        });
    }
    let target_scale = target_sum / &mr;
    let deficit = rigidity_deficit(&ac, &p_avg, &target_scale)?;
    let rigidity_bound = &mass * Rational::from_integer(2.into()) / &mr;

    Ok(Theorem41Report {
        stage: j,
        blocks_used: m,
        powers: powers.to_vec(),
        support_collisions: support_collisions(&qs),
        deficit_to_f: rigidity_deficit(&ac, &p_avg, &one)?,
        rigidity_bound_holds: deficit < rigidity_bound,
        rigidity_deficit: deficit,
        rigidity_bound,
        target_scale,
        f_mass: mass,
        blocks,
        violations,
        violation_count,
        delta_cross,
        power_cross,
        power_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::levelset::tower_set;
    use crate::params::reference::*;
    use crate::rational::{int, rat};

    #[test]
    fn class_of_quadruples() {
        assert_eq!(QuadrupleClass::of(1, 2, 1, 2), QuadrupleClass::A);
        assert_eq!(QuadrupleClass::of(1, 2, 1, 3), QuadrupleClass::B);
        assert_eq!(QuadrupleClass::of(1, 2, 3, 2), QuadrupleClass::C);
        assert_eq!(QuadrupleClass::of(1, 2, 2, 1), QuadrupleClass::D);
    }

    #[test]
    fn separated_four_single_block() {
        let params = separated_four(4);
        let g = build_geometry(&params, 5).unwrap();
        let x1 = tower_set(&g, 1).unwrap();
        let rep = theorem41_report(&g, &x1, 1, &[2, 3], Some(1)).unwrap();
        let b = &rep.blocks[0];
        assert_eq!(b.stage, 2);
        assert_eq!(b.q_norm_sq, rat(3, 2));
        assert_eq!(b.q_against_f, rat(3, 4));
        assert_eq!(b.delta_norm_sq, rat(15, 16));
        assert_eq!(b.q_norm_sq_leading, rat(9, 4));
        assert_eq!(b.delta_norm_sq_leading, rat(3, 2));
        for pn in &b.power_norms {
            assert_eq!(pn.exact, rat(3, 4));
        }
        let c = &b.classifications[0];
        let counts: Vec<u64> = c.tallies.iter().map(|t| t.count).collect();
        assert_eq!(counts, vec![12, 24, 24, 84]);
        assert_eq!(c.norm_sq_from_classes, b.q_norm_sq);
        assert_eq!(rep.violation_count, 0);
        assert!(rep.all_hold());
    }

    #[test]
    fn separated_four_averages() {
        let params = separated_four(6);
        let g = build_geometry(&params, 7).unwrap();
        let x1 = tower_set(&g, 1).unwrap();
        let mut last = None;
        for m in 1..=4 {
            let rep = theorem41_report(&g, &x1, 1, &[2, 3], Some(m)).unwrap();
            assert!(rep.all_hold(), "m = {m}");
            let mr = int(m as i64);
            assert_eq!(rep.rigidity_deficit, rat(15, 16) / &mr);
            assert_eq!(rep.deficit_to_f, rat(15, 16) / &mr + rat(1, 16));
            for pb in &rep.power_bounds {
                assert_eq!(pb.norm_sq, rat(3, 4) / &mr);
            }
            if let Some(prev) = last {
                assert!(rep.deficit_to_f < prev);
            }
            last = Some(rep.deficit_to_f.clone());
        }
    }

    #[test]
    fn decimal_block_values() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let x1 = tower_set(&g, 1).unwrap();
        let rep = theorem41_report(&g, &x1, 0, &[2], Some(1)).unwrap();
        let b = &rep.blocks[0];
        assert_eq!(b.q_norm_sq, rat(10, 9));
        assert_eq!(b.delta_norm_sq, rat(2, 3));
        assert_eq!(b.power_norms[0].exact, rat(2, 3));
        assert_eq!(b.classifications[0].norm_sq_from_classes, rat(10, 9));
    }

    #[test]
    fn degenerate_block_rejected() {
        let g = build_geometry(&separated_four(2), 3).unwrap();
        let x1 = tower_set(&g, 1).unwrap();
        assert!(matches!(
            theorem41_report(&g, &x1, 0, &[2], Some(0)),
            Err(Error::EmptyBlockList)
        ));
        assert!(theorem41_report(&g, &x1, 0, &[0], Some(1)).is_err());
    }
}

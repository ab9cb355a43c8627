//! Operator polynomials `Σ c_n T^n` and their exact action on indicator functions.
//!
//! For `f = χ_F` every inner product reduces to autocorrelations:
//! `(Σ c_n T^n f, Σ c'_m T^m f) = Σ c_n c'_m ρ_F(n - m)`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::Autocorrelator;
use crate::error::{Error, Result};
use crate::geometry::StageGeometry;
use crate::rational::Rational;

/// One `c T^n` term in serialised form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    #[serde(with = "crate::rational::serde_bigint")]
    pub exponent: BigInt,
    #[serde(with = "crate::rational::serde_num_den")]
    pub coeff: Rational,
}

/// Finite sum `Σ c_n T^n` with rational coefficients; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<Term>", from = "Vec<Term>")]
pub struct OperatorPolynomial {
    terms: BTreeMap<BigInt, Rational>,
}

impl OperatorPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The identity `T^0`.
    pub fn identity() -> Self {
        Self::monomial(BigInt::zero(), Rational::one())
    }

    pub fn monomial(exponent: BigInt, coeff: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(exponent, coeff);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (BigInt, Rational)>) -> Self {
        let mut p = Self::zero();
        for (n, c) in terms {
            p.add_term(n, c);
        }
        p
    }

    /// Adds `coeff T^exponent`, summing with any existing term.
    pub fn add_term(&mut self, exponent: BigInt, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(exponent) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<BigInt, Rational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exponent: &BigInt) -> Rational {
        self.terms
            .get(exponent)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn coeff_sum(&self) -> Rational {
        self.terms.values().sum()
    }

    pub fn scaled(&self, k: &Rational) -> Self {
        Self::from_terms(self.terms.iter().map(|(n, c)| (n.clone(), c * k)))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, c) in &other.terms {
            out.add_term(n.clone(), c.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(&-Rational::one()))
    }

    /// `p(T) ↦ p(T^power)`: every exponent is multiplied by `power`.
    pub fn substitute_power(&self, power: u64) -> Result<Self> {
        if power == 0 {
            return Err(Error::InvalidParams("power must be at least 1".into()));
        }
        Ok(Self {
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n * power, c.clone()))
                .collect(),
        })
    }

    /// True when `term(-n) = term(n)` for every `n`.
    pub fn is_symmetric(&self) -> bool {
        self.terms.iter().all(|(n, c)| self.coeff(&-n) == *c)
    }
}

impl From<OperatorPolynomial> for Vec<Term> {
    fn from(p: OperatorPolynomial) -> Self {
        p.terms
            .into_iter()
            .map(|(exponent, coeff)| Term { exponent, coeff })
            .collect()
    }
}

impl From<Vec<Term>> for OperatorPolynomial {
    fn from(v: Vec<Term>) -> Self {
        Self::from_terms(v.into_iter().map(|t| (t.exponent, t.coeff)))
    }
}

fn check_block(geom: &StageGeometry, j: usize) -> Result<&crate::geometry::StageData> {
    let st = geom.stage(j)?;
    if st.r < 2 {
        return Err(Error::DegeneratePolynomial { stage: j });
    }
    Ok(st)
}

/// `Q_j(T) = (1/r_j) Σ_{i ≠ i'} T^{k(i,j) - k(i',j)}`.
pub fn q_poly(geom: &StageGeometry, j: usize) -> Result<OperatorPolynomial> {
    let st = check_block(geom, j)?;
    let w = Rational::new(BigInt::one(), BigInt::from(st.r));
    let mut p = OperatorPolynomial::zero();
    for (a, ka) in st.bases.iter().enumerate() {
        for (b, kb) in st.bases.iter().enumerate() {
            if a != b {
                p.add_term(ka - kb, w.clone());
            }
        }
    }
    Ok(p)
}

/// `Q_j⁺(T) = (1/(2 r_j)) Σ_{i' < i} T^{k(i,j) - k(i',j)}`.
pub fn q_plus_poly(geom: &StageGeometry, j: usize) -> Result<OperatorPolynomial> {
    let st = check_block(geom, j)?;
    let w = Rational::new(BigInt::one(), BigInt::from(2 * st.r));
    let mut p = OperatorPolynomial::zero();
    for (a, ka) in st.bases.iter().enumerate() {
        for kb in &st.bases[..a] {
            p.add_term(ka - kb, w.clone());
        }
    }
    Ok(p)
}

/// Coefficient-wise average. Colliding exponents are summed.
pub fn block_average(polys: &[OperatorPolynomial]) -> Result<OperatorPolynomial> {
    if polys.is_empty() {
        return Err(Error::EmptyBlockList);
    }
    let w = Rational::new(BigInt::one(), BigInt::from(polys.len()));
    let mut out = OperatorPolynomial::zero();
    for p in polys {
        for (n, c) in p.terms() {
            out.add_term(n.clone(), c * &w);
        }
    }
    Ok(out)
}

/// Number of exponents shared by at least two of `polys`.
pub fn support_collisions(polys: &[OperatorPolynomial]) -> usize {
    let mut seen: BTreeMap<&BigInt, usize> = BTreeMap::new();
    for p in polys {
        for n in p.terms().keys() {
            *seen.entry(n).or_default() += 1;
        }
    }
    seen.values().filter(|&&k| k > 1).count()
}

/// `(p(T) χ_F, q(T) χ_F) = Σ_{n,m} p_n q_m ρ_F(n - m)`.
pub fn poly_inner(
    ac: &Autocorrelator<'_>,
    p: &OperatorPolynomial,
    q: &OperatorPolynomial,
) -> Result<Rational> {
    let qs: Vec<(&BigInt, &Rational)> = q.terms().iter().collect();
    let partial: Vec<Rational> = p
        .terms()
        .par_iter()
        .map(|(n, c)| -> Result<Rational> {
            let mut acc = Rational::zero();
            for (m, d) in &qs {
                let rho = ac.rho(&(n - *m))?;
                if !rho.is_zero() {
                    acc += c * *d * rho;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(partial.into_iter().sum())
}

/// `‖p(T) χ_F‖²`.
pub fn poly_norm_sq(ac: &Autocorrelator<'_>, p: &OperatorPolynomial) -> Result<Rational> {
    poly_inner(ac, p, p)
}

/// `(p(T) χ_F, χ_F) = Σ c_n ρ_F(n)`.
pub fn poly_against_f(ac: &Autocorrelator<'_>, p: &OperatorPolynomial) -> Result<Rational> {
    let mut acc = Rational::zero();
    for (n, c) in p.terms() {
        acc += c * ac.rho(n)?;
    }
    Ok(acc)
}

/// `‖p(T) χ_F - t χ_F‖² = ‖p f‖² - 2 t Σ c_n ρ_F(n) + t² ρ_F(0)`.
pub fn rigidity_deficit(
    ac: &Autocorrelator<'_>,
    p: &OperatorPolynomial,
    target_scale: &Rational,
) -> Result<Rational> {
    let norm = poly_norm_sq(ac, p)?;
    let cross = poly_against_f(ac, p)?;
    let mass = ac.rho(&BigInt::zero())?;
    Ok(norm - cross * target_scale * BigInt::from(2) + target_scale * target_scale * mass)
}

/// Sum of absolute coefficients, a crude bound used in reports.
pub fn l1_mass(p: &OperatorPolynomial) -> Rational {
    p.terms().values().map(|c| c.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::levelset::tower_set;
    use crate::params::reference::*;
    use crate::params::{ConstructionParams, StageParams};
    use crate::rational::{int, rat};

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn q_poly_decimal_stage_one() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let q = q_poly(&g, 1).unwrap();
        let exps: Vec<i64> = q.terms().keys().map(|n| n.try_into().unwrap()).collect();
        assert_eq!(exps, vec![-110, -100, -10, 10, 100, 110]);
        assert!(q.terms().values().all(|c| *c == rat(1, 3)));
        assert_eq!(q.coeff_sum(), int(2));
        assert!(q.is_symmetric());
    }

    #[test]
    fn q_plus_decimal_stage_one() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let q = q_plus_poly(&g, 1).unwrap();
        let exps: Vec<i64> = q.terms().keys().map(|n| n.try_into().unwrap()).collect();
        assert_eq!(exps, vec![10, 100, 110]);
        assert!(q.terms().values().all(|c| *c == rat(1, 6)));
        assert_eq!(q.coeff_sum(), rat(1, 2));
    }

    #[test]
    fn fictive_stage_is_degenerate() {
        let p = ConstructionParams::new(1, vec![StageParams::fictive(4.into())]);
        let g = build_geometry(&p, 2).unwrap();
        assert_eq!(q_poly(&g, 1), Err(Error::DegeneratePolynomial { stage: 1 }));
        assert!(q_plus_poly(&g, 1).is_err());
    }

    #[test]
    fn averaging_and_substitution() {
        let a = OperatorPolynomial::from_terms([(b(1), int(1)), (b(2), int(1))]);
        let c = OperatorPolynomial::from_terms([(b(5), int(1))]);
        assert_eq!(block_average(std::slice::from_ref(&a)).unwrap(), a);
        let avg = block_average(&[a.clone(), c]).unwrap();
        assert_eq!(avg.len(), 3);
        assert!(avg.terms().values().all(|v| *v == rat(1, 2)));
        assert_eq!(block_average(&[]), Err(Error::EmptyBlockList));

        assert_eq!(a.substitute_power(1).unwrap(), a);
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let q2 = q_poly(&g, 1).unwrap().substitute_power(2).unwrap();
        let exps: Vec<i64> = q2.terms().keys().map(|n| n.try_into().unwrap()).collect();
        assert_eq!(exps, vec![-220, -200, -20, 20, 200, 220]);
        assert!(a.substitute_power(0).is_err());
    }

    #[test]
    fn cancellation_removes_terms() {
        let mut p = OperatorPolynomial::monomial(b(3), int(2));
        p.add_term(b(3), int(-2));
        assert!(p.is_empty());
        let q = OperatorPolynomial::identity().minus(&OperatorPolynomial::identity());
        assert!(q.is_empty());
    }

    #[test]
    fn serde_round_trip() {
        let p = OperatorPolynomial::from_terms([(b(-7), rat(1, 3)), (b(12), rat(-2, 5))]);
        let js = serde_json::to_string(&p).unwrap();
        assert_eq!(
            js,
            r#"[{"exponent":"-7","coeff":"1/3"},{"exponent":"12","coeff":"-2/5"}]"#
        );
        assert_eq!(serde_json::from_str::<OperatorPolynomial>(&js).unwrap(), p);
    }

    #[test]
    fn decimal_block_norms() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let x1 = tower_set(&g, 1).unwrap();
        let ac = Autocorrelator::new(&g, &x1).unwrap();
        let q = q_poly(&g, 1).unwrap();
        assert_eq!(poly_norm_sq(&ac, &q).unwrap(), rat(10, 9));
        let q2 = q.substitute_power(2).unwrap();
        assert_eq!(poly_norm_sq(&ac, &q2).unwrap(), rat(2, 3));
        assert_eq!(
            poly_norm_sq(&ac, &OperatorPolynomial::identity()).unwrap(),
            int(1)
        );

        assert_eq!(
            rigidity_deficit(&ac, &OperatorPolynomial::identity(), &int(1)).unwrap(),
            int(0)
        );
        assert_eq!(rigidity_deficit(&ac, &q, &rat(2, 3)).unwrap(), rat(2, 3));
        assert_eq!(rigidity_deficit(&ac, &q, &int(1)).unwrap(), rat(7, 9));
    }

    #[test]
    fn block_supports_disjoint_for_decimal() {
        let g = build_geometry(&decimal_sidon(3), 4).unwrap();
        let q1 = q_poly(&g, 1).unwrap();
        let q2 = q_poly(&g, 2).unwrap();
        assert_eq!(support_collisions(&[q1.clone(), q2.clone()]), 0);
        let avg = block_average(&[q1.clone(), q2.clone()]).unwrap();
        assert_eq!(avg.len(), q1.len() + q2.len());
        assert!(avg.terms().values().all(|c| *c == rat(1, 6)));
    }
}

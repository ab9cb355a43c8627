//! Exact rationals and the text forms used in reports.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// `"num/den"` in lowest terms; integers still carry `/1`.
pub fn to_num_den(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn parse_num_den(s: &str) -> Option<Rational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// Accepts `"num/den"`, integers and finite decimals such as `"2.5"` or `"-0.125"`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.contains('/') {
        return parse_num_den(s);
    }
    match s.split_once('.') {
        None => parse_num_den(s),
        Some((whole, frac)) => {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let negative = whole.starts_with('-');
            let digits = format!("{}{frac}", whole.trim_start_matches(['-', '+']));
            let n: BigInt = digits.parse().ok()?;
            let q = Rational::new(n, BigInt::from(10).pow(frac.len() as u32));
            Some(if negative { -q } else { q })
        }
    }
}

/// Lossy conversion that survives numerators and denominators far outside `f64` range.
pub fn to_f64(q: &Rational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = q.numer();
    let d = q.denom();
    let shift = n.bits() as i64 - d.bits() as i64;
    // bring the quotient near 1 before dividing
    let (n2, d2) = if shift > 0 {
        (n.clone(), d.clone() << shift as u64)
    } else {
        (n.clone() << (-shift) as u64, d.clone())
    };
    let base = Rational::new(n2, d2).to_f64().unwrap_or(0.0);
    base * 2f64.powi(shift.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
}

/// Fixed formatting with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.11e}", x)
    }
}

pub fn format_rational_float(q: &Rational) -> String {
    format_sig12(to_f64(q))
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

/// Serde adapter writing rationals as `"num/den"` strings.
pub mod serde_num_den {
    use super::{parse_num_den, to_num_den, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_num_den(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_num_den(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }

    pub mod option {
        use super::super::{parse_num_den, to_num_den, Rational};
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match q {
                Some(q) => s.serialize_some(&to_num_den(q)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let s = Option::<String>::deserialize(d)?;
            s.map(|s| {
                parse_num_den(&s)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
            })
            .transpose()
        }
    }

    pub mod vec_option {
        use super::super::{parse_num_den, to_num_den, Rational};
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[Option<Rational>], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for q in v {
                seq.serialize_element(&q.as_ref().map(to_num_den))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<Option<Rational>>, D::Error> {
            let v = Vec::<Option<String>>::deserialize(d)?;
            v.iter()
                .map(|s| {
                    s.as_ref()
                        .map(|s| {
                            parse_num_den(s).ok_or_else(|| {
                                serde::de::Error::custom(format!("bad rational {s:?}"))
                            })
                        })
                        .transpose()
                })
                .collect()
        }
    }

    pub mod vec {
        use super::super::{parse_num_den, to_num_den, Rational};
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for q in v {
                seq.serialize_element(&to_num_den(q))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| {
                    parse_num_den(s)
                        .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
                })
                .collect()
        }
    }
}

/// Serde adapter writing big integers as decimal strings.
pub mod serde_bigint {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }

    pub mod option {
        use num_bigint::BigInt;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(n: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
            match n {
                Some(n) => s.serialize_some(&n.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| s.parse().map_err(serde::de::Error::custom))
                .transpose()
        }
    }

    pub mod vec {
        use num_bigint::BigInt;
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for n in v {
                seq.serialize_element(&n.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| s.parse().map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

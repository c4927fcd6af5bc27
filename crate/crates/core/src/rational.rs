//! Exact rationals, their "p/q" text form and serde helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::Argument(format!("not a rational: {s:?}"));
    match t.split_once('/') {
        Some((a, b)) => {
            let n: BigInt = a.trim().parse().map_err(|_| bad())?;
            let d: BigInt = b.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Argument(format!("zero denominator in {s:?}")));
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `base^exp` when the result is rational (integer exponents, or a base whose
/// numerator and denominator are perfect powers of the exponent's denominator).
pub fn rational_pow(base: &Q, exp: &Q) -> Option<Q> {
    if base.is_zero() {
        return if exp.is_positive() { Some(Q::zero()) } else { None };
    }
    if base.is_one() {
        return Some(Q::one());
    }
    let root = if exp.denom().is_one() {
        base.clone()
    } else {
        if base.is_negative() {
            return None;
        }
        let k = exp.denom().to_u32()?;
        let n = base.numer().nth_root(k);
        let d = base.denom().nth_root(k);
        if num_traits::pow(n.clone(), k as usize) != *base.numer()
            || num_traits::pow(d.clone(), k as usize) != *base.denom()
        {
            return None;
        }
        Q::new(n, d)
    };
    let e = exp.numer().to_i32()?;
    if e.unsigned_abs() > 4096 {
        return None;
    }
    let p = num_traits::pow(root, e.unsigned_abs() as usize);
    Some(if e < 0 { p.recip() } else { p })
}

pub fn ceil(x: &Q) -> BigInt {
    x.ceil().to_integer()
}

pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = RatText::deserialize(d)?;
        s.into_q().map_err(serde::de::Error::custom)
    }

    /// Accepts `"p/q"` strings as well as bare integers.
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum RatText {
        Str(String),
        Int(i64),
    }

    impl RatText {
        pub(crate) fn into_q(self) -> Result<Q> {
            match self {
                RatText::Str(s) => parse_q(&s),
                RatText::Int(i) => Ok(qi(i)),
            }
        }
    }
}

pub mod serde_qvec {
    use super::serde_q::RatText;
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(x.iter().map(fmt_q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        Vec::<RatText>::deserialize(d)?
            .into_iter()
            .map(|t| t.into_q().map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_qopt {
    use super::serde_q::RatText;
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&fmt_q(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        Option::<RatText>::deserialize(d)?
            .map(|t| t.into_q().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/4", "-1/2", "7", "0"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(parse_q("6/8").unwrap(), q(3, 4));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn exact_powers() {
        assert_eq!(rational_pow(&q(1, 2), &qi(3)), Some(q(1, 8)));
        assert_eq!(rational_pow(&q(4, 9), &q(1, 2)), Some(q(2, 3)));
        assert_eq!(rational_pow(&q(4, 9), &q(-3, 2)), Some(q(27, 8)));
        assert_eq!(rational_pow(&qi(2), &q(1, 2)), None);
        assert_eq!(rational_pow(&qi(1), &q(1, 3)), Some(qi(1)));
        assert_eq!(rational_pow(&qi(0), &q(1, 3)), Some(qi(0)));
    }
}

//! Exact rational scalars used for every distance and scale.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Exact nonnegative distance or scale value.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty token")]
    Empty,
    #[error("malformed rational `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("negative value `{0}`")]
    Negative(String),
}

/// Parses `p/q` or an integer token. Negative values, decimals and
/// NaN-like spellings are rejected.
pub fn parse_rational(token: &str) -> Result<Rational, ParseRationalError> {
    let t = token.trim();
    if t.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if t.starts_with('-') {
        return Err(ParseRationalError::Negative(t.to_string()));
    }
    let (num, den) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let unsigned = |s: &'_ str| s.strip_prefix('+').unwrap_or(s).to_string();
    let (num, den) = (unsigned(num), unsigned(den));
    if !digits(&num) || !digits(&den) {
        return Err(ParseRationalError::Malformed(t.to_string()));
    }
    let p: i64 = num
        .parse()
        .map_err(|_| ParseRationalError::Malformed(t.to_string()))?;
    let q: i64 = den
        .parse()
        .map_err(|_| ParseRationalError::Malformed(t.to_string()))?;
    if q == 0 {
        return Err(ParseRationalError::ZeroDenominator(t.to_string()));
    }
    Ok(Rational::new(p, q))
}

/// Canonical lowest-terms rendering: `p/q`, or `p` for integers.
pub fn render(r: &Rational) -> String {
    r.to_string()
}

pub fn is_positive(r: &Rational) -> bool {
    r.is_positive()
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

pub mod serde_rational {
    //! Serialize a [`Rational`] as its canonical string.
    use super::{parse_rational, render, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&render(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/6").unwrap(), Rational::new(1, 2));
        assert_eq!(parse_rational(" 5 ").unwrap(), Rational::from_integer(5));
        assert_eq!(parse_rational("0").unwrap(), Rational::zero());
    }

    #[test]
    fn rejects_bad_tokens() {
        assert!(matches!(parse_rational("-1"), Err(ParseRationalError::Negative(_))));
        assert!(matches!(parse_rational("NaN"), Err(ParseRationalError::Malformed(_))));
        assert!(matches!(parse_rational("0.5"), Err(ParseRationalError::Malformed(_))));
        assert!(matches!(parse_rational("1/0"), Err(ParseRationalError::ZeroDenominator(_))));
        assert!(matches!(parse_rational(""), Err(ParseRationalError::Empty)));
    }

    #[test]
    fn renders_lowest_terms() {
        assert_eq!(render(&Rational::new(2, 6)), "1/3");
        assert_eq!(render(&Rational::new(4, 2)), "2");
    }
}

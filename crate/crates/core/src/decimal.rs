//! Fixed-precision decimal amounts.
//!
//! Every reserve, volume, impact and share in the crate is a [`Dec`]: a
//! 128-bit-coefficient decimal carrying 38 significant digits. Binary floats
//! are never used for amounts, so boundary comparisons such as
//! `impact == 0.9` behave exactly as written.

use std::fmt;

use fastnum::decimal::Context;
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

/// Decimal amount type used throughout the crate.
pub type Dec = fastnum::D128;

pub use fastnum::dec128 as dec;

/// Scale (decimal places) used when amounts are recorded in traces,
/// mirroring the 18-decimal base units of ERC-20 tokens.
pub const RECORD_SCALE: i16 = 18;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal {input:?}: {reason}")]
pub struct DecimalParseError {
    pub input: String,
    pub reason: String,
}

/// Parses a decimal literal (`"12.5"`, `"1e-7"`), rejecting NaN and infinities.
pub fn parse_dec(s: &str) -> Result<Dec, DecimalParseError> {
    let trimmed = s.trim();
    let value = Dec::from_str(trimmed, Context::default()).map_err(|e| DecimalParseError {
        input: s.to_string(),
        reason: e.to_string(),
    })?;
    if !value.is_finite() {
        return Err(DecimalParseError {
            input: s.to_string(),
            reason: "not a finite number".to_string(),
        });
    }
    Ok(value)
}

pub fn from_u64(v: u64) -> Dec {
    Dec::from(v)
}

/// Lossy conversion for reporting and random sampling only.
pub fn to_f64(d: Dec) -> f64 {
    d.to_f64()
}

/// Converts a float to the nearest decimal with at most `places` fractional digits.
///
/// Used to turn sampled parameters into exact decimals before they touch
/// pool state.
pub fn from_f64_rounded(v: f64, places: i16) -> Dec {
    Dec::from_f64(v).round(places).reduce()
}

/// Truncates toward zero at [`RECORD_SCALE`] decimal places.
pub fn quantize_down(d: Dec) -> Dec {
    d.trunc_with_scale(RECORD_SCALE).reduce()
}

/// `|a - b| / |b|`, or `|a|` when `b` is zero.
pub fn relative_error(a: Dec, b: Dec) -> Dec {
    let diff = (a - b).abs();
    if b.is_zero() {
        diff
    } else {
        diff / b.abs()
    }
}

/// Renders a decimal without exponent notation and without trailing zeros.
pub fn to_plain_string(d: Dec) -> String {
    let s = d.reduce().to_string();
    let Some(epos) = s.find(['E', 'e']) else {
        return s;
    };
    let (mantissa, exp) = s.split_at(epos);
    let exp: i64 = exp[1..].parse().expect("exponent is an integer");
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: String = format!("{int_part}{frac_part}");
    // Position of the decimal point relative to the start of `digits`.
    let point = int_part.len() as i64 + exp;
    let mut out = String::with_capacity(digits.len() + 8);
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        let (a, b) = digits.split_at(point as usize);
        out.push_str(a);
        out.push('.');
        out.push_str(b);
    }
    out
}

/// Serde adapter: writes decimals as plain strings, reads strings or JSON numbers.
pub mod serde_dec {
    use super::*;

    pub fn serialize<S: Serializer>(d: &Dec, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_plain_string(*d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Dec, D::Error> {
        d.deserialize_any(DecVisitor)
    }

    pub(crate) struct DecVisitor;

    impl Visitor<'_> for DecVisitor {
        type Value = Dec;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a decimal number or decimal string")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Dec, E> {
            parse_dec(v).map_err(E::custom)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
            Ok(Dec::from(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
            Ok(Dec::from(v))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Dec, E> {
            // Shortest round-trip representation, not the binary expansion.
            parse_dec(&v.to_string()).map_err(E::custom)
        }
    }
}

/// Same as [`serde_dec`] for `Option<Dec>`.
pub mod serde_dec_opt {
    use super::*;

    pub fn serialize<S: Serializer>(d: &Option<Dec>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(v) => s.serialize_some(&to_plain_string(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Dec>, D::Error> {
        struct OptVisitor;
        impl<'de> Visitor<'de> for OptVisitor {
            type Value = Option<Dec>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an optional decimal")
            }
            fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }
            fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }
            fn visit_some<D2: Deserializer<'de>>(self, d: D2) -> Result<Self::Value, D2::Error> {
                d.deserialize_any(serde_dec::DecVisitor).map(Some)
            }
        }
        d.deserialize_option(OptVisitor)
    }
}

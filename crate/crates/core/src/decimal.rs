//! Fixed-precision decimal numbers with six fractional digits.
//!
//! State variables are compared for equality when norm rewrites produce new
//! assignments, so the arithmetic has to be exact. Values are stored as an
//! integer count of millionths.

use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of fractional digits carried by every [`Decimal`].
pub const SCALE_DIGITS: u32 = 6;
const SCALE: i128 = 1_000_000;
// keeps products of two in-range values inside i128
const LIMIT: i128 = 1_000_000_000_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("invalid decimal literal '{0}'")]
    Syntax(String),
    #[error("'{0}' has more than {SCALE_DIGITS} fractional digits")]
    Precision(String),
    #[error("decimal overflow")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal(i128);

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);
    pub const ONE: Decimal = Decimal(SCALE);

    fn checked(raw: i128) -> Result<Self, DecimalError> {
        if raw.abs() > LIMIT {
            Err(DecimalError::Overflow)
        } else {
            Ok(Decimal(raw))
        }
    }

    pub fn from_int(v: i64) -> Self {
        Decimal(v as i128 * SCALE)
    }

    /// Builds `units / 10^6` exactly.
    pub fn from_micros(units: i128) -> Result<Self, DecimalError> {
        Self::checked(units)
    }

    pub fn micros(self) -> i128 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % SCALE == 0
    }

    pub fn to_i64(self) -> Option<i64> {
        if self.is_integer() {
            i64::try_from(self.0 / SCALE).ok()
        } else {
            None
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, DecimalError> {
        Self::checked(self.0.checked_add(rhs.0).ok_or(DecimalError::Overflow)?)
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, DecimalError> {
        Self::checked(self.0.checked_sub(rhs.0).ok_or(DecimalError::Overflow)?)
    }

    /// Product rounded half-to-even at the sixth fractional digit.
    pub fn checked_mul(self, rhs: Self) -> Result<Self, DecimalError> {
        let wide = self.0.checked_mul(rhs.0).ok_or(DecimalError::Overflow)?;
        let (q, r) = (wide.div_euclid(SCALE), wide.rem_euclid(SCALE));
        let twice = 2 * r;
        let rounded = if twice > SCALE || (twice == SCALE && q % 2 != 0) { q + 1 } else { q };
        Self::checked(rounded)
    }

    /// Converts a float by way of its shortest round-trip representation.
    pub fn from_f64(v: f64) -> Result<Self, DecimalError> {
        if !v.is_finite() {
            return Err(DecimalError::Syntax(v.to_string()));
        }
        v.to_string().parse()
    }
}

impl Neg for Decimal {
    type Output = Decimal;
    fn neg(self) -> Decimal {
        Decimal(-self.0)
    }
}

impl From<i64> for Decimal {
    fn from(v: i64) -> Self {
        Decimal::from_int(v)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let syntax = || DecimalError::Syntax(text.to_string());
        let s = text.trim();
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(at) => {
                let exp: i32 = s[at + 1..].parse().map_err(|_| syntax())?;
                (&s[..at], exp)
            }
            None => (s, 0),
        };
        let (negative, body) = match mantissa.as_bytes().first() {
            Some(b'-') => (true, &mantissa[1..]),
            Some(b'+') => (false, &mantissa[1..]),
            _ => (false, mantissa),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(syntax());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(syntax());
        }
        let mut digits: String = format!("{int_part}{frac_part}");
        let mut frac_len = frac_part.len() as i32 - exponent;
        // drop trailing zeros that sit beyond the supported scale
        while frac_len > SCALE_DIGITS as i32 && digits.ends_with('0') {
            digits.pop();
            frac_len -= 1;
        }
        if frac_len > SCALE_DIGITS as i32 {
            return Err(DecimalError::Precision(text.to_string()));
        }
        let pad = (SCALE_DIGITS as i32 - frac_len) as usize;
        let trimmed = digits.trim_start_matches('0');
        if trimmed.len() + pad > 36 {
            return Err(DecimalError::Overflow);
        }
        let mut raw: i128 = if trimmed.is_empty() { 0 } else { trimmed.parse().map_err(|_| DecimalError::Overflow)? };
        for _ in 0..pad {
            raw = raw.checked_mul(10).ok_or(DecimalError::Overflow)?;
        }
        Decimal::checked(if negative { -raw } else { raw })
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / SCALE as u128;
        let frac = abs % SCALE as u128;
        if frac == 0 {
            write!(f, "{sign}{int}")
        } else {
            let frac = format!("{frac:06}");
            write!(f, "{sign}{int}.{}", frac.trim_end_matches('0'))
        }
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.to_i64() {
            Some(i) => serializer.serialize_i64(i),
            None => serializer.serialize_f64(self.to_f64()),
        }
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let number = serde_json::Number::deserialize(deserializer)?;
        number.to_string().parse().map_err(serde::de::Error::custom)
    }
}

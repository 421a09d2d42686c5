//! Fixed-point decimal used for every numeric property value.
//!
//! Values are stored as signed micro-units so that equality, ordering and
//! hashing are exact and the rendered form never depends on float formatting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SCALE: i64 = 1_000_000;

/// Largest magnitude accepted, kept well inside the range where `f64`
/// still resolves single micro-units.
const MAX_ABS: f64 = 9.0e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal(i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a representable decimal: {0}")]
pub struct DecimalError(pub String);

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);
    pub const ONE: Decimal = Decimal(SCALE);

    pub const fn from_micros(micros: i64) -> Self {
        Decimal(micros)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    /// Rounds to the nearest micro-unit, half away from zero.
    pub fn from_f64(value: f64) -> Result<Self, DecimalError> {
        if !value.is_finite() || value.abs() > MAX_ABS {
            return Err(DecimalError(value.to_string()));
        }
        Ok(Decimal((value * SCALE as f64).round() as i64))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    /// Rounds to `places` fractional digits (0..=6), half away from zero.
    pub fn round_to(self, places: u32) -> Self {
        let places = places.min(6);
        let step = 10_i64.pow(6 - places);
        if step == 1 {
            return self;
        }
        let half = step / 2;
        let q = if self.0 >= 0 {
            (self.0 + half) / step
        } else {
            (self.0 - half) / step
        };
        Decimal(q * step)
    }
}

impl fmt::Display for Decimal {
    /// Plain decimal notation: no exponent, no trailing fractional zeros,
    /// no trailing point, and no negative zero.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.0 < 0;
        let abs = self.0.unsigned_abs();
        let int = abs / SCALE as u64;
        let frac = abs % SCALE as u64;
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&int.to_string());
        if frac != 0 {
            let digits = format!("{frac:06}");
            out.push('.');
            out.push_str(digits.trim_end_matches('0'));
        }
        f.write_str(&out)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    /// Parses plain decimal text exactly; inputs with an exponent or more than
    /// six fractional digits go through `f64` and are rounded.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || DecimalError(s.to_string());
        if t.is_empty() {
            return Err(err());
        }
        if t.contains(['e', 'E']) {
            return t.parse::<f64>().map_err(|_| err()).and_then(Decimal::from_f64);
        }
        let (neg, body) = match t.as_bytes()[0] {
            b'-' => (true, &t[1..]),
            b'+' => (false, &t[1..]),
            _ => (false, t),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        if frac_part.len() > 6 {
            return t.parse::<f64>().map_err(|_| err()).and_then(Decimal::from_f64);
        }
        let int: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let mut frac_digits = frac_part.to_string();
        while frac_digits.len() < 6 {
            frac_digits.push('0');
        }
        let frac: i64 = frac_digits.parse().map_err(|_| err())?;
        let micros = int
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(err)?;
        if micros as f64 > MAX_ABS * SCALE as f64 {
            return Err(err());
        }
        Ok(Decimal(if neg { -micros } else { micros }))
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        Decimal::from_f64(v).map_err(serde::de::Error::custom)
    }
}

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A quantity in nats (or nats per channel use).
///
/// `+inf` and `-inf` are legitimate states: an infeasible minimization is
/// worth `+inf`, and a log-likelihood over a zero of the channel is `-inf`.
/// NaN is never produced by this crate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Nats(pub f64);

impl Nats {
    pub const INFINITY: Nats = Nats(f64::INFINITY);
    pub const NEG_INFINITY: Nats = Nats(f64::NEG_INFINITY);
    pub const ZERO: Nats = Nats(0.0);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Convert to bits for display.
    pub fn to_bits_unit(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }
}

impl From<f64> for Nats {
    fn from(v: f64) -> Self {
        Nats(v)
    }
}

impl From<Nats> for f64 {
    fn from(v: Nats) -> Self {
        v.0
    }
}

/// Formats `±inf` as `+inf` / `-inf`; finite values use the shortest
/// round-trip representation.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Inverse of [`format_value`]; also accepts `inf`, `-inf` and `infinity`.
pub fn parse_value(s: &str) -> Result<f64> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "+inf" | "inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Parse { line: 0, msg: format!("not a number: {t:?}") })?;
            if v.is_nan() {
                return Err(Error::Parse { line: 0, msg: "NaN is not a valid value".into() });
            }
            Ok(v)
        }
    }
}

impl fmt::Display for Nats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            match f.precision() {
                Some(p) => write!(f, "{:.*}", p, self.0),
                None => write!(f, "{}", self.0),
            }
        } else {
            f.write_str(&format_value(self.0))
        }
    }
}

impl FromStr for Nats {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_value(s).map(Nats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinities_round_trip() {
        for v in [f64::INFINITY, f64::NEG_INFINITY, 0.0, -0.056, 1e-300] {
            let s = Nats(v).to_string();
            assert_eq!(s.parse::<Nats>().unwrap().0, v);
        }
        assert_eq!(Nats::INFINITY.to_string(), "+inf");
        assert!("nan".parse::<Nats>().is_err());
    }
}

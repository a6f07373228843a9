//! Time-of-day arithmetic on a periodic clock measured in minutes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Minutes in one day, the default period of every cost function.
pub const DAY: f64 = 1440.0;

/// Absolute tolerance used for every clock and travel-time comparison.
pub const EPS: f64 = 1e-9;

/// A time of day in minutes, always reduced into `[0, period)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clock(f64);

impl Clock {
    pub fn new(minutes: f64, period: f64) -> Self {
        let mut v = minutes.rem_euclid(period);
        // rem_euclid can round up to exactly `period` for tiny negative inputs
        if v >= period {
            v -= period;
        }
        Clock(v)
    }

    pub fn minutes(self) -> f64 {
        self.0
    }

    /// The clock after `delta` minutes have elapsed.
    pub fn advance(self, delta: f64, period: f64) -> Self {
        Clock::new(self.0 + delta, period)
    }

    /// Equality up to [`EPS`], treating `0` and `period` as the same instant.
    pub fn approx_eq(self, other: Clock, period: f64) -> bool {
        let d = (self.0 - other.0).abs();
        d <= EPS || (period - d).abs() <= EPS
    }

    /// Parses `HH:MM` (optionally `HH:MM:SS`) or a plain number of minutes.
    pub fn parse(text: &str, period: f64) -> Result<Self, Error> {
        let text = text.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse time `{text}`"));
        let minutes = if text.contains(':') {
            let parts: Vec<&str> = text.split(':').collect();
            if parts.len() > 3 {
                return Err(bad());
            }
            let mut total = 0.0;
            let scale = [60.0, 1.0, 1.0 / 60.0];
            for (part, s) in parts.iter().zip(scale) {
                let v: f64 = part.parse().map_err(|_| bad())?;
                total += v * s;
            }
            total
        } else {
            text.parse::<f64>().map_err(|_| bad())?
        };
        if !minutes.is_finite() {
            return Err(bad());
        }
        Ok(Clock::new(minutes, period))
    }
}

impl fmt::Display for Clock {
    /// Formats as `HH:MM`, with fractional minutes appended when present.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0.floor();
        let frac = self.0 - whole;
        let h = (whole / 60.0).floor() as u64;
        let m = (whole as u64) % 60;
        if frac.abs() < 1e-6 {
            write!(f, "{h:02}:{m:02}")
        } else {
            write!(f, "{h:02}:{:05.2}", m as f64 + frac)
        }
    }
}

impl FromStr for Clock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Clock::parse(s, DAY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_modulo_period() {
        assert_eq!(Clock::new(1450.0, DAY).minutes(), 10.0);
        assert_eq!(Clock::new(-30.0, DAY).minutes(), 1410.0);
        assert_eq!(Clock::new(1430.0, DAY).advance(30.0, DAY).minutes(), 20.0);
        let tiny = Clock::new(-1e-18, DAY);
        assert!(tiny.minutes() < DAY);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(Clock::parse("18:00", DAY).unwrap().minutes(), 1080.0);
        assert_eq!(Clock::parse("23:50", DAY).unwrap().minutes(), 1430.0);
        assert_eq!(Clock::parse("615", DAY).unwrap().minutes(), 615.0);
        assert_eq!(Clock::new(1086.0, DAY).to_string(), "18:06");
        assert_eq!(Clock::new(20.0, DAY).to_string(), "00:20");
        assert!(Clock::parse("ab:cd", DAY).is_err());
        assert!(Clock::parse("1:2:3:4", DAY).is_err());
    }

    #[test]
    fn approx_eq_wraps() {
        assert!(Clock::new(0.0, DAY).approx_eq(Clock::new(DAY - 1e-12, DAY), DAY));
        assert!(!Clock::new(0.0, DAY).approx_eq(Clock::new(1.0, DAY), DAY));
    }
}

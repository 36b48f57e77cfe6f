//! Observation dates at year or month precision.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid date `{input}`: {reason}")]
pub struct DateError {
    pub input: String,
    pub reason: &'static str,
}

/// A calendar date truncated to year (`YYYY`) or month (`YYYY-MM`).
///
/// Ordering is chronological by start of period; a year sorts before the
/// months inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObsDate {
    year: i32,
    month: Option<u8>,
}

impl ObsDate {
    pub fn year(year: i32) -> Self {
        ObsDate { year, month: None }
    }

    pub fn month(year: i32, month: u8) -> Result<Self, DateError> {
        if !(1..=12).contains(&month) {
            return Err(DateError {
                input: format!("{year:04}-{month:02}"),
                reason: "month out of range",
            });
        }
        Ok(ObsDate {
            year,
            month: Some(month),
        })
    }

    pub fn year_value(&self) -> i32 {
        self.year
    }

    pub fn month_value(&self) -> Option<u8> {
        self.month
    }

    pub fn is_monthly(&self) -> bool {
        self.month.is_some()
    }

    fn first_month(&self) -> (i32, u8) {
        (self.year, self.month.unwrap_or(1))
    }

    fn last_month(&self) -> (i32, u8) {
        (self.year, self.month.unwrap_or(12))
    }

    /// True when the whole period of `self` lies inside `[from, to]`.
    pub fn within(&self, from: &ObsDate, to: &ObsDate) -> bool {
        self.first_month() >= from.first_month() && self.last_month() <= to.last_month()
    }
}

impl Ord for ObsDate {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.year, self.month.unwrap_or(0)).cmp(&(other.year, other.month.unwrap_or(0)))
    }
}

impl PartialOrd for ObsDate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ObsDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.month {
            Some(m) => write!(f, "{:04}-{:02}", self.year, m),
            None => write!(f, "{:04}", self.year),
        }
    }
}

fn parse_digits(s: &str, input: &str) -> Result<u32, DateError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(DateError {
            input: input.to_string(),
            reason: "expected digits",
        });
    }
    s.parse().map_err(|_| DateError {
        input: input.to_string(),
        reason: "number out of range",
    })
}

impl FromStr for ObsDate {
    type Err = DateError;

    /// Accepts exactly `YYYY` or `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, m) = match s.split_once('-') {
            Some((y, m)) => (y, Some(m)),
            None => (s, None),
        };
        if y.len() != 4 {
            return Err(DateError {
                input: s.to_string(),
                reason: "year must have four digits",
            });
        }
        let year = parse_digits(y, s)? as i32;
        match m {
            None => Ok(ObsDate::year(year)),
            Some(m) if m.len() == 2 => {
                let month = parse_digits(m, s)? as u8;
                ObsDate::month(year, month).map_err(|e| DateError {
                    input: s.to_string(),
                    reason: e.reason,
                })
            }
            Some(_) => Err(DateError {
                input: s.to_string(),
                reason: "month must have two digits",
            }),
        }
    }
}

impl Serialize for ObsDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ObsDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

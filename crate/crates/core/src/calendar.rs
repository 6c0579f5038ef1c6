//! Calendar arithmetic for training slices and aggregation buckets.
//!
//! Training slices are always whole years (the chain evolves on a yearly
//! grid); aggregation buckets are quarters or months and can be chosen
//! independently at aggregation time.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Granularity used when averaging classified documents over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BucketCalendar {
    Quarter,
    Month,
}

impl FromStr for BucketCalendar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quarter" | "quarterly" => Ok(BucketCalendar::Quarter),
            "month" | "monthly" => Ok(BucketCalendar::Month),
            other => Err(Error::InvalidParameter(format!(
                "unknown bucket calendar `{other}` (expected quarter|month)"
            ))),
        }
    }
}

/// One aggregation period. Orders chronologically; quarters and months never
/// mix within a single series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    /// Calendar quarter, `q` in 1..=4.
    Quarter { year: i32, q: u8 },
    /// Calendar month, `m` in 1..=12.
    Month { year: i32, m: u8 },
}

impl Bucket {
    pub fn of(date: NaiveDate, calendar: BucketCalendar) -> Bucket {
        match calendar {
            BucketCalendar::Quarter => Bucket::Quarter {
                year: date.year(),
                q: ((date.month0() / 3) + 1) as u8,
            },
            BucketCalendar::Month => Bucket::Month {
                year: date.year(),
                m: date.month() as u8,
            },
        }
    }

    /// The immediately following bucket in the same calendar.
    pub fn next(self) -> Bucket {
        match self {
            Bucket::Quarter { year, q } if q == 4 => Bucket::Quarter { year: year + 1, q: 1 },
            Bucket::Quarter { year, q } => Bucket::Quarter { year, q: q + 1 },
            Bucket::Month { year, m } if m == 12 => Bucket::Month { year: year + 1, m: 1 },
            Bucket::Month { year, m } => Bucket::Month { year, m: m + 1 },
        }
    }

    pub fn calendar(self) -> BucketCalendar {
        match self {
            Bucket::Quarter { .. } => BucketCalendar::Quarter,
            Bucket::Month { .. } => BucketCalendar::Month,
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bucket::Quarter { year, q } => write!(f, "{year}Q{q}"),
            Bucket::Month { year, m } => write!(f, "{year}-{m:02}"),
        }
    }
}

impl FromStr for Bucket {
    type Err = Error;

    /// Parses `2006Q2` or `2006-05`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse bucket id `{s}`"));
        if let Some((y, q)) = s.split_once(['Q', 'q']) {
            let year: i32 = y.parse().map_err(|_| bad())?;
            let q: u8 = q.parse().map_err(|_| bad())?;
            if !(1..=4).contains(&q) {
                return Err(bad());
            }
            Ok(Bucket::Quarter { year, q })
        } else if let Some((y, m)) = s.split_once('-') {
            let year: i32 = y.parse().map_err(|_| bad())?;
            let m: u8 = m.parse().map_err(|_| bad())?;
            if !(1..=12).contains(&m) {
                return Err(bad());
            }
            Ok(Bucket::Month { year, m })
        } else {
            Err(bad())
        }
    }
}

/// Yearly slice grid covering `first_year..=last_year`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCalendar {
    pub first_year: i32,
    pub last_year: i32,
}

impl SliceCalendar {
    pub fn new(first_year: i32, last_year: i32) -> Result<Self> {
        if last_year < first_year {
            return Err(Error::InvalidParameter(format!(
                "slice calendar range {first_year}..{last_year} is empty"
            )));
        }
        Ok(SliceCalendar {
            first_year,
            last_year,
        })
    }

    /// Number of slices T.
    pub fn len(&self) -> usize {
        (self.last_year - self.first_year + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Slice index for a date, if it falls inside the grid.
    pub fn slice_of(&self, date: NaiveDate) -> Option<usize> {
        let y = date.year();
        if y < self.first_year || y > self.last_year {
            return None;
        }
        Some((y - self.first_year) as usize)
    }

    pub fn year_of_slice(&self, slice: usize) -> i32 {
        self.first_year + slice as i32
    }
}

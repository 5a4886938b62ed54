//! Monthly indicator panels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const EXCHANGE_RATE: &str = "exchange_rate";
pub const INTEREST_RATE: &str = "interest_rate";
pub const INTL_RESERVES: &str = "intl_reserves";
pub const REAL_DOMESTIC_CREDIT: &str = "real_domestic_credit";
pub const INFLATION: &str = "inflation";
pub const OIL_PRICE: &str = "oil_price";
pub const EQUITY_INDEX: &str = "equity_index";

/// Raw series in CSV column order.
pub const RAW_SERIES: [&str; 7] = [
    EXCHANGE_RATE,
    INTEREST_RATE,
    INTL_RESERVES,
    REAL_DOMESTIC_CREDIT,
    INFLATION,
    OIL_PRICE,
    EQUITY_INDEX,
];

/// Series that enter as percentage changes and must stay strictly positive.
pub const POSITIVE_SERIES: [&str; 5] = [
    EXCHANGE_RATE,
    INTL_RESERVES,
    REAL_DOMESTIC_CREDIT,
    OIL_PRICE,
    EQUITY_INDEX,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) || !(0..=9999).contains(&year) {
            return Err(Error::InvalidParameter(format!("invalid month {year}-{month}")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn next(&self) -> Self {
        if self.month == 12 {
            YearMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            YearMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    pub fn succession(start: YearMonth, count: usize) -> Vec<YearMonth> {
        std::iter::successors(Some(start), |m| Some(m.next()))
            .take(count)
            .collect()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("expected YYYY-MM, got '{s}'"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorPanel {
    dates: Vec<YearMonth>,
    series: BTreeMap<String, Vec<f64>>,
}

impl IndicatorPanel {
    /// Validates consecutive months, equal lengths (at least 3), finite values,
    /// and positivity of the series in [`POSITIVE_SERIES`].
    pub fn new(dates: Vec<YearMonth>, series: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if dates.len() < 3 {
            return Err(Error::InvalidPanel(format!(
                "need at least 3 months, got {}",
                dates.len()
            )));
        }
        for (i, w) in dates.windows(2).enumerate() {
            if w[1] != w[0].next() {
                return Err(Error::NonConsecutiveMonths {
                    row: i + 1,
                    previous: w[0].to_string(),
                    current: w[1].to_string(),
                });
            }
        }
        for (name, values) in &series {
            if values.len() != dates.len() {
                return Err(Error::InvalidPanel(format!(
                    "series '{name}' has {} values for {} months",
                    values.len(),
                    dates.len()
                )));
            }
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidPanel(format!("non-finite {name} at {}", dates[i])));
            }
            if POSITIVE_SERIES.contains(&name.as_str()) {
                if let Some(i) = values.iter().position(|&v| v <= 0.0) {
                    return Err(Error::InvalidPanel(format!(
                        "{name} must be strictly positive, got {} at {}",
                        values[i], dates[i]
                    )));
                }
            }
        }
        Ok(IndicatorPanel { dates, series })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    pub fn series(&self, name: &str) -> Result<&[f64]> {
        self.series
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingSeries(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }
}

//! Calendar helpers on Unix timestamps (UTC seconds).

use chrono::{DateTime, Datelike, Months, Timelike};

use crate::{Error, Result};

fn datetime(ts: i64) -> Result<DateTime<chrono::Utc>> {
    DateTime::from_timestamp(ts, 0).ok_or_else(|| Error::invalid(alloc::format!("timestamp {ts} out of range")))
}

/// `12 · year + month0`, a monotone month counter.
pub fn month_index(ts: i64) -> Result<i64> {
    let d = datetime(ts)?;
    Ok(12 * i64::from(d.year()) + i64::from(d.month0()))
}

/// Timestamp `months` calendar months after `ts` (day clamped to month end).
pub fn add_months(ts: i64, months: u32) -> Result<i64> {
    datetime(ts)?
        .checked_add_months(Months::new(months))
        .map(|d| d.timestamp())
        .ok_or_else(|| Error::invalid("month arithmetic overflow"))
}

/// Fractional day of the year in `[0, 366)`.
pub fn day_of_year(ts: i64) -> Result<f64> {
    let d = datetime(ts)?;
    Ok(f64::from(d.ordinal0()) + f64::from(d.num_seconds_from_midnight()) / 86_400.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_arithmetic() {
        let jan = 1_577_836_800; // 2020-01-01
        assert_eq!(month_index(jan).unwrap(), 12 * 2020);
        let later = add_months(jan, 24).unwrap();
        assert_eq!(later, 1_640_995_200); // 2022-01-01
        assert_eq!(month_index(later).unwrap() - month_index(jan).unwrap(), 24);
        assert_eq!(day_of_year(jan + 43_200).unwrap(), 0.5);
    }
}

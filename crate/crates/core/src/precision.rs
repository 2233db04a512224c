//! Precision specifications and the truncation grid shared by every date type.
//!
//! All instants are UTC with microsecond resolution. A [`PrecisionSpec`] names a
//! single calendar unit and a count; [`truncate`] snaps an instant down to the
//! largest grid point not after it. Sub-day grids are anchored at the
//! timestamp's own midnight, weeks at the ISO Monday, months at the first of a
//! month whose zero-based index is a multiple of the count, and years at
//! January 1 of a year that is a multiple of the count.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveTime, TimeZone, Timelike, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const MICROS_PER_SECOND: u32 = 1_000_000;

/// A UTC instant with microsecond resolution.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    /// Wraps a chrono instant, rejecting sub-microsecond precision.
    pub fn from_datetime(dt: DateTime<Utc>) -> Result<Self> {
        if !dt.timestamp_subsec_nanos().is_multiple_of(1_000) {
            return Err(Error::ParseTimestamp(dt.to_rfc3339()));
        }
        Ok(Timestamp(dt))
    }

    /// Wraps a chrono instant, dropping anything below a microsecond.
    pub fn from_datetime_lossy(dt: DateTime<Utc>) -> Self {
        let micros = dt.timestamp_subsec_micros();
        Timestamp(dt.with_nanosecond(micros * 1_000).unwrap_or(dt))
    }

    pub fn from_unix_micros(micros: i64) -> Option<Self> {
        DateTime::from_timestamp_micros(micros).map(Timestamp)
    }

    pub fn unix_micros(&self) -> i64 {
        self.0.timestamp_micros()
    }

    pub fn as_datetime(&self) -> DateTime<Utc> {
        self.0
    }

    /// Microseconds below the whole second, in `[0, 999999]`.
    pub fn subsec_micros(&self) -> u32 {
        // Leap-second representations are never produced by this crate.
        self.0.timestamp_subsec_micros() % MICROS_PER_SECOND
    }

    /// Same instant with the sub-second part replaced; `None` if `micros` is out of range.
    pub fn with_subsec_micros(&self, micros: u32) -> Option<Self> {
        if micros >= MICROS_PER_SECOND {
            return None;
        }
        self.0.with_nanosecond(micros * 1_000).map(Timestamp)
    }

    pub fn checked_add(&self, offset: Duration) -> Option<Self> {
        let secs = i64::try_from(offset.as_secs()).ok()?;
        let delta = chrono::TimeDelta::try_seconds(secs)?;
        self.0.checked_add_signed(delta).map(Timestamp)
    }

    fn from_parts(date: NaiveDate, secs_of_day: u32) -> Self {
        let time = NaiveTime::from_num_seconds_from_midnight_opt(secs_of_day, 0)
            .expect("seconds of day below 86400");
        Timestamp(Utc.from_utc_datetime(&date.and_time(time)))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%dT%H:%M:%S%.6fZ"))
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    /// Accepts any RFC 3339 instant; offsets are normalized to UTC.
    fn from_str(s: &str) -> Result<Self> {
        let parsed = DateTime::parse_from_rfc3339(s.trim())
            .map_err(|_| Error::ParseTimestamp(s.to_string()))?;
        Timestamp::from_datetime(parsed.with_timezone(&Utc))
            .map_err(|_| Error::ParseTimestamp(s.to_string()))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fixed span of whole seconds. Reduction offsets are always fixed
/// durations, never calendar amounts.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Duration(u64);

impl Duration {
    pub const ZERO: Duration = Duration(0);

    pub const fn from_secs(secs: u64) -> Self {
        Duration(secs)
    }

    pub const fn from_minutes(minutes: u64) -> Self {
        Duration(minutes * 60)
    }

    pub const fn from_hours(hours: u64) -> Self {
        Duration(hours * 3_600)
    }

    pub const fn from_days(days: u64) -> Self {
        Duration(days * 86_400)
    }

    pub const fn as_secs(&self) -> u64 {
        self.0
    }
}

impl fmt::Debug for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    Second,
    Minute,
    Hour,
    Day,
    Week,
    Month,
    Year,
}

impl Unit {
    pub const ALL: [Unit; 7] = [
        Unit::Second,
        Unit::Minute,
        Unit::Hour,
        Unit::Day,
        Unit::Week,
        Unit::Month,
        Unit::Year,
    ];

    pub fn symbol(self) -> char {
        match self {
            Unit::Second => 's',
            Unit::Minute => 'm',
            Unit::Hour => 'h',
            Unit::Day => 'd',
            Unit::Week => 'w',
            Unit::Month => 'M',
            Unit::Year => 'y',
        }
    }

    pub fn from_symbol(symbol: char) -> Option<Unit> {
        Unit::ALL.into_iter().find(|u| u.symbol() == symbol)
    }

    /// Nominal length in seconds. Months count as 30 days, years as 365.
    pub fn nominal_secs(self) -> u64 {
        match self {
            Unit::Second => 1,
            Unit::Minute => 60,
            Unit::Hour => 3_600,
            Unit::Day => 86_400,
            Unit::Week => 604_800,
            Unit::Month => 2_592_000,
            Unit::Year => 31_536_000,
        }
    }

    /// How many of this unit fill the enclosing unit, with the enclosing unit
    /// it rolls over into.
    fn capacity(self) -> Option<(u32, Unit)> {
        match self {
            Unit::Second => Some((60, Unit::Minute)),
            Unit::Minute => Some((60, Unit::Hour)),
            Unit::Hour => Some((24, Unit::Day)),
            Unit::Month => Some((12, Unit::Year)),
            Unit::Day | Unit::Week | Unit::Year => None,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Unit::Second => "second",
            Unit::Minute => "minute",
            Unit::Hour => "hour",
            Unit::Day => "day",
            Unit::Week => "week",
            Unit::Month => "month",
            Unit::Year => "year",
        };
        f.write_str(name)
    }
}

/// A single-unit precision such as 5 seconds, 1 hour or 1 month.
///
/// The count must tile the enclosing unit exactly (seconds and minutes divide
/// 60, hours divide 24, months divide 12); days and weeks only allow a single
/// unit. A count equal to the full capacity is normalized to one of the enclosing
/// unit, so `60 minutes` and `1 hour` are the same spec.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionSpec {
    unit: Unit,
    count: u32,
}

impl PrecisionSpec {
    pub fn new(unit: Unit, count: u32) -> Result<Self> {
        let invalid = Error::InvalidCount { unit, count };
        if count == 0 {
            return Err(invalid);
        }
        match unit.capacity() {
            Some((capacity, _)) if capacity % count != 0 => Err(invalid),
            Some((capacity, parent)) if capacity == count => Ok(PrecisionSpec {
                unit: parent,
                count: 1,
            }),
            Some(_) => Ok(PrecisionSpec { unit, count }),
            None if matches!(unit, Unit::Day | Unit::Week) && count != 1 => Err(invalid),
            None => Ok(PrecisionSpec { unit, count }),
        }
    }

    pub fn seconds(count: u32) -> Result<Self> {
        Self::new(Unit::Second, count)
    }

    pub fn minutes(count: u32) -> Result<Self> {
        Self::new(Unit::Minute, count)
    }

    pub fn hours(count: u32) -> Result<Self> {
        Self::new(Unit::Hour, count)
    }

    pub fn days(count: u32) -> Result<Self> {
        Self::new(Unit::Day, count)
    }

    pub fn weeks(count: u32) -> Result<Self> {
        Self::new(Unit::Week, count)
    }

    pub fn months(count: u32) -> Result<Self> {
        Self::new(Unit::Month, count)
    }

    pub fn years(count: u32) -> Result<Self> {
        Self::new(Unit::Year, count)
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn nominal_duration(&self) -> Duration {
        Duration(self.unit.nominal_secs() * u64::from(self.count))
    }

    pub fn truncate(&self, t: Timestamp) -> Timestamp {
        truncate(t, *self)
    }
}

/// Largest grid point of `p` that is not after `t`.
pub fn truncate(t: Timestamp, p: PrecisionSpec) -> Timestamp {
    let dt = t.0;
    let date = dt.date_naive();
    let count = p.count;
    match p.unit {
        Unit::Second | Unit::Minute | Unit::Hour => {
            let step = p.unit.nominal_secs() as u32 * count;
            let secs = dt.num_seconds_from_midnight();
            Timestamp::from_parts(date, secs - secs % step)
        }
        Unit::Day => Timestamp::from_parts(date, 0),
        Unit::Week => {
            let back = u64::from(date.weekday().num_days_from_monday());
            let monday = date
                .checked_sub_days(chrono::Days::new(back))
                .expect("ISO Monday within chrono range");
            Timestamp::from_parts(monday, 0)
        }
        Unit::Month => {
            let month0 = date.month0();
            let month = month0 - month0 % count + 1;
            let first = NaiveDate::from_ymd_opt(date.year(), month, 1).expect("valid month start");
            Timestamp::from_parts(first, 0)
        }
        Unit::Year => {
            let year = date.year() - date.year().rem_euclid(count as i32);
            let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("year within chrono range");
            Timestamp::from_parts(first, 0)
        }
    }
}

pub fn nominal_duration(p: PrecisionSpec) -> Duration {
    p.nominal_duration()
}

impl fmt::Display for PrecisionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.count, self.unit.symbol())
    }
}

impl fmt::Debug for PrecisionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PrecisionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParsePrecision(s.to_string());
        let symbol = s.chars().last().ok_or_else(bad)?;
        let unit = Unit::from_symbol(symbol).ok_or_else(bad)?;
        let digits = &s[..s.len() - symbol.len_utf8()];
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let count: u32 = digits.parse().map_err(|_| bad())?;
        PrecisionSpec::new(unit, count)
    }
}

impl Serialize for PrecisionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PrecisionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

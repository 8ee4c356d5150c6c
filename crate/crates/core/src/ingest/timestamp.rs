use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, NaiveTime};

const ISO_FORMATS: [&str; 2] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"];

/// Writes timestamps as `YYYY-MM-DDTHH:MM:SS[.fff]`, which the parser reads back exactly.
pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S%.f").to_string()
}

#[derive(Debug, PartialEq)]
pub(crate) enum TimestampError {
    /// The value is not a recognizable timestamp; the row is rejected.
    Malformed(String),
    /// A clock-only value appeared and no session date was configured.
    NeedsDate(String),
}

/// Stateful parser for one log file.
///
/// Accepts ISO-8601 date-times (offsets are normalized to UTC) and clock-only
/// `HH:MM:SS` values. Clock-only values are anchored on the session date; a
/// backwards jump of more than twelve hours is read as midnight rollover and
/// advances the date by one day.
#[derive(Debug, Clone)]
pub struct TimestampParser {
    session_date: Option<NaiveDate>,
    days_elapsed: i64,
    last_clock: Option<NaiveTime>,
}

impl TimestampParser {
    pub fn new(session_date: Option<NaiveDate>) -> Self {
        Self {
            session_date,
            days_elapsed: 0,
            last_clock: None,
        }
    }

    pub(crate) fn parse(&mut self, raw: &str) -> Result<NaiveDateTime, TimestampError> {
        let raw = raw.trim();
        if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
            return Ok(ts.naive_utc());
        }
        for fmt in ISO_FORMATS {
            if let Ok(ts) = NaiveDateTime::parse_from_str(raw, fmt) {
                return Ok(ts);
            }
        }
        let clock = NaiveTime::parse_from_str(raw, "%H:%M:%S%.f")
            .map_err(|_| TimestampError::Malformed(raw.to_string()))?;
        let date = self
            .session_date
            .ok_or_else(|| TimestampError::NeedsDate(raw.to_string()))?;
        if let Some(prev) = self.last_clock {
            if prev - clock > Duration::hours(12) {
                self.days_elapsed += 1;
            }
        }
        self.last_clock = Some(clock);
        Ok(date.and_time(clock) + Duration::days(self.days_elapsed))
    }
}

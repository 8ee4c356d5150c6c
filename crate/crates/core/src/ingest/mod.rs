//! Channel-metric and player logs: parsing, timestamp alignment and labeling.
//!
//! A channel log carries one radio measurement per second (RSRP, RSRQ, SNR).
//! A player log carries the playback quality at roughly the same cadence.
//! [`align`] joins the two on the nearest timestamp and every joined row is
//! tagged with the ordinal [`Resolution`] and its binary [`Class`].

mod align;
mod dataset;
mod parse;
mod timestamp;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

pub use align::{align, AlignReport, DEFAULT_TOLERANCE_MS};
pub use dataset::{build_dataset, read_dataset_csv, write_dataset_csv, Dataset, DatasetSummary, Provenance};
pub use parse::{
    parse_channel_log, parse_qoe_log, ChannelLineParser, ChannelSchema, ParseReport, QoeSchema, Rejection,
};
pub use timestamp::{format_timestamp, TimestampParser};

/// Sanity range for RSRP in dBm.
pub const RSRP_BOUNDS: (f64, f64) = (-160.0, -40.0);
/// Sanity range for RSRQ in dB.
pub const RSRQ_BOUNDS: (f64, f64) = (-30.0, 0.0);
/// Sanity range for SNR in dB.
pub const SNR_BOUNDS: (f64, f64) = (-20.0, 50.0);

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{log} log is missing column `{column}` (header: {header})")]
    MissingColumn {
        log: &'static str,
        column: String,
        header: String,
    },
    #[error("clock-only timestamp `{0}` needs a session date")]
    MissingSessionDate(String),
    #[error("{log} log is not sorted by timestamp at position {position}")]
    Unsorted { log: &'static str, position: usize },
    #[error("cannot build a dataset from zero records")]
    EmptyDataset,
    #[error("dataset row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary playback class. `High` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Low = 0,
    High = 1,
}

impl Class {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Class::Low),
            1 => Some(Class::High),
            _ => None,
        }
    }

    /// 1.0 for `High`, 0.0 for `Low`.
    pub fn target(self) -> f64 {
        f64::from(self.code())
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Low => "Low",
            Class::High => "High",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Playback resolution, ordered by pixel height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resolution {
    P144 = 1,
    P240 = 2,
    P360 = 3,
    P480 = 4,
    P720 = 5,
    P1080 = 6,
    P1440 = 7,
    P2160 = 8,
}

impl Resolution {
    pub const ALL: [Resolution; 8] = [
        Resolution::P144,
        Resolution::P240,
        Resolution::P360,
        Resolution::P480,
        Resolution::P720,
        Resolution::P1080,
        Resolution::P1440,
        Resolution::P2160,
    ];

    /// Ordinal code, 1 (144p) through 8 (2160p).
    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn from_ordinal(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code).checked_sub(1)?).copied()
    }

    pub fn height(self) -> u32 {
        match self {
            Resolution::P144 => 144,
            Resolution::P240 => 240,
            Resolution::P360 => 360,
            Resolution::P480 => 480,
            Resolution::P720 => 720,
            Resolution::P1080 => 1080,
            Resolution::P1440 => 1440,
            Resolution::P2160 => 2160,
        }
    }

    pub fn class(self) -> Class {
        label(self)
    }

    /// Canonical label as written to dataset files, e.g. `"1080p"`.
    pub fn label(self) -> String {
        format!("{}p", self.height())
    }

    /// Accepts player-style names (`hd2160`, `large`, `tiny`, ...) and plain
    /// heights (`720p`, `720`). Case and surrounding whitespace are ignored.
    pub fn from_label(raw: &str) -> Option<Self> {
        let label = raw.trim().to_ascii_lowercase();
        let res = match label.as_str() {
            "tiny" => Resolution::P144,
            "small" => Resolution::P240,
            "medium" => Resolution::P360,
            "large" => Resolution::P480,
            "hd720" => Resolution::P720,
            "hd1080" => Resolution::P1080,
            "hd1440" => Resolution::P1440,
            "hd2160" => Resolution::P2160,
            other => {
                let digits = other.strip_suffix('p').unwrap_or(other);
                let height: u32 = digits.parse().ok()?;
                return Self::ALL.into_iter().find(|r| r.height() == height);
            }
        };
        Some(res)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}p", self.height())
    }
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_label(s).ok_or_else(|| format!("unknown quality label `{s}`"))
    }
}

/// Low for 144p..480p, High for 720p and above.
pub fn label(resolution: Resolution) -> Class {
    if resolution.ordinal() >= Resolution::P720.ordinal() {
        Class::High
    } else {
        Class::Low
    }
}

/// One radio measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub timestamp: NaiveDateTime,
    /// dBm
    pub rsrp: f64,
    /// dB
    pub rsrq: f64,
    /// dB
    pub snr: f64,
}

impl ChannelSample {
    /// Checks the sanity bounds; returns the first violated metric.
    pub fn check_bounds(rsrp: f64, rsrq: f64, snr: f64) -> Result<(), String> {
        for (name, value, (lo, hi)) in [
            ("rsrp", rsrp, RSRP_BOUNDS),
            ("rsrq", rsrq, RSRQ_BOUNDS),
            ("snr", snr, SNR_BOUNDS),
        ] {
            if !value.is_finite() || value < lo || value > hi {
                return Err(format!("{name} {value} outside [{lo}, {hi}]"));
            }
        }
        Ok(())
    }
}

/// One player-side observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoeSample {
    pub timestamp: NaiveDateTime,
    pub quality: Resolution,
    /// Absent when the log has no bytes column.
    pub video_bytes: Option<u64>,
    /// Percent in [0, 100]; absent when the log has no such column.
    pub loaded_pct: Option<f64>,
}

/// A channel sample joined with the playback resolution at that instant.
///
/// The binary class is always derived from `resolution`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub timestamp: NaiveDateTime,
    pub rsrp: f64,
    pub rsrq: f64,
    pub snr: f64,
    pub resolution: Resolution,
}

impl LabeledRecord {
    pub fn class(&self) -> Class {
        self.resolution.class()
    }

    /// Feature triple in the fixed column order rsrp, rsrq, snr.
    pub fn features(&self) -> [f64; 3] {
        [self.rsrp, self.rsrq, self.snr]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_labels_follow_hd_boundary() {
        assert_eq!(label(Resolution::P480), Class::Low);
        assert_eq!(label(Resolution::P720), Class::High);
        assert_eq!(label(Resolution::P2160), Class::High);
        for r in Resolution::ALL {
            assert_eq!(label(r) == Class::High, r.ordinal() >= 5);
        }
    }

    #[test]
    fn ordinal_order_matches_height_order() {
        for pair in Resolution::ALL.windows(2) {
            assert!(pair[0] < pair[1]);
            assert!(pair[0].height() < pair[1].height());
            assert_eq!(pair[0].ordinal() + 1, pair[1].ordinal());
        }
        for r in Resolution::ALL {
            assert_eq!(Resolution::from_ordinal(r.ordinal()), Some(r));
        }
        assert_eq!(Resolution::from_ordinal(0), None);
        assert_eq!(Resolution::from_ordinal(9), None);
    }

    #[test]
    fn player_and_plain_labels() {
        assert_eq!(Resolution::from_label("hd2160"), Some(Resolution::P2160));
        assert_eq!(Resolution::from_label("hd1440"), Some(Resolution::P1440));
        assert_eq!(Resolution::from_label("large"), Some(Resolution::P480));
        assert_eq!(Resolution::from_label("  Tiny "), Some(Resolution::P144));
        assert_eq!(Resolution::from_label("720p"), Some(Resolution::P720));
        assert_eq!(Resolution::from_label("1080"), Some(Resolution::P1080));
        assert_eq!(Resolution::from_label("premium"), None);
        assert_eq!(Resolution::from_label("244p"), None);
        for r in Resolution::ALL {
            assert_eq!(Resolution::from_label(&r.label()), Some(r));
        }
    }

    #[test]
    fn bounds_reject_corrupt_metrics() {
        assert!(ChannelSample::check_bounds(-105.0, -13.0, 3.0).is_ok());
        assert!(ChannelSample::check_bounds(-999.0, -13.0, 3.0).is_err());
        assert!(ChannelSample::check_bounds(-105.0, 1.0, 3.0).is_err());
        assert!(ChannelSample::check_bounds(-105.0, -13.0, f64::NAN).is_err());
    }
}

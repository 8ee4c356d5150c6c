use std::io::Read;

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord};
use serde::{Deserialize, Serialize};

use super::timestamp::{TimestampError, TimestampParser};
use super::{ChannelSample, IngestError, QoeSample, Resolution};

/// Column names for a channel log. Each entry lists accepted header names;
/// matching ignores case and any non-alphanumeric characters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSchema {
    pub timestamp: Vec<String>,
    pub rsrp: Vec<String>,
    pub rsrq: Vec<String>,
    pub snr: Vec<String>,
    /// Date used to anchor clock-only `HH:MM:SS` timestamps.
    pub session_date: Option<NaiveDate>,
}

impl Default for ChannelSchema {
    fn default() -> Self {
        Self {
            timestamp: names(&["timestamp", "time"]),
            rsrp: names(&["rsrp"]),
            rsrq: names(&["rsrq"]),
            snr: names(&["snr", "sinr"]),
            session_date: None,
        }
    }
}

/// Column names for a player log. Bytes and loaded-percent are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoeSchema {
    pub timestamp: Vec<String>,
    pub quality: Vec<String>,
    pub video_bytes: Vec<String>,
    pub loaded_pct: Vec<String>,
    pub session_date: Option<NaiveDate>,
}

impl Default for QoeSchema {
    fn default() -> Self {
        Self {
            timestamp: names(&["timestamp", "time"]),
            quality: names(&["quality", "resolution"]),
            video_bytes: names(&["video_bytes", "video_bytes_downloaded", "bytes"]),
            loaded_pct: names(&["loaded_pct", "loaded_percentage", "loaded"]),
            session_date: None,
        }
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line in the source file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub log: String,
    pub rows_read: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub rejections: Vec<Rejection>,
    pub warnings: Vec<String>,
}

impl ParseReport {
    fn new(log: &str) -> Self {
        Self {
            log: log.to_string(),
            ..Default::default()
        }
    }

    fn reject(&mut self, line: u64, reason: impl Into<String>) {
        self.rejected += 1;
        self.rejections.push(Rejection {
            line,
            reason: reason.into(),
        });
    }

    fn finish(&mut self) {
        if self.rows_read == 0 {
            self.warnings.push(format!("{} log has no data rows", self.log));
        }
    }
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn find_column(header: &StringRecord, accepted: &[String]) -> Option<usize> {
    let wanted: Vec<String> = accepted.iter().map(|n| normalize(n)).collect();
    header
        .iter()
        .position(|h| wanted.iter().any(|w| *w == normalize(h)))
}

fn require_column(
    log: &'static str,
    header: &StringRecord,
    accepted: &[String],
) -> Result<usize, IngestError> {
    find_column(header, accepted).ok_or_else(|| IngestError::MissingColumn {
        log,
        column: accepted.join("|"),
        header: header.iter().collect::<Vec<_>>().join(","),
    })
}

fn field<'r>(record: &'r StringRecord, idx: usize, name: &str) -> Result<&'r str, String> {
    record
        .get(idx)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| format!("missing {name}"))
}

fn number(record: &StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let raw = field(record, idx, name)?;
    raw.parse::<f64>()
        .map_err(|_| format!("unparseable {name} `{raw}`"))
}

fn timestamp(
    parser: &mut TimestampParser,
    record: &StringRecord,
    idx: usize,
) -> Result<Result<chrono::NaiveDateTime, String>, IngestError> {
    let raw = match field(record, idx, "timestamp") {
        Ok(raw) => raw,
        Err(e) => return Ok(Err(e)),
    };
    match parser.parse(raw) {
        Ok(ts) => Ok(Ok(ts)),
        Err(TimestampError::Malformed(s)) => Ok(Err(format!("unparseable timestamp `{s}`"))),
        Err(TimestampError::NeedsDate(s)) => Err(IngestError::MissingSessionDate(s)),
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn channel_fields(
    record: &StringRecord,
    cols: [usize; 3],
    ts: chrono::NaiveDateTime,
) -> Result<ChannelSample, String> {
    let rsrp = number(record, cols[0], "rsrp")?;
    let rsrq = number(record, cols[1], "rsrq")?;
    let snr = number(record, cols[2], "snr")?;
    ChannelSample::check_bounds(rsrp, rsrq, snr)?;
    Ok(ChannelSample {
        timestamp: ts,
        rsrp,
        rsrq,
        snr,
    })
}

/// Reads a channel-metric CSV log. Rows with unparseable values or metrics
/// outside the sanity bounds are rejected and recorded in the report.
pub fn parse_channel_log<R: Read>(
    source: R,
    schema: &ChannelSchema,
) -> Result<(Vec<ChannelSample>, ParseReport), IngestError> {
    let mut rdr = reader(source);
    let header = rdr.headers()?.clone();
    let ts_col = require_column("channel", &header, &schema.timestamp)?;
    let rsrp_col = require_column("channel", &header, &schema.rsrp)?;
    let rsrq_col = require_column("channel", &header, &schema.rsrq)?;
    let snr_col = require_column("channel", &header, &schema.snr)?;

    let mut parser = TimestampParser::new(schema.session_date);
    let mut report = ParseReport::new("channel");
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        report.rows_read += 1;
        let row = timestamp(&mut parser, &record, ts_col)?
            .and_then(|ts| channel_fields(&record, [rsrp_col, rsrq_col, snr_col], ts));
        match row {
            Ok(sample) => samples.push(sample),
            Err(reason) => report.reject(line, reason),
        }
    }
    report.accepted = samples.len();
    report.finish();
    Ok((samples, report))
}

/// Parses channel-log rows one line at a time, for line-oriented input.
#[derive(Debug, Clone)]
pub struct ChannelLineParser {
    /// timestamp, rsrp, rsrq, snr
    cols: [usize; 4],
    timestamps: TimestampParser,
}

impl ChannelLineParser {
    /// Locates the columns in a CSV header line.
    pub fn from_header(header: &str, schema: &ChannelSchema) -> Result<Self, IngestError> {
        let record = single_record(header).map_err(|reason| IngestError::InvalidRow { row: 1, reason })?;
        Ok(Self {
            cols: [
                require_column("channel", &record, &schema.timestamp)?,
                require_column("channel", &record, &schema.rsrp)?,
                require_column("channel", &record, &schema.rsrq)?,
                require_column("channel", &record, &schema.snr)?,
            ],
            timestamps: TimestampParser::new(schema.session_date),
        })
    }

    /// Columns in the order `timestamp,rsrp,rsrq,snr`.
    pub fn positional(session_date: Option<NaiveDate>) -> Self {
        Self {
            cols: [0, 1, 2, 3],
            timestamps: TimestampParser::new(session_date),
        }
    }

    pub fn parse_line(&mut self, line: &str) -> Result<ChannelSample, String> {
        let record = single_record(line)?;
        let raw = field(&record, self.cols[0], "timestamp")?;
        let ts = match self.timestamps.parse(raw) {
            Ok(ts) => ts,
            Err(TimestampError::Malformed(s)) => return Err(format!("unparseable timestamp `{s}`")),
            Err(TimestampError::NeedsDate(s)) => {
                return Err(format!("clock-only timestamp `{s}` needs a session date"))
            }
        };
        channel_fields(&record, [self.cols[1], self.cols[2], self.cols[3]], ts)
    }
}

fn single_record(line: &str) -> Result<StringRecord, String> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(line.as_bytes());
    match rdr.records().next() {
        Some(Ok(record)) => Ok(record),
        Some(Err(e)) => Err(format!("malformed CSV: {e}")),
        None => Err("empty line".into()),
    }
}

/// Reads a player-side CSV log. Unknown quality labels reject the row.
pub fn parse_qoe_log<R: Read>(
    source: R,
    schema: &QoeSchema,
) -> Result<(Vec<QoeSample>, ParseReport), IngestError> {
    let mut rdr = reader(source);
    let header = rdr.headers()?.clone();
    let ts_col = require_column("qoe", &header, &schema.timestamp)?;
    let quality_col = require_column("qoe", &header, &schema.quality)?;
    let bytes_col = find_column(&header, &schema.video_bytes);
    let loaded_col = find_column(&header, &schema.loaded_pct);

    let mut parser = TimestampParser::new(schema.session_date);
    let mut report = ParseReport::new("qoe");
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        report.rows_read += 1;
        let row = timestamp(&mut parser, &record, ts_col)?.and_then(|ts| {
            let raw = field(&record, quality_col, "quality")?;
            let quality = Resolution::from_label(raw)
                .ok_or_else(|| format!("unknown quality label `{raw}`"))?;
            let video_bytes = match bytes_col {
                Some(idx) => {
                    let v = number(&record, idx, "video_bytes")?;
                    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                        return Err(format!("video_bytes {v} is not a non-negative count"));
                    }
                    Some(v as u64)
                }
                None => None,
            };
            let loaded_pct = match loaded_col {
                Some(idx) => {
                    let v = number(&record, idx, "loaded_pct")?;
                    if !(0.0..=100.0).contains(&v) {
                        return Err(format!("loaded_pct {v} outside [0, 100]"));
                    }
                    Some(v)
                }
                None => None,
            };
            Ok(QoeSample {
                timestamp: ts,
                quality,
                video_bytes,
                loaded_pct,
            })
        });
        match row {
            Ok(sample) => samples.push(sample),
            Err(reason) => report.reject(line, reason),
        }
    }
    report.accepted = samples.len();
    report.finish();
    Ok((samples, report))
}

//! Line-at-a-time prediction over channel-log rows.
//!
//! Each input line yields exactly one output line, in order: a prediction
//! event or an error event. A header line (any line naming an `rsrp` column
//! before the first data row) selects the column order and produces no
//! event; without one, columns are `timestamp,rsrp,rsrq,snr`. Blank lines
//! are skipped. A summary line closes the output.

use std::io::{BufRead, Write};
use std::time::Instant;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use qoeshift_core::ingest::{format_timestamp, ChannelLineParser, ChannelSchema, Class};
use qoeshift_core::learners::{Classifier, FeatureVector, Kind, TrainedModel};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamEvent {
    Prediction {
        line: u64,
        timestamp: String,
        rsrp: f64,
        rsrq: f64,
        snr: f64,
        class: Class,
        probability: f64,
        model: Kind,
        /// Parse plus predict, in microseconds.
        latency_us: f64,
    },
    Error {
        line: u64,
        message: String,
    },
    Summary(StreamSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    /// Data lines consumed; equals `predictions + errors`.
    pub lines: u64,
    pub predictions: u64,
    pub errors: u64,
    pub mean_latency_us: f64,
    /// Nearest-rank 99th percentile.
    pub p99_latency_us: f64,
    pub max_latency_us: f64,
    pub throughput_per_s: f64,
}

/// Nearest-rank percentile of an unsorted sample; 0 when empty.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn emit<W: Write>(out: &mut W, event: &StreamEvent) -> Result<(), CliError> {
    let line = serde_json::to_string(event).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out, "{line}")
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Usage(format!("writing output: {e}")))
}

pub fn run_stream<R: BufRead, W: Write>(
    model: &TrainedModel,
    input: R,
    mut output: W,
    session_date: Option<NaiveDate>,
) -> Result<StreamSummary, CliError> {
    let kind = model.kind();
    let mut parser: Option<ChannelLineParser> = None;
    let mut latencies = Vec::new();
    let mut errors = 0u64;
    let started = Instant::now();
    for (i, line) in input.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| CliError::Usage(format!("reading input: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        if parser.is_none() && line.to_ascii_lowercase().contains("rsrp") {
            let schema = ChannelSchema {
                session_date,
                ..Default::default()
            };
            parser = Some(ChannelLineParser::from_header(&line, &schema)?);
            continue;
        }
        let parser = parser.get_or_insert_with(|| ChannelLineParser::positional(session_date));

        let t0 = Instant::now();
        let result = parser.parse_line(&line).and_then(|s| {
            let x = FeatureVector::new(s.rsrp, s.rsrq, s.snr);
            let p = model.predict_proba(&x).map_err(|e| e.to_string())?;
            Ok((s, p))
        });
        let latency_us = t0.elapsed().as_secs_f64() * 1e6;
        let event = match result {
            Ok((s, p)) => {
                latencies.push(latency_us);
                StreamEvent::Prediction {
                    line: line_no,
                    timestamp: format_timestamp(&s.timestamp),
                    rsrp: s.rsrp,
                    rsrq: s.rsrq,
                    snr: s.snr,
                    class: if p >= 0.5 { Class::High } else { Class::Low },
                    probability: p,
                    model: kind,
                    latency_us,
                }
            }
            Err(message) => {
                errors += 1;
                StreamEvent::Error { line: line_no, message }
            }
        };
        emit(&mut output, &event)?;
    }
    let elapsed = started.elapsed().as_secs_f64();
    let predictions = latencies.len() as u64;
    let summary = StreamSummary {
        lines: predictions + errors,
        predictions,
        errors,
        mean_latency_us: if latencies.is_empty() {
            0.0
        } else {
            latencies.iter().sum::<f64>() / latencies.len() as f64
        },
        p99_latency_us: percentile(&latencies, 0.99),
        max_latency_us: latencies.iter().copied().fold(0.0, f64::max),
        throughput_per_s: if elapsed > 0.0 {
            (predictions + errors) as f64 / elapsed
        } else {
            0.0
        },
    };
    emit(&mut output, &StreamEvent::Summary(summary.clone()))?;
    Ok(summary)
}

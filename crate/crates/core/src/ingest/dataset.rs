use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::timestamp::{format_timestamp, TimestampParser};
use super::{ChannelSample, Class, IngestError, LabeledRecord, Resolution};

pub const DATASET_HEADER: [&str; 7] = ["timestamp", "rsrp", "rsrq", "snr", "quality", "ordinal", "class"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<String>,
    /// Alignment window used to produce the rows, when known.
    pub tolerance_ms: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub low: usize,
    pub high: usize,
    /// Row count per resolution label, ordered by ordinal.
    pub resolutions: BTreeMap<u8, (String, usize)>,
}

/// Aligned, labeled rows ready for correlation and training.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<LabeledRecord>,
    pub provenance: Provenance,
}

/// Wraps aligned records; fails on empty input. Duplicate timestamps are kept.
pub fn build_dataset(records: Vec<LabeledRecord>, provenance: Provenance) -> Result<Dataset, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    Ok(Dataset {
        rows: records,
        provenance,
    })
}

impl Dataset {
    pub fn rows(&self) -> &[LabeledRecord] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn features(&self) -> Vec<[f64; 3]> {
        self.rows.iter().map(LabeledRecord::features).collect()
    }

    pub fn labels(&self) -> Vec<Class> {
        self.rows.iter().map(LabeledRecord::class).collect()
    }

    pub fn ordinals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| f64::from(r.resolution.ordinal())).collect()
    }

    /// Rows at `indices`, in that order. Panics on an out-of-range index.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn summary(&self) -> DatasetSummary {
        let mut resolutions = BTreeMap::new();
        let (mut low, mut high) = (0, 0);
        for r in &self.rows {
            match r.class() {
                Class::Low => low += 1,
                Class::High => high += 1,
            }
            resolutions
                .entry(r.resolution.ordinal())
                .or_insert_with(|| (r.resolution.label(), 0))
                .1 += 1;
        }
        DatasetSummary {
            rows: self.rows.len(),
            low,
            high,
            resolutions,
        }
    }
}

/// Writes `timestamp,rsrp,rsrq,snr,quality,ordinal,class`. Decimals use the
/// shortest text that parses back to the same value.
pub fn write_dataset_csv<W: Write>(sink: W, dataset: &Dataset) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(DATASET_HEADER)?;
    for r in dataset.rows() {
        w.write_record([
            format_timestamp(&r.timestamp),
            r.rsrp.to_string(),
            r.rsrq.to_string(),
            r.snr.to_string(),
            r.resolution.label(),
            r.resolution.ordinal().to_string(),
            r.class().code().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`]. The ordinal and class
/// columns are checked against the quality label.
pub fn read_dataset_csv<R: Read>(source: R, provenance: Provenance) -> Result<Dataset, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != DATASET_HEADER {
        return Err(IngestError::MissingColumn {
            log: "dataset",
            column: DATASET_HEADER.join(","),
            header: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut ts_parser = TimestampParser::new(None);
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let bad = |reason: String| IngestError::InvalidRow { row, reason };
        let timestamp = ts_parser
            .parse(&record[0])
            .map_err(|e| bad(format!("timestamp: {e:?}")))?;
        let num = |idx: usize| -> Result<f64, IngestError> {
            record[idx]
                .parse::<f64>()
                .map_err(|_| bad(format!("{} `{}`", DATASET_HEADER[idx], &record[idx])))
        };
        let (rsrp, rsrq, snr) = (num(1)?, num(2)?, num(3)?);
        ChannelSample::check_bounds(rsrp, rsrq, snr).map_err(bad)?;
        let resolution = Resolution::from_label(&record[4])
            .ok_or_else(|| bad(format!("quality `{}`", &record[4])))?;
        if record[5].parse::<u8>().ok() != Some(resolution.ordinal()) {
            return Err(bad(format!("ordinal `{}` disagrees with {resolution}", &record[5])));
        }
        if record[6].parse::<u8>().ok() != Some(resolution.class().code()) {
            return Err(bad(format!("class `{}` disagrees with {resolution}", &record[6])));
        }
        rows.push(LabeledRecord {
            timestamp,
            rsrp,
            rsrq,
            snr,
            resolution,
        });
    }
    build_dataset(rows, provenance)
}

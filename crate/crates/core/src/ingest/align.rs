use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{ChannelSample, IngestError, LabeledRecord, QoeSample};

pub const DEFAULT_TOLERANCE_MS: i64 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignReport {
    pub tolerance_ms: i64,
    pub channel_rows: usize,
    pub qoe_rows: usize,
    pub aligned: usize,
    /// Channel rows with no player row inside the tolerance window.
    pub dropped: usize,
}

fn check_sorted<T>(
    log: &'static str,
    items: &[T],
    ts: impl Fn(&T) -> NaiveDateTime,
) -> Result<(), IngestError> {
    match items.windows(2).position(|w| ts(&w[1]) < ts(&w[0])) {
        Some(i) => Err(IngestError::Unsorted {
            log,
            position: i + 1,
        }),
        None => Ok(()),
    }
}

/// Nearest-timestamp join of channel rows onto player rows.
///
/// Every channel row takes the quality of the closest player row within
/// `tolerance` (the earlier one on equal distance). A player row may serve
/// any number of channel rows inside its window. Unmatched channel rows are
/// dropped and counted.
pub fn align(
    channel: &[ChannelSample],
    qoe: &[QoeSample],
    tolerance: Duration,
) -> Result<(Vec<LabeledRecord>, AlignReport), IngestError> {
    check_sorted("channel", channel, |c| c.timestamp)?;
    check_sorted("qoe", qoe, |q| q.timestamp)?;

    let mut out = Vec::with_capacity(channel.len());
    // first player row strictly after the current channel timestamp
    let mut next = 0usize;
    for c in channel {
        while next < qoe.len() && qoe[next].timestamp <= c.timestamp {
            next += 1;
        }
        let before = next.checked_sub(1).map(|i| (i, c.timestamp - qoe[i].timestamp));
        let after = qoe.get(next).map(|q| (next, q.timestamp - c.timestamp));
        let nearest = match (before, after) {
            (Some(b), Some(a)) => Some(if a.1 < b.1 { a } else { b }),
            (b, a) => b.or(a),
        };
        if let Some((idx, gap)) = nearest.filter(|(_, gap)| *gap <= tolerance) {
            debug_assert!(gap >= Duration::zero());
            out.push(LabeledRecord {
                timestamp: c.timestamp,
                rsrp: c.rsrp,
                rsrq: c.rsrq,
                snr: c.snr,
                resolution: qoe[idx].quality,
            });
        }
    }
    let report = AlignReport {
        tolerance_ms: tolerance.num_milliseconds(),
        channel_rows: channel.len(),
        qoe_rows: qoe.len(),
        aligned: out.len(),
        dropped: channel.len() - out.len(),
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Class, Resolution};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn at(secs: i64) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2024, 5, 1)
            .unwrap()
            .and_hms_opt(16, 9, 23)
            .unwrap()
            + Duration::milliseconds(secs)
    }

    fn ch(ms: i64) -> ChannelSample {
        ChannelSample {
            timestamp: at(ms),
            rsrp: -105.0,
            rsrq: -13.0,
            snr: 3.0,
        }
    }

    fn q(ms: i64, quality: Resolution) -> QoeSample {
        QoeSample {
            timestamp: at(ms),
            quality,
            video_bytes: None,
            loaded_pct: None,
        }
    }

    fn tol() -> Duration {
        Duration::milliseconds(DEFAULT_TOLERANCE_MS)
    }

    #[test]
    fn exact_match_joins() {
        let (rows, report) = align(&[ch(0)], &[q(0, Resolution::P2160)], tol()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].resolution, Resolution::P2160);
        assert_eq!(rows[0].class(), Class::High);
        assert_eq!(report.dropped, 0);
    }

    #[test]
    fn outside_window_is_dropped() {
        let (rows, report) = align(&[ch(7000)], &[q(0, Resolution::P2160)], tol()).unwrap();
        assert!(rows.is_empty());
        assert_eq!(report.dropped, 1);
    }

    #[test]
    fn nearest_wins_and_earlier_breaks_ties() {
        let qoe = [q(0, Resolution::P480), q(1000, Resolution::P1080)];
        let (rows, _) = align(&[ch(400), ch(500), ch(600)], &qoe, tol()).unwrap();
        let got: Vec<_> = rows.iter().map(|r| r.resolution).collect();
        assert_eq!(got, vec![Resolution::P480, Resolution::P480, Resolution::P1080]);
    }

    #[test]
    fn one_player_row_serves_its_window() {
        let (rows, _) = align(&[ch(-300), ch(0), ch(300)], &[q(0, Resolution::P720)], tol()).unwrap();
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn unsorted_input_is_an_error() {
        let err = align(&[ch(1000), ch(0)], &[q(0, Resolution::P720)], tol()).unwrap_err();
        assert!(matches!(err, IngestError::Unsorted { log: "channel", position: 1 }));
        let err = align(&[ch(0)], &[q(5, Resolution::P720), q(0, Resolution::P720)], tol()).unwrap_err();
        assert!(matches!(err, IngestError::Unsorted { log: "qoe", .. }));
    }

    proptest! {
        #[test]
        fn drop_accounting_and_monotone_output(
            mut chan in prop::collection::vec(0i64..20_000, 0..60),
            mut play in prop::collection::vec(0i64..20_000, 0..60),
            tol_ms in 0i64..2_000,
        ) {
            chan.sort_unstable();
            play.sort_unstable();
            let channel: Vec<_> = chan.iter().map(|&m| ch(m)).collect();
            let qoe: Vec<_> = play.iter().map(|&m| q(m, Resolution::P720)).collect();
            let (rows, report) = align(&channel, &qoe, Duration::milliseconds(tol_ms)).unwrap();
            prop_assert_eq!(channel.len(), rows.len() + report.dropped);
            prop_assert!(rows.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
            // brute-force: a channel row survives iff some player row is within tolerance
            let expect = chan
                .iter()
                .filter(|&&c| play.iter().any(|&p| (p - c).abs() <= tol_ms))
                .count();
            prop_assert_eq!(rows.len(), expect);
        }

        #[test]
        fn identical_timelines_join_one_to_one(mut ts in prop::collection::vec(0i64..100_000, 1..50)) {
            ts.sort_unstable();
            ts.dedup();
            let channel: Vec<_> = ts.iter().map(|&m| ch(m)).collect();
            let qoe: Vec<_> = ts.iter().map(|&m| q(m, Resolution::P1440)).collect();
            let (rows, report) = align(&channel, &qoe, Duration::zero()).unwrap();
            prop_assert_eq!(rows.len(), ts.len());
            prop_assert_eq!(report.dropped, 0);
        }
    }
}

mod common;

use chrono::{Duration, NaiveDate};
use qoeshift_core::eval::{evaluate, EvalOptions};
use qoeshift_core::ingest::{
    align, build_dataset, parse_channel_log, parse_qoe_log, read_dataset_csv, write_dataset_csv, ChannelSchema,
    Class, IngestError, Provenance, QoeSchema,
};
use qoeshift_core::learners::{Kind, LearnerSpec};
use qoeshift_core::stats::{correlate_dataset, StatsError};

const CHANNEL: &str = "\
Time,RSRP,RSRQ,SNR
16:09:23,-105,-13,3
16:09:24,-103,-13,4
16:09:25,-103,-13,4
16:09:26,-100,-12.5,6.5
16:09:27,-97,-12,9
";

const PLAYER: &str = "\
Time,Quality
16:09:23,hd2160
16:09:24,hd2160
16:09:25,hd1440
16:09:26,hd1440
16:09:27,hd1440
";

fn session() -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(2024, 5, 1)
}

#[test]
fn sample_logs_align_into_five_high_rows() {
    let ch_schema = ChannelSchema { session_date: session(), ..Default::default() };
    let q_schema = QoeSchema { session_date: session(), ..Default::default() };
    let (channel, ch_report) = parse_channel_log(CHANNEL.as_bytes(), &ch_schema).unwrap();
    let (qoe, _) = parse_qoe_log(PLAYER.as_bytes(), &q_schema).unwrap();
    assert_eq!(ch_report.rows_read, 5);
    let (records, report) = align(&channel, &qoe, Duration::milliseconds(500)).unwrap();
    assert_eq!(report.aligned, 5);
    assert_eq!(report.dropped, 0);
    let data = build_dataset(records, Provenance::default()).unwrap();
    assert!(data.labels().iter().all(|c| *c == Class::High));
    assert_eq!(data.ordinals(), vec![8.0, 8.0, 7.0, 7.0, 7.0]);

    // a single class still correlates: resolution varies between 1440p and 2160p
    let corr = correlate_dataset(&data).unwrap();
    assert!(corr.iter().all(|c| c.rho < 0.0), "{corr:?}");

    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &data).unwrap();
    let back = read_dataset_csv(buf.as_slice(), Provenance::default()).unwrap();
    assert_eq!(back.rows(), data.rows());
}

#[test]
fn clock_only_logs_need_a_date() {
    let err = parse_channel_log(CHANNEL.as_bytes(), &ChannelSchema::default()).unwrap_err();
    assert!(matches!(err, IngestError::MissingSessionDate { .. }), "{err:?}");
}

#[test]
fn one_resolution_has_no_correlation() {
    let player = PLAYER.replace("hd2160", "hd1440");
    let schema = QoeSchema { session_date: session(), ..Default::default() };
    let ch_schema = ChannelSchema { session_date: session(), ..Default::default() };
    let (channel, _) = parse_channel_log(CHANNEL.as_bytes(), &ch_schema).unwrap();
    let (qoe, _) = parse_qoe_log(player.as_bytes(), &schema).unwrap();
    let (records, _) = align(&channel, &qoe, Duration::milliseconds(500)).unwrap();
    let data = build_dataset(records, Provenance::default()).unwrap();
    assert!(matches!(correlate_dataset(&data), Err(StatsError::ZeroVariance(_))));
}

fn synthetic_dataset(n: usize) -> qoeshift_core::ingest::Dataset {
    let (x, y) = common::synthetic(n, 0.7, 5);
    let mut csv = String::from("timestamp,rsrp,rsrq,snr,quality,ordinal,class\n");
    for (i, (v, c)) in x.iter().zip(&y).enumerate() {
        let (q, o) = if *c == Class::High { ("hd720", 5) } else { ("medium", 3) };
        csv.push_str(&format!(
            "2024-05-01T10:{:02}:{:02}.000,{},{},{},{q},{o},{}\n",
            i / 60 % 60,
            i % 60,
            v.0[0],
            v.0[1],
            v.0[2],
            c.code()
        ));
    }
    read_dataset_csv(csv.as_bytes(), Provenance::default()).unwrap()
}

#[test]
fn evaluation_reports_are_reproducible() {
    let data = synthetic_dataset(400);
    let options = EvalOptions { k: 5, test_fraction: 0.2, seed: 42 };
    for kind in [Kind::DecisionTree, Kind::RandomForest, Kind::Stacking] {
        let spec = LearnerSpec::default_for(kind);
        let a = serde_json::to_string(&evaluate(&spec, &data, &options).unwrap()).unwrap();
        let b = serde_json::to_string(&evaluate(&spec, &data, &options).unwrap()).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn evaluation_counts_add_up() {
    let data = synthetic_dataset(500);
    let options = EvalOptions::default();
    let report = evaluate(&LearnerSpec::default_for(Kind::GradientBoosting), &data, &options).unwrap();
    assert_eq!(report.holdout.n_train + report.holdout.n_test, 500);
    assert_eq!(report.holdout.n_test, 100);
    assert_eq!(report.holdout.confusion.total(), 100);
    assert_eq!(report.cross_validation.folds.len(), 5);
    let tested: u64 = report.cross_validation.folds.iter().map(|f| f.confusion.total()).sum();
    assert_eq!(tested, 400);
    assert!(report.holdout.metrics.accuracy > 0.75, "{}", report.holdout.metrics.accuracy);
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn qoeshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qoeshift")).args(args).output().unwrap()
}

fn qoeshift_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qoeshift"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Dataset CSV of `n` rows whose class follows SNR with some noise.
fn write_dataset(path: &Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("timestamp,rsrp,rsrq,snr,quality,ordinal,class\n");
    for i in 0..n {
        let snr: f64 = rng.random_range(-5.0..30.0);
        let rsrp = (-115.0 + snr + rng.random_range(-6.0..6.0)).clamp(-150.0, -45.0);
        let rsrq = -14.0 + 0.1 * snr;
        let high = snr + rng.random_range(-4.0..4.0) > 8.0;
        let (q, o, c) = if high { ("hd1080", 6, 1) } else { ("large", 4, 0) };
        csv.push_str(&format!(
            "2024-05-01T10:{:02}:{:02}.000,{rsrp:.2},{rsrq:.2},{snr:.2},{q},{o},{c}\n",
            i / 60 % 60,
            i % 60
        ));
    }
    fs::write(path, csv).unwrap();
}

struct Logs {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Logs {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        fs::write(root.join("channel.csv"), CHANNEL).unwrap();
        fs::write(root.join("player.csv"), PLAYER).unwrap();
        Logs { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

#[test]
fn ingest_sample_logs() {
    let logs = Logs::new();
    let out = logs.path("aligned.csv");
    let report = logs.path("ingest.json");
    let o = qoeshift(&[
        "ingest",
        "--channel",
        s(&logs.path("channel.csv")),
        "--qoe",
        s(&logs.path("player.csv")),
        "-o",
        s(&out),
        "--report",
        s(&report),
        "--session-date",
        "2024-05-01",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ends_with(",1")), "{csv}");
    assert!(rows[0].starts_with("2024-05-01T16:09:23"), "{csv}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["alignment"]["aligned"], 5);
}

#[test]
fn ingest_errors_exit_with_usage_code() {
    let logs = Logs::new();
    let out = logs.path("aligned.csv");
    let missing = qoeshift(&[
        "ingest",
        "--channel",
        s(&logs.path("channel.csv")),
        "--qoe",
        s(&logs.path("nope.csv")),
        "-o",
        s(&out),
        "--session-date",
        "2024-05-01",
    ]);
    assert_eq!(missing.status.code(), Some(2));
    let undated = qoeshift(&[
        "ingest",
        "--channel",
        s(&logs.path("channel.csv")),
        "--qoe",
        s(&logs.path("player.csv")),
        "-o",
        s(&out),
    ]);
    assert_eq!(undated.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn ingest_without_overlap_is_a_domain_error() {
    let logs = Logs::new();
    fs::write(logs.path("late.csv"), PLAYER.replace("16:09", "18:09")).unwrap();
    let o = qoeshift(&[
        "ingest",
        "--channel",
        s(&logs.path("channel.csv")),
        "--qoe",
        s(&logs.path("late.csv")),
        "-o",
        s(&logs.path("aligned.csv")),
        "--session-date",
        "2024-05-01",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_mistakes_exit_2() {
    assert_eq!(qoeshift(&[]).status.code(), Some(2));
    assert_eq!(qoeshift(&["train", "--dataset", "x.csv", "--model", "knn", "-o", "m.qsm"]).status.code(), Some(2));
    let o = qoeshift(&["predict", "--model", "m.qsm", "--rsrp", "abc", "--rsrq", "-10", "--snr", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(qoeshift(&["--help"]).status.code(), Some(0));
}

#[test]
fn correlate_single_resolution_exits_3() {
    let logs = Logs::new();
    let ds = logs.path("flat.csv");
    fs::write(
        &ds,
        "timestamp,rsrp,rsrq,snr,quality,ordinal,class\n\
         2024-05-01T16:09:23.000,-105,-13,3,hd1080,6,1\n\
         2024-05-01T16:09:24.000,-100,-12,5,hd1080,6,1\n\
         2024-05-01T16:09:25.000,-95,-11,7,hd1080,6,1\n",
    )
    .unwrap();
    let o = qoeshift(&["correlate", "--dataset", s(&ds)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn correlate_prints_three_metrics() {
    let logs = Logs::new();
    let ds = logs.path("ds.csv");
    write_dataset(&ds, 300, 1);
    let o = qoeshift(&["correlate", "--dataset", s(&ds)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for metric in ["RSRP", "RSRQ", "SNR"] {
        assert!(text.contains(&format!("| {metric} |")), "{text}");
    }
    let json = qoeshift(&["--format", "json", "correlate", "--dataset", s(&ds)]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v.to_string().contains("SNR"));
}

#[test]
fn train_predict_and_stream() {
    let logs = Logs::new();
    let ds = logs.path("ds.csv");
    write_dataset(&ds, 400, 2);
    let model = logs.path("dt.qsm");
    let o = qoeshift(&["train", "--dataset", s(&ds), "--model", "dt", "-o", s(&model)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let high = qoeshift(&["predict", "--model", s(&model), "--rsrp", "-90", "--rsrq", "-11", "--snr", "25"]);
    assert!(stdout(&high).starts_with("High"), "{}", stdout(&high));
    let low = qoeshift(&["predict", "--model", s(&model), "--rsrp", "-120", "--rsrq", "-15", "--snr", "-3"]);
    assert!(stdout(&low).starts_with("Low"), "{}", stdout(&low));

    let input = "2024-05-01T10:00:00,-90,-11,25\n2024-05-01T10:00:01,-120,-15,-3\n2024-05-01T10:00:02,-100,-12,8\n";
    let o = qoeshift_stdin(&["stream", "--model", s(&model)], input);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[..3].iter().all(|v| v["type"] == "prediction"));
    assert_eq!(lines[0]["class"], "high");
    assert_eq!(lines[1]["class"], "low");
    assert_eq!(lines[3]["type"], "summary");
    assert_eq!(lines[3]["predictions"], 3);

    let bad = "Time,RSRP,RSRQ,SNR\n10:00:00,-90,-11,25\n10:00:01,-90,oops,25\n10:00:02,-120,-15,-3\n";
    let o = qoeshift_stdin(&["stream", "--model", s(&model), "--session-date", "2024-05-01"], bad);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let types: Vec<&str> = lines.iter().map(|v| v["type"].as_str().unwrap()).collect();
    assert_eq!(types, ["prediction", "error", "prediction", "summary"]);
    assert_eq!(lines[1]["line"], 3);
    assert_eq!(lines[3]["errors"], 1);
}

#[test]
fn corrupt_model_is_rejected() {
    let logs = Logs::new();
    let model = logs.path("broken.qsm");
    fs::write(&model, "{\"format_version\": 1, \"kind\": \"mlp\"").unwrap();
    let o = qoeshift(&["predict", "--model", s(&model), "--rsrp", "-90", "--rsrq", "-11", "--snr", "25"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_is_byte_identical_across_runs() {
    let logs = Logs::new();
    let ds = logs.path("ds.csv");
    write_dataset(&ds, 300, 3);
    let run = |dir: &str| {
        let out = logs.path(dir);
        let o = qoeshift(&["--seed", "9", "evaluate", "--dataset", s(&ds), "--model", "rf", "--out-dir", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for name in ["rf.report.json", "rf.confusion.csv", "rf.confusion.svg", "scores.md", "scores.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let o = qoeshift(&["report", s(&a.join("rf.report.json"))]);
    assert!(stdout(&o).contains("| Random Forest |"), "{}", stdout(&o));
}

#[test]
fn evaluate_with_too_many_folds_exits_3() {
    let logs = Logs::new();
    let ds = logs.path("small.csv");
    write_dataset(&ds, 30, 4);
    let o = qoeshift(&["evaluate", "--dataset", s(&ds), "--model", "dt", "--k", "20"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let logs = Logs::new();
    let ds = logs.path("ds.csv");
    write_dataset(&ds, 200, 5);
    let cfg = logs.path("q.toml");
    fs::write(&cfg, "seed = 5\nmax_depth = 1\n").unwrap();
    let shallow = logs.path("shallow.qsm");
    let o = qoeshift(&["--config", s(&cfg), "train", "--dataset", s(&ds), "--model", "dt", "-o", s(&shallow)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&shallow).unwrap()).unwrap();
    assert_eq!(v["seed"], 5);
    let text = v.to_string();
    let deeper = logs.path("deeper.qsm");
    qoeshift(&["--config", s(&cfg), "train", "--dataset", s(&ds), "--model", "dt", "--max-depth", "4", "-o", s(&deeper)]);
    assert!(fs::read(&deeper).unwrap().len() > text.len());

    fs::write(&cfg, "sed = 5\n").unwrap();
    let o = qoeshift(&["--config", s(&cfg), "correlate", "--dataset", s(&ds)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ingest_column_flags_override_matching() {
    let logs = Logs::new();
    fs::write(logs.path("odd.csv"), CHANNEL.replace("Time,RSRP,RSRQ,SNR", "when,p,q,sinr_db")).unwrap();
    let (odd, player) = (logs.path("odd.csv"), logs.path("player.csv"));
    let base = [
        "ingest",
        "--channel",
        s(&odd),
        "--qoe",
        s(&player),
        "--session-date",
        "2024-05-01",
        "-o",
    ];
    let out = logs.path("aligned.csv");
    let mut args: Vec<&str> = base.to_vec();
    args.push(s(&out));
    assert_eq!(qoeshift(&args).status.code(), Some(2));
    args.extend(["--time-column", "when", "--rsrp-column", "p", "--rsrq-column", "q", "--snr-column", "sinr_db"]);
    // the player log still says `Time`, which no longer matches
    assert_eq!(qoeshift(&args).status.code(), Some(2));
    fs::write(logs.path("player.csv"), PLAYER.replace("Time,", "when,")).unwrap();
    let o = qoeshift(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 6);
}

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use qoeshift_core::eval::{self, render, Averaging, EvalOptions, EvalReport, MeanMetrics};
use qoeshift_core::ingest::{
    self, AlignReport, ChannelSchema, Dataset, DatasetSummary, ParseReport, Provenance, QoeSchema,
    DEFAULT_TOLERANCE_MS,
};
use qoeshift_core::learners::{Classifier, FeatureVector, Kind, Learner, LearnerSpec};
use qoeshift_core::persist::{self, ModelFile};
use qoeshift_core::stats;

use crate::config::Settings;
use crate::error::CliError;
use crate::{CorrelateArgs, EvaluateArgs, Format, IngestArgs, PredictArgs, ReportArgs, StreamArgs, TrainArgs};

pub struct Context {
    pub seed: u64,
    pub format: Format,
    pub settings: Settings,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn out_err(e: io::Error) -> CliError {
    CliError::Usage(format!("writing output: {e}"))
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn session_date(settings: &Settings) -> Result<Option<NaiveDate>, CliError> {
    settings
        .session_date
        .as_deref()
        .map(|s| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|_| CliError::Usage(format!("session date `{s}` is not YYYY-MM-DD")))
        })
        .transpose()
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let provenance = Provenance {
        sources: vec![path.display().to_string()],
        tolerance_ms: None,
    };
    Ok(ingest::read_dataset_csv(open(path)?, provenance)?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestReport {
    pub channel: ParseReport,
    pub qoe: ParseReport,
    pub alignment: AlignReport,
    pub dataset: DatasetSummary,
}

pub fn ingest<W: Write>(ctx: &Context, args: &IngestArgs, out: &mut W) -> Result<(), CliError> {
    let date = session_date(&ctx.settings)?;
    let tolerance_ms = ctx.settings.tolerance_ms.unwrap_or(DEFAULT_TOLERANCE_MS);
    if tolerance_ms < 0 {
        return Err(CliError::Usage("tolerance must not be negative".into()));
    }
    let channel_source = open(&args.channel)?;
    let qoe_source = open(&args.qoe)?;
    let cols = &args.columns;
    let channel_schema = ChannelSchema::default();
    let channel_schema = ChannelSchema {
        timestamp: column(&cols.time_column, channel_schema.timestamp),
        rsrp: column(&cols.rsrp_column, channel_schema.rsrp),
        rsrq: column(&cols.rsrq_column, channel_schema.rsrq),
        snr: column(&cols.snr_column, channel_schema.snr),
        session_date: date,
    };
    let qoe_schema = QoeSchema::default();
    let qoe_schema = QoeSchema {
        timestamp: column(&cols.time_column, qoe_schema.timestamp),
        quality: column(&cols.quality_column, qoe_schema.quality),
        session_date: date,
        ..qoe_schema
    };
    let (channel, channel_report) = ingest::parse_channel_log(channel_source, &channel_schema)?;
    let (qoe, qoe_report) = ingest::parse_qoe_log(qoe_source, &qoe_schema)?;
    let (records, alignment) = ingest::align(&channel, &qoe, chrono::Duration::milliseconds(tolerance_ms))?;
    if records.is_empty() {
        return Err(CliError::Domain(format!(
            "empty alignment: no player row has a channel row within {tolerance_ms} ms"
        )));
    }
    let provenance = Provenance {
        sources: vec![args.channel.display().to_string(), args.qoe.display().to_string()],
        tolerance_ms: Some(tolerance_ms),
    };
    let dataset = ingest::build_dataset(records, provenance)?;
    let mut buf = Vec::new();
    ingest::write_dataset_csv(&mut buf, &dataset)?;
    write_file(&args.output, &buf)?;

    let report = IngestReport {
        channel: channel_report,
        qoe: qoe_report,
        alignment,
        dataset: dataset.summary(),
    };
    if let Some(path) = &args.report {
        write_file(path, json_pretty(&report)?.as_bytes())?;
    }
    let text = match ctx.format {
        Format::Json => json_pretty(&report)?,
        Format::Csv => {
            let mut s = String::from("item,count\n");
            for (k, v) in ingest_counts(&report) {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
        Format::Md => {
            let mut s = String::from("| Item | Count |\n|---|---|\n");
            for (k, v) in ingest_counts(&report) {
                s.push_str(&format!("| {k} | {v} |\n"));
            }
            s.push_str(&format!("\nWrote {}\n", args.output.display()));
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(out_err)
}

fn column(flag: &Option<String>, defaults: Vec<String>) -> Vec<String> {
    flag.as_ref().map_or(defaults, |name| vec![name.clone()])
}

fn ingest_counts(r: &IngestReport) -> Vec<(&'static str, usize)> {
    vec![
        ("channel rows read", r.channel.rows_read),
        ("channel rows rejected", r.channel.rejected),
        ("player rows read", r.qoe.rows_read),
        ("player rows rejected", r.qoe.rejected),
        ("aligned rows", r.alignment.aligned),
        ("player rows without a channel match", r.alignment.dropped),
        ("low-resolution rows", r.dataset.low),
        ("high-resolution rows", r.dataset.high),
    ]
}

pub fn correlate<W: Write>(ctx: &Context, args: &CorrelateArgs, out: &mut W) -> Result<(), CliError> {
    let data = load_dataset(&args.dataset)?;
    let results = stats::correlate_dataset(&data)?;
    let text = match ctx.format {
        Format::Json => json_pretty(&results)?,
        Format::Csv => {
            let mut s = String::from("metric,rho,p_value,n\n");
            for r in &results {
                s.push_str(&format!("{},{},{},{}\n", r.metric, r.rho, r.formatted_p_value(), r.n));
            }
            s
        }
        Format::Md => {
            let mut s = String::from("| Metric | Spearman rho | p-value | n |\n|---|---|---|---|\n");
            for r in &results {
                s.push_str(&format!("| {} | {:.7} | {} | {} |\n", r.metric, r.rho, r.formatted_p_value(), r.n));
            }
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(out_err)
}

fn spec_for(kind: Kind, settings: &Settings) -> LearnerSpec {
    let mut spec = LearnerSpec::default_for(kind);
    settings.apply(&mut spec);
    spec
}

fn features(data: &Dataset) -> Vec<FeatureVector> {
    data.features().into_iter().map(FeatureVector).collect()
}

pub fn train<W: Write>(ctx: &Context, args: &TrainArgs, out: &mut W) -> Result<(), CliError> {
    let data = load_dataset(&args.dataset)?;
    let spec = spec_for(args.model, &ctx.settings);
    let x = features(&data);
    let y = data.labels();
    let model = spec.fit(&x, &y, ctx.seed)?;
    let hits = x
        .iter()
        .zip(&y)
        .filter(|(v, c)| model.predict(v).map(|p| p == **c).unwrap_or(false))
        .count();
    let accuracy = hits as f64 / x.len() as f64;
    let file = ModelFile::new(model, x.len(), ctx.seed);
    let bytes = persist::save_path(&file, &args.output)?;

    #[derive(Serialize)]
    struct TrainSummary<'a> {
        kind: Kind,
        rows: usize,
        seed: u64,
        training_accuracy: f64,
        model_file: String,
        bytes: usize,
        learner: &'a LearnerSpec,
    }
    let summary = TrainSummary {
        kind: args.model,
        rows: x.len(),
        seed: ctx.seed,
        training_accuracy: accuracy,
        model_file: args.output.display().to_string(),
        bytes,
        learner: &spec,
    };
    let text = match ctx.format {
        Format::Json => json_pretty(&summary)?,
        Format::Csv => format!(
            "kind,rows,seed,training_accuracy,model_file\n{},{},{},{},{}\n",
            summary.kind, summary.rows, summary.seed, summary.training_accuracy, summary.model_file
        ),
        Format::Md => format!(
            "Trained {} on {} rows (seed {}); training accuracy {:.4}\nWrote {} ({} bytes)\n",
            args.model.display_name(),
            summary.rows,
            summary.seed,
            accuracy,
            summary.model_file,
            bytes
        ),
    };
    out.write_all(text.as_bytes()).map_err(out_err)
}

fn score_rows(reports: &[EvalReport]) -> Vec<(String, MeanMetrics)> {
    reports
        .iter()
        .map(|r| (r.classifier.clone(), r.cross_validation.mean))
        .collect()
}

fn render_scores(format: Format, reports: &[EvalReport]) -> Result<String, CliError> {
    let rows = score_rows(reports);
    Ok(match format {
        Format::Json => json_pretty(&reports)?,
        Format::Csv => render::score_table_csv(&rows),
        Format::Md => format!(
            "Weighted average\n\n{}\nMacro average\n\n{}",
            render::score_table_markdown(&rows, Averaging::Weighted),
            render::score_table_markdown(&rows, Averaging::Macro)
        ),
    })
}

fn write_artifacts(dir: &Path, reports: &[EvalReport], write_reports: bool) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for r in reports {
        let stem = r.kind.short_name();
        if write_reports {
            write_file(&dir.join(format!("{stem}.report.json")), json_pretty(r)?.as_bytes())?;
        }
        let cm = &r.holdout.confusion;
        write_file(&dir.join(format!("{stem}.confusion.csv")), render::confusion_csv(cm).as_bytes())?;
        let title = format!("{} (hold-out)", r.classifier);
        write_file(
            &dir.join(format!("{stem}.confusion.svg")),
            render::confusion_svg(cm, &title).as_bytes(),
        )?;
    }
    let rows = score_rows(reports);
    let md = format!(
        "Weighted average\n\n{}\nMacro average\n\n{}",
        render::score_table_markdown(&rows, Averaging::Weighted),
        render::score_table_markdown(&rows, Averaging::Macro)
    );
    write_file(&dir.join("scores.md"), md.as_bytes())?;
    write_file(&dir.join("scores.csv"), render::score_table_csv(&rows).as_bytes())
}

pub fn evaluate<W: Write>(ctx: &Context, args: &EvaluateArgs, out: &mut W) -> Result<(), CliError> {
    let data = load_dataset(&args.dataset)?;
    let options = EvalOptions {
        k: ctx.settings.k.unwrap_or(5),
        test_fraction: ctx.settings.test_fraction.unwrap_or(0.2),
        seed: ctx.seed,
    };
    let kinds: Vec<Kind> = match args.model {
        Some(k) if !args.all => vec![k],
        _ => Kind::ALL.to_vec(),
    };
    let reports = kinds
        .iter()
        .map(|&k| eval::evaluate(&spec_for(k, &ctx.settings), &data, &options))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = &args.out_dir {
        write_artifacts(dir, &reports, true)?;
    }
    out.write_all(render_scores(ctx.format, &reports)?.as_bytes())
        .map_err(out_err)
}

pub fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    persist::load(BufReader::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn predict<W: Write>(ctx: &Context, args: &PredictArgs, out: &mut W) -> Result<(), CliError> {
    let file = load_model(&args.model)?;
    let x = FeatureVector::new(args.rsrp, args.rsrq, args.snr);
    let p = file.model.predict_proba(&x)?;
    let class = file.model.predict(&x)?;
    let line = match ctx.format {
        Format::Json => format!(
            "{}\n",
            serde_json::json!({ "class": class, "probability": p, "model": file.kind })
        ),
        Format::Csv => format!("{class},{p}\n"),
        Format::Md => format!("{class} (probability of High {p:.6}, model {})\n", file.kind),
    };
    out.write_all(line.as_bytes()).map_err(out_err)
}

pub fn stream<W: Write>(ctx: &Context, args: &StreamArgs, out: &mut W) -> Result<(), CliError> {
    let file = load_model(&args.model)?;
    let date = session_date(&ctx.settings)?;
    let stdin_marker = PathBuf::from("-");
    let input: Box<dyn io::BufRead> = if args.input == stdin_marker {
        Box::new(io::stdin().lock())
    } else {
        Box::new(open(&args.input)?)
    };
    match &args.output {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::io(path, e))?;
            crate::stream::run_stream(&file.model, input, BufWriter::new(f), date)?;
        }
        None => {
            crate::stream::run_stream(&file.model, input, out, date)?;
        }
    }
    Ok(())
}

pub fn report<W: Write>(ctx: &Context, args: &ReportArgs, out: &mut W) -> Result<(), CliError> {
    let reports = args
        .reports
        .iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<EvalReport>(&text)
                .map_err(|e| CliError::Usage(format!("{}: not an evaluation report: {e}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = &args.out_dir {
        write_artifacts(dir, &reports, false)?;
    }
    out.write_all(render_scores(ctx.format, &reports)?.as_bytes())
        .map_err(out_err)
}

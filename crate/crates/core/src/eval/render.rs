//! Text renderings of evaluation results: markdown and CSV score tables,
//! confusion matrices as CSV and SVG heatmaps.

use std::fmt::Write;

use super::{Averaging, ConfusionMatrix, MeanMetrics};

const CLASS_LABELS: [&str; 2] = ["High Res.", "Low Res."];

/// One table row per classifier, columns Accuracy, Precision, Recall,
/// F-score, two decimals.
pub fn score_table_markdown(rows: &[(String, MeanMetrics)], averaging: Averaging) -> String {
    let mut out = String::from("| Classifier | Accuracy | Precision | Recall | F-score |\n");
    out.push_str("|---|---|---|---|---|\n");
    for (name, m) in rows {
        let a = m.averages(averaging);
        let _ = writeln!(
            out,
            "| {name} | {:.2} | {:.2} | {:.2} | {:.2} |",
            m.accuracy, a.precision, a.recall, a.f_score
        );
    }
    out
}

/// Long-format CSV: one line per classifier and averaging.
pub fn score_table_csv(rows: &[(String, MeanMetrics)]) -> String {
    let mut out = String::from("classifier,averaging,accuracy,precision,recall,f_score\n");
    for (name, m) in rows {
        for (label, averaging) in [("weighted", Averaging::Weighted), ("macro", Averaging::Macro)] {
            let a = m.averages(averaging);
            let _ = writeln!(
                out,
                "{},{label},{:.2},{:.2},{:.2},{:.2}",
                csv_field(name),
                m.accuracy,
                a.precision,
                a.recall,
                a.f_score
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Row-normalized confusion matrix, actual class per row.
pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let pct = cm.row_percentages();
    let mut out = String::from("actual,predicted High Res.,predicted Low Res.\n");
    for (label, row) in CLASS_LABELS.iter().zip(pct) {
        let _ = writeln!(out, "{label},{:.2}%,{:.2}%", row[0], row[1]);
    }
    out
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// 2×2 heatmap of row percentages; darker cells hold larger shares.
pub fn confusion_svg(cm: &ConfusionMatrix, title: &str) -> String {
    const CELL: u32 = 140;
    const LEFT: u32 = 110;
    const TOP: u32 = 60;
    let pct = cm.row_percentages();
    let width = LEFT + 2 * CELL + 20;
    let height = TOP + 2 * CELL + 50;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        r#"  <text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + CELL,
        escape_xml(title)
    );
    for (r, row) in pct.iter().enumerate() {
        for (c, value) in row.iter().enumerate() {
            let x = LEFT + c as u32 * CELL;
            let y = TOP + r as u32 * CELL;
            let shade = (255.0 - 2.0 * value).round().clamp(55.0, 255.0) as u8;
            let ink = if *value > 50.0 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                out,
                r##"  <rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},255)" stroke="#333333"/>"##
            );
            let _ = writeln!(
                out,
                r#"  <text x="{}" y="{}" text-anchor="middle" font-size="18" fill="{ink}">{value:.2}%</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 6
            );
        }
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="end" font-size="13">{}</text>"#,
            LEFT - 8,
            TOP + r as u32 * CELL + CELL / 2 + 5,
            CLASS_LABELS[r]
        );
    }
    for (c, label) in CLASS_LABELS.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="middle" font-size="13">{label}</text>"#,
            LEFT + c as u32 * CELL + CELL / 2,
            TOP + 2 * CELL + 20
        );
    }
    let _ = writeln!(
        out,
        r#"  <text x="{}" y="{}" text-anchor="middle" font-size="12">Predicted label</text>"#,
        LEFT + CELL,
        TOP + 2 * CELL + 40
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Averages;

    #[test]
    fn confusion_csv_has_two_decimal_percentages() {
        let cm = ConfusionMatrix { tp: 2, fn_: 1, fp: 0, tn: 4 };
        assert_eq!(
            confusion_csv(&cm),
            "actual,predicted High Res.,predicted Low Res.\nHigh Res.,66.67%,33.33%\nLow Res.,0.00%,100.00%\n"
        );
    }

    #[test]
    fn svg_shows_every_cell() {
        let cm = ConfusionMatrix { tp: 2, fn_: 1, fp: 0, tn: 4 };
        let svg = confusion_svg(&cm, "DT <indoor>");
        for cell in ["66.67%", "33.33%", "0.00%", "100.00%", "DT &lt;indoor&gt;"] {
            assert!(svg.contains(cell), "{cell} missing");
        }
    }

    #[test]
    fn markdown_rows_use_two_decimals() {
        let m = MeanMetrics {
            accuracy: 0.7712,
            macro_avg: Averages::default(),
            weighted: Averages {
                precision: 0.775,
                recall: 0.7712,
                f_score: 0.7701,
            },
        };
        let table = score_table_markdown(&[("Decision Tree".into(), m)], Averaging::Weighted);
        assert!(table.ends_with("| Decision Tree | 0.77 | 0.78 | 0.77 | 0.77 |\n"), "{table}");
        let csv = score_table_csv(&[("Voting: Soft, v2".into(), m)]);
        assert!(csv.contains("\"Voting: Soft, v2\",weighted,0.77,0.78,0.77,0.77\n"), "{csv}");
        assert!(csv.contains(",macro,0.77,0.00,0.00,0.00\n"), "{csv}");
    }
}

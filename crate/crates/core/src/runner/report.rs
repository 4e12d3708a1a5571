//! Results table in markdown, CSV or JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One model's row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub label: String,
    pub architecture: String,
    pub parameters: String,
    pub meteor: Option<f64>,
    pub rouge1: Option<f64>,
    pub bertscore: Option<f64>,
    pub bleu: Option<f64>,
    pub training_time_s: Option<f64>,
    pub inference_time_s: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Markdown,
    Csv,
    Json,
}

impl TableFormat {
    pub const ALL: [TableFormat; 3] = [TableFormat::Markdown, TableFormat::Csv, TableFormat::Json];

    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Markdown => "md",
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown format {other:?} (expected markdown, csv or json)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no rows to render")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub const HEADERS: [&str; 10] = [
    "Model",
    "Architecture",
    "Parameters",
    "METEOR",
    "ROUGE-1",
    "BERTScore",
    "BLEU",
    "Training time(s)",
    "Inference time(s)",
    "Samples",
];

fn metrics(row: &ResultsRow) -> [Option<f64>; 4] {
    [row.meteor, row.rouge1, row.bertscore, row.bleu]
}

fn metric(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn seconds(v: f64, grouped: bool) -> String {
    let whole = v.round() as u64;
    if !grouped {
        return whole.to_string();
    }
    let digits = whole.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn cells(row: &ResultsRow, grouped: bool) -> Vec<String> {
    let mut out = vec![row.label.clone(), row.architecture.clone(), row.parameters.clone()];
    out.extend(metrics(row).map(metric));
    out.push(row.training_time_s.map_or_else(|| "-".into(), |t| seconds(t, grouped)));
    out.push(seconds(row.inference_time_s, grouped));
    out.push(row.sample_count.to_string());
    out
}

fn markdown(rows: &[ResultsRow]) -> String {
    // column maxima compare the printed values, so ties after rounding
    // are bolded together
    let best: Vec<Option<String>> = (0..4)
        .map(|col| {
            rows.iter()
                .filter_map(|r| metrics(r)[col])
                .max_by(f64::total_cmp)
                .map(|v| metric(Some(v)))
        })
        .collect();
    let escape = |s: &str| s.replace('|', "\\|");
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", HEADERS.join(" | "));
    let _ = writeln!(out, "|---|---|---|---:|---:|---:|---:|---:|---:|---:|");
    for row in rows {
        let mut cells = cells(row, true);
        for (col, best) in best.iter().enumerate() {
            let cell = &mut cells[3 + col];
            if best.as_deref() == Some(cell.as_str()) {
                *cell = format!("**{cell}**");
            }
        }
        let cells: Vec<String> = cells.iter().map(|c| escape(c)).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}

fn csv_table(rows: &[ResultsRow]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADERS)?;
    for row in rows {
        w.write_record(cells(row, false))?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 strings"))
}

/// Render rows in the given format. Markdown bolds the best value in each
/// metric column.
pub fn render_table(rows: &[ResultsRow], format: TableFormat) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(match format {
        TableFormat::Markdown => markdown(rows),
        TableFormat::Csv => csv_table(rows)?,
        TableFormat::Json => serde_json::to_string_pretty(rows)? + "\n",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(label: &str, meteor: f64, rouge1: f64) -> ResultsRow {
        ResultsRow {
            label: label.into(),
            architecture: "Decoder-only".into(),
            parameters: "70B".into(),
            meteor: Some(meteor),
            rouge1: Some(rouge1),
            bertscore: Some(0.5652),
            bleu: None,
            training_time_s: Some(141211.0),
            inference_time_s: 27292.4,
            sample_count: 1000,
        }
    }

    #[test]
    fn markdown_literals_and_grouping() {
        let md = render_table(&[row("FT LLaMA(v3)", 0.3222, 0.4993)], TableFormat::Markdown).unwrap();
        let line = md.lines().nth(2).unwrap();
        assert_eq!(
            line,
            "| FT LLaMA(v3) | Decoder-only | 70B | **0.3222** | **0.4993** | **0.5652** | - | 141,211 | 27,292 | 1000 |"
        );
        assert!(md.starts_with("| Model | Architecture | Parameters | METEOR | ROUGE-1 | BERTScore | BLEU |"));
    }

    #[test]
    fn bold_follows_column_maxima() {
        let md = render_table(&[row("A", 0.4, 0.1), row("B", 0.2, 0.3)], TableFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert!(lines[2].contains("**0.4000**") && !lines[2].contains("**0.1000**"));
        assert!(lines[3].contains("**0.3000**") && !lines[3].contains("**0.2000**"));
    }

    #[test]
    fn csv_round_trip() {
        let rows = [row("A, with comma", 0.123456, 0.5), row("B", 0.2, 0.3)];
        let text = render_table(&rows, TableFormat::Csv).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), HEADERS);
        let parsed: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(&parsed[0][0], "A, with comma");
        assert_eq!(parsed[0][3].parse::<f64>().unwrap(), 0.1235);
        assert_eq!(&parsed[0][6], "-");
        assert_eq!(&parsed[0][7], "141211");
        assert_eq!(parsed[1][4].parse::<f64>().unwrap(), 0.3);
    }

    #[test]
    fn json_round_trip_and_empty() {
        let rows = vec![row("A", 0.1, 0.2)];
        let text = render_table(&rows, TableFormat::Json).unwrap();
        assert_eq!(serde_json::from_str::<Vec<ResultsRow>>(&text).unwrap(), rows);
        assert!(matches!(render_table(&[], TableFormat::Csv), Err(ReportError::Empty)));
    }

    #[test]
    fn seconds_formatting() {
        assert_eq!(seconds(4251.0, true), "4,251");
        assert_eq!(seconds(60.4, true), "60");
        assert_eq!(seconds(1234567.0, true), "1,234,567");
        assert_eq!(seconds(0.2, true), "0");
    }
}

use std::fmt::Write as _;

use crate::harness::HarnessError;
use crate::solvers::{ReportRow, ReportSummary, ThresholdHit, TrainingReport};

pub const COLUMNS: [&str; 5] = ["epoch", "env_steps", "wall_clock_ms", "episode_return", "eval_return"];

const SUMMARY_TAG: &str = "# summary:";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// Renders a report as CSV. `header` lines are written first, each prefixed
/// with `# `; the summary follows the rows as a single comment line.
pub fn write_report(report: &TrainingReport, header: &[String]) -> Result<String, HarnessError> {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        w.serialize(row).map_err(|e| HarnessError::Runtime(format!("csv: {e}")))?;
    }
    if report.rows.is_empty() {
        w.write_record(COLUMNS).map_err(|e| HarnessError::Runtime(format!("csv: {e}")))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| HarnessError::Runtime(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    let s = &report.summary;
    let t = s.threshold;
    let _ = writeln!(
        out,
        "{SUMMARY_TAG} best_eval_return={} reference_value={} final_greedy_value={} threshold_epoch={} threshold_env_steps={} threshold_wall_clock_ms={}",
        opt(s.best_eval_return),
        opt(s.reference_value),
        opt(s.final_greedy_value),
        opt(t.map(|t| t.epoch)),
        opt(t.map(|t| t.env_steps)),
        opt(t.and_then(|t| t.wall_clock_ms)),
    );
    Ok(out)
}

/// Lines that are not comments: the column header and the rows.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>, HarnessError> {
    if value == "-" {
        return Ok(None);
    }
    value
        .parse()
        .map(Some)
        .map_err(|_| HarnessError::Config(format!("report summary: bad value `{value}` for {key}")))
}

/// Parses a report written by [`write_report`].
pub fn read_report(text: &str) -> Result<TrainingReport, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| HarnessError::Config(format!("report: {e}")))?
        .clone();
    if headers.iter().ne(COLUMNS) {
        return Err(HarnessError::Config(format!(
            "report: expected columns {}",
            COLUMNS.join(",")
        )));
    }
    let mut rows = Vec::new();
    for r in reader.deserialize::<ReportRow>() {
        rows.push(r.map_err(|e| HarnessError::Config(format!("report: {e}")))?);
    }
    let mut summary = ReportSummary::default();
    let (mut epoch, mut steps, mut wall) = (None, None, None);
    if let Some(line) = text.lines().find(|l| l.starts_with(SUMMARY_TAG)) {
        for pair in line[SUMMARY_TAG.len()..].split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("report summary: malformed `{pair}`")))?;
            match k {
                "best_eval_return" => summary.best_eval_return = parse_field(k, v)?,
                "reference_value" => summary.reference_value = parse_field(k, v)?,
                "final_greedy_value" => summary.final_greedy_value = parse_field(k, v)?,
                "threshold_epoch" => epoch = parse_field(k, v)?,
                "threshold_env_steps" => steps = parse_field(k, v)?,
                "threshold_wall_clock_ms" => wall = parse_field(k, v)?,
                _ => {}
            }
        }
    }
    if let (Some(epoch), Some(env_steps)) = (epoch, steps) {
        summary.threshold = Some(ThresholdHit {
            epoch,
            env_steps,
            wall_clock_ms: wall,
        });
    }
    Ok(TrainingReport { rows, summary })
}

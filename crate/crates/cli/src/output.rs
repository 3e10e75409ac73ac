//! `eigenvalues.csv`, `summary.json` and `scatter.svg`.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use outlab_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::experiments::{RunOutput, RunSummary, TrialRecord};

pub const CSV_NAME: &str = "eigenvalues.csv";
pub const SUMMARY_NAME: &str = "summary.json";
pub const SVG_NAME: &str = "scatter.svg";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Bulk,
    Outlier,
}

impl PointKind {
    fn as_str(self) -> &'static str {
        match self {
            PointKind::Bulk => "bulk",
            PointKind::Outlier => "outlier",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub trial: u64,
    pub re: f64,
    pub im: f64,
    pub kind: PointKind,
    pub multiplicity: usize,
}

/// Rows of one record: the dense spectrum when it was computed, with
/// eigenvalues in the search region marked as outliers; otherwise the located
/// outliers with their multiplicities.
pub fn record_rows(record: &TrialRecord, r_min: f64) -> Vec<CsvRow> {
    let row = |z: C64, kind, multiplicity| CsvRow { trial: record.trial, re: z.re, im: z.im, kind, multiplicity };
    if let Some(eigs) = &record.eigenvalues {
        let r_min = record.outliers.as_ref().map_or(r_min, |o| o.region.r_min);
        let mut sorted = eigs.clone();
        sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        sorted
            .into_iter()
            .map(|z| row(z, if z.norm() >= r_min { PointKind::Outlier } else { PointKind::Bulk }, 1))
            .collect()
    } else if let Some(report) = &record.outliers {
        report.zeros.iter().map(|z| row(z.position, PointKind::Outlier, z.multiplicity)).collect()
    } else {
        Vec::new()
    }
}

/// Writes the header and `rows`; floats carry 17 significant digits.
pub fn write_csv_rows<W: Write>(rows: &[CsvRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["trial", "re", "im", "kind", "multiplicity"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            format!("{:.16e}", r.re),
            format!("{:.16e}", r.im),
            r.kind.as_str().to_string(),
            r.multiplicity.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_rows(output: &RunOutput) -> Vec<CsvRow> {
    let r_min = 1.0 + 2.0 * output.summary.config.epsilon;
    output.records.iter().flat_map(|r| record_rows(r, r_min)).collect()
}

/// The bytes of `eigenvalues.csv` for a run.
pub fn render_csv(output: &RunOutput) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv_rows(&csv_rows(output), &mut buf)?;
    Ok(buf)
}

/// Parses an `eigenvalues.csv` stream.
pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<CsvRow>, CliError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    if header != vec!["trial", "re", "im", "kind", "multiplicity"] {
        return Err(CliError::Usage(format!("csv: unexpected header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| CliError::Usage(format!("csv: {e}")))).collect()
}

pub fn render_summary(summary: &RunSummary) -> Result<String, CliError> {
    serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(e.to_string()))
}

const SVG_SIZE: f64 = 640.0;

/// Scatter of all points with the unit circle and circles of radius
/// `n^{-1/4}` around each prediction.
pub fn render_svg(points: &[C64], predictions: &[C64], n: usize) -> String {
    let radius = (n.max(1) as f64).powf(-0.25);
    let extent = points
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .chain(predictions.iter().map(|p| p.re.abs().max(p.im.abs()) + radius))
        .filter(|v| v.is_finite())
        .fold(1.0, f64::max)
        * 1.1;
    let scale = SVG_SIZE / (2.0 * extent);
    let px = |z: C64| ((z.re + extent) * scale, (extent - z.im) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (cx, cy) = px(C64::new(0.0, 0.0));
    let _ = writeln!(s, r#"<line x1="0" y1="{cy:.2}" x2="{SVG_SIZE}" y2="{cy:.2}" stroke="lightgray"/>"#);
    let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="0" x2="{cx:.2}" y2="{SVG_SIZE}" stroke="lightgray"/>"#);
    let _ = writeln!(
        s,
        r#"<circle class="unit" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="black"/>"#,
        scale
    );
    for p in predictions {
        let (x, y) = px(*p);
        let _ = writeln!(
            s,
            r#"<circle class="prediction" cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="red"/>"#,
            radius * scale
        );
    }
    for z in points.iter().filter(|z| z.re.is_finite() && z.im.is_finite()) {
        let (x, y) = px(*z);
        let _ = writeln!(s, r#"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="1.5" fill="steelblue"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes the run's files into `dir`, creating it if needed.
pub fn write_outputs(output: &RunOutput, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    let csv_path = dir.join(CSV_NAME);
    let file = std::fs::File::create(&csv_path).map_err(io_at(&csv_path))?;
    write_csv_rows(&csv_rows(output), std::io::BufWriter::new(file))
        .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    let summary_path = dir.join(SUMMARY_NAME);
    std::fs::write(&summary_path, render_summary(&output.summary)? + "\n").map_err(io_at(&summary_path))?;
    if output.summary.config.emit_svg {
        let points: Vec<C64> = csv_rows(output).iter().map(|r| C64::new(r.re, r.im)).collect();
        let svg_path = dir.join(SVG_NAME);
        std::fs::write(&svg_path, render_svg(&points, &output.predictions, output.summary.config.n))
            .map_err(io_at(&svg_path))?;
    }
    Ok(())
}

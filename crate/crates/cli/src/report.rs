//! Report rows and their JSON/CSV serialization. Metric values are rounded
//! to six significant digits before emission, and the improvement flags
//! are computed from the rounded values so a parsed report is
//! self-consistent.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dehaze_core::metrics::{Improvement, MetricsReport};

use crate::config::{Mode, Pipeline};

/// One processed image in the batch report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub image: String,
    pub mode: Mode,
    pub pipeline: Pipeline,
    pub before: MetricsReport,
    pub after: MetricsReport,
    pub improved: Improvement,
    pub lambda_used: Option<f64>,
    pub alpha_used: Option<f64>,
    pub iters_run: Option<usize>,
    pub best_iter: Option<usize>,
    pub runtime_ms: u64,
}

/// Round to six significant digits.
pub fn sig6(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let magnitude = v.abs().log10().floor();
    let scale = 10f64.powf(5.0 - magnitude);
    (v * scale).round() / scale
}

fn round_report(r: &MetricsReport) -> MetricsReport {
    MetricsReport {
        entropy: sig6(r.entropy),
        ag: sig6(r.ag),
        gcf: sig6(r.gcf),
        colourfulness: sig6(r.colourfulness),
        emec: sig6(r.emec),
        uciqe: sig6(r.uciqe),
        rag: r.rag.map(sig6),
        cef: r.cef.map(sig6),
        f_factor: r.f_factor.map(sig6),
    }
}

impl ReportRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        image: String,
        mode: Mode,
        pipeline: Pipeline,
        before: &MetricsReport,
        after: &MetricsReport,
        lambda_used: Option<f64>,
        alpha_used: Option<f64>,
        iters_run: Option<usize>,
        best_iter: Option<usize>,
        runtime_ms: u64,
    ) -> Self {
        let before = round_report(before);
        let after = round_report(after);
        let improved = Improvement::between(&before, &after);
        Self {
            image,
            mode,
            pipeline,
            before,
            after,
            improved,
            lambda_used: lambda_used.map(sig6),
            alpha_used: alpha_used.map(sig6),
            iters_run,
            best_iter,
            runtime_ms,
        }
    }
}

/// Exact CSV column list, documented in the CLI help.
pub const CSV_HEADER: [&str; 29] = [
    "image",
    "mode",
    "pipeline",
    "entropy_before",
    "ag_before",
    "gcf_before",
    "colourfulness_before",
    "emec_before",
    "uciqe_before",
    "entropy_after",
    "ag_after",
    "gcf_after",
    "colourfulness_after",
    "emec_after",
    "uciqe_after",
    "rag",
    "cef",
    "f_factor",
    "improved_entropy",
    "improved_ag",
    "improved_gcf",
    "improved_colourfulness",
    "improved_emec",
    "improved_uciqe",
    "lambda_used",
    "alpha_used",
    "iters_run",
    "best_iter",
    "runtime_ms",
];

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_json(rows: &[ReportRow], path: &Path) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, rows)?;
    file.write_all(b"\n")
}

pub fn write_csv(rows: &[ReportRow], path: &Path) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        let mode = serde_json::to_value(row.mode).unwrap();
        let pipeline = serde_json::to_value(row.pipeline).unwrap();
        writer.write_record([
            row.image.clone(),
            mode.as_str().unwrap().to_string(),
            pipeline.as_str().unwrap().to_string(),
            row.before.entropy.to_string(),
            row.before.ag.to_string(),
            row.before.gcf.to_string(),
            row.before.colourfulness.to_string(),
            row.before.emec.to_string(),
            row.before.uciqe.to_string(),
            row.after.entropy.to_string(),
            row.after.ag.to_string(),
            row.after.gcf.to_string(),
            row.after.colourfulness.to_string(),
            row.after.emec.to_string(),
            row.after.uciqe.to_string(),
            opt_num(row.after.rag),
            opt_num(row.after.cef),
            opt_num(row.after.f_factor),
            row.improved.entropy.to_string(),
            row.improved.ag.to_string(),
            row.improved.gcf.to_string(),
            row.improved.colourfulness.to_string(),
            row.improved.emec.to_string(),
            row.improved.uciqe.to_string(),
            opt_num(row.lambda_used),
            opt_num(row.alpha_used),
            row.iters_run.map(|v| v.to_string()).unwrap_or_default(),
            row.best_iter.map(|v| v.to_string()).unwrap_or_default(),
            row.runtime_ms.to_string(),
        ])?;
    }
    writer.flush()
}

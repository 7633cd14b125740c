//! Report files: full JSON, the interpretability table as CSV and plotting
//! curves.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nprox_core::attraction::{abscissae, logistic};
use nprox_core::interp::ModelReport;
use nprox_core::proximity::Network;
use nprox_core::textio::write_atomic;

use crate::error::{io_err, CliError};
use crate::pipeline::{RunReport, CURVE_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Curves,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Curves];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "table.csv",
            ReportFormat::Curves => "curves.csv",
        }
    }
}

pub fn format_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// One row per proximity network (`I_S`, `I_P`, `I_H`), one column per model.
/// Cells read `[*]I (std)`; empty when the network could not be scored.
pub fn format_table_csv(models: &[&ModelReport]) -> String {
    let mut out = String::from("score");
    for m in models {
        write!(out, ",{}", m.model).unwrap();
    }
    out.push('\n');
    for n in Network::ALL {
        write!(out, "I_{n}").unwrap();
        for m in models {
            out.push(',');
            if let Some(r) = m.get(n) {
                let star = if r.starred() { "*" } else { "" };
                write!(out, "{star}{} ({})", r.i_score, r.js_std).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub const CURVES_HEADER: &str = "model,network,class,count,g,s,x,hit,sigmoid";

pub fn format_curves_csv(report: &RunReport) -> String {
    let xs = abscissae(CURVE_POINTS);
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for m in &report.models {
        for c in &m.curves {
            for (x, h) in xs.iter().zip(&c.hit) {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    m.report.model,
                    c.network,
                    c.class,
                    c.count,
                    c.g,
                    c.s,
                    x,
                    h,
                    logistic(c.g, c.s, *x)
                )
                .unwrap();
            }
        }
    }
    out
}

pub fn render(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => format_json(report),
        ReportFormat::Csv => {
            let models: Vec<&ModelReport> = report.models.iter().map(|m| &m.report).collect();
            format_table_csv(&models)
        }
        ReportFormat::Curves => format_curves_csv(report),
    }
}

/// Writes the report in `format` into `dir` and returns the file path.
pub fn emit_report(report: &RunReport, format: ReportFormat, dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(format.file_name());
    write_atomic(&path, render(report, format).as_bytes())?;
    Ok(path)
}

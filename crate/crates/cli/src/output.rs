use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use gwpattern::experiments::ExperimentReport;

use crate::CliError;

pub fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("values serialize"));
}

pub fn print_raw(text: &str) {
    print!("{text}");
}

/// JSON has no infinity; divergent values are written as the string "inf".
pub fn finite_or_string(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(x.to_string())
    }
}

fn write_csv<W: Write>(report: &ExperimentReport, writer: W) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in &report.rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Without `out`, the full report (or the CSV rows) goes to stdout. With
/// `out`, JSON lines are appended to that file, or CSV rows written to it, and
/// a one-line summary is printed.
pub fn emit_report(report: &ExperimentReport, out: Option<&Path>, csv: bool) -> Result<(), CliError> {
    match (out, csv) {
        (None, false) => println!("{}", report.to_json()),
        (None, true) => write_csv(report, std::io::stdout().lock())?,
        (Some(path), false) => {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            file.write_all(report.to_json_lines().as_bytes())?;
        }
        (Some(path), true) => write_csv(report, std::fs::File::create(path)?)?,
    }
    if out.is_some() {
        let verdicts: Vec<String> =
            report.verdicts.iter().map(|v| format!("{}={}", v.check, if v.passed { "pass" } else { "fail" })).collect();
        println!(
            "{} {}: {} ({})",
            report.experiment,
            if report.passed { "PASS" } else { "FAIL" },
            verdicts.join(" "),
            report.error.as_deref().unwrap_or("complete")
        );
    }
    Ok(())
}

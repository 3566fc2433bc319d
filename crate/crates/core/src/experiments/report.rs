use serde::Serialize;

use crate::numeric::compensated_sum;
use crate::offspring::OffspringDistribution;

/// Tolerance bands applied by the verdicts. The underlying limit theorems
/// carry no rate, so both bands are calibration choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bands {
    /// Allowed `|mean - reference|` in standard errors.
    pub z_band: f64,
    /// Allowed `|mean - reference| / reference`.
    pub relative_band: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Bands { z_band: 3.0, relative_band: 0.05 }
    }
}

/// One line of an experiment: statistics for one `n` (and label, e.g. `l=3`).
/// Flat so that it projects directly onto CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub n: usize,
    pub label: String,
    pub replicates: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub reference: Option<f64>,
    pub z_score: Option<f64>,
    pub relative_error: Option<f64>,
    pub error_bound: Option<f64>,
    pub exact_root_mean: Option<f64>,
    pub empirical_root_mean: Option<f64>,
    pub root_mean_std_error: Option<f64>,
    pub q50: Option<f64>,
    pub q90: Option<f64>,
    pub q95: Option<f64>,
    pub q99: Option<f64>,
    pub max: Option<f64>,
    pub passed: Option<bool>,
}

impl Row {
    pub fn new(n: usize, label: impl Into<String>) -> Self {
        Row {
            n,
            label: label.into(),
            replicates: 0,
            mean: f64::NAN,
            variance: f64::NAN,
            std_error: f64::NAN,
            reference: None,
            z_score: None,
            relative_error: None,
            error_bound: None,
            exact_root_mean: None,
            empirical_root_mean: None,
            root_mean_std_error: None,
            q50: None,
            q90: None,
            q95: None,
            q99: None,
            max: None,
            passed: None,
        }
    }

    pub(crate) fn with_summary(mut self, s: &Summary) -> Self {
        self.replicates = s.count;
        self.mean = s.mean;
        self.variance = s.variance;
        self.std_error = s.std_error;
        self
    }

    /// Compares the mean against `reference` with both bands and records the outcome.
    pub(crate) fn judge(mut self, reference: f64, bands: &Bands) -> Self {
        let diff = self.mean - reference;
        let z = z_score(diff, self.std_error.max(ROUNDING_FLOOR * reference.abs()));
        let rel = if reference != 0.0 { diff.abs() / reference.abs() } else { diff.abs() };
        self.reference = Some(reference);
        self.z_score = Some(z);
        self.relative_error = Some(rel);
        self.passed = Some(z.abs() <= bands.z_band && rel <= bands.relative_band);
        self
    }
}

/// Relative floor on standard errors, so that exact data compared with a
/// floating-point reference is not judged on rounding noise.
pub(crate) const ROUNDING_FLOOR: f64 = 1e-9;

pub(crate) fn z_score(diff: f64, std_error: f64) -> f64 {
    if std_error > 0.0 {
        diff / std_error
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(check: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { check: check.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub wall_clock_seconds: f64,
    pub threads: usize,
}

/// Structured record of one experiment run. Inputs and seed fully determine
/// every row; `metadata` is the only part that varies between reruns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub distribution: OffspringDistribution,
    pub pattern: Option<String>,
    pub n_values: Vec<usize>,
    pub parameters: serde_json::Value,
    pub replicates: usize,
    pub seed: u64,
    pub bands: Bands,
    pub calibration_note: String,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    /// False when the run aborted; rows then cover only the completed part.
    pub valid: bool,
    pub error: Option<String>,
    /// Raw per-replicate values, when the experiment emits them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    pub metadata: RunMetadata,
}

impl ExperimentReport {
    pub(crate) fn finish(&mut self) {
        self.passed = self.valid && !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One JSON object per row followed by a summary object without rows.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut value = serde_json::to_value(row).expect("rows serialize");
            value["experiment"] = serde_json::Value::String(self.experiment.clone());
            out.push_str(&value.to_string());
            out.push('\n');
        }
        let mut summary = serde_json::to_value(self).expect("reports serialize");
        if let Some(obj) = summary.as_object_mut() {
            obj.remove("rows");
            obj.remove("samples");
            obj.insert("summary".into(), serde_json::Value::Bool(true));
        }
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }

    /// True when both reports have identical inputs and rows (metadata ignored).
    pub fn same_results(&self, other: &ExperimentReport) -> bool {
        let strip = |r: &ExperimentReport| {
            let mut v = serde_json::to_value(r).expect("reports serialize");
            v.as_object_mut().map(|o| o.remove("metadata"));
            v
        };
        strip(self) == strip(other)
    }
}

/// Mean, unbiased variance and standard error, accumulated in index order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Summary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Summary { count, mean: f64::NAN, variance: f64::NAN, std_error: f64::NAN };
        }
        // constant data: report the value itself and an exact zero
        if values.iter().all(|&x| x == values[0]) {
            return Summary { count, mean: values[0], variance: 0.0, std_error: 0.0 };
        }
        let mean = compensated_sum(values.iter().copied()) / count as f64;
        let variance = if count > 1 {
            compensated_sum(values.iter().map(|x| (x - mean) * (x - mean))) / (count - 1) as f64
        } else {
            0.0
        };
        Summary { count, mean, variance, std_error: (variance / count as f64).sqrt() }
    }
}

/// Nearest-rank quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

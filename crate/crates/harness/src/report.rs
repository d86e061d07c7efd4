//! Machine-readable scenario reports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qbhardy::funcspace::expr::ext_f64;

use crate::config::{Expectation, ScenarioConfig};
use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A real that serializes non-finite values as `"inf"`, `"-inf"` or `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Real(#[serde(with = "ext_f64")] pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Error,
}

/// Where a reported extremum was searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProvenance {
    pub parameter: String,
    pub lo: Real,
    pub hi: Real,
    pub points: usize,
    pub refine_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub name: String,
    pub value: Real,
    /// Location of the extremum that produced `value`, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridProvenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: Real,
    pub rhs_constant: Real,
    pub rhs_base: Real,
    pub margin: Real,
    pub pass: bool,
}

impl Check {
    pub fn from_inequality(name: impl Into<String>, c: &qbhardy::extrap::InequalityCheck) -> Self {
        Self {
            name: name.into(),
            lhs: Real(c.lhs),
            rhs_constant: Real(c.rhs_constant),
            rhs_base: Real(c.rhs_base),
            margin: Real(c.margin),
            pass: c.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<Real>,
    pub y: Vec<Real>,
}

impl Profile {
    pub fn new(name: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> Self {
        Self {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x: points.iter().map(|p| Real(p.0)).collect(),
            y: points.iter().map(|p| Real(p.1)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub scenario: ScenarioConfig,
    pub status: Status,
    /// `status` agrees with the scenario's expectation.
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<Constant>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<Profile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall-clock time; the only field that varies between identical runs.
    pub timing_ms: f64,
}

impl ScenarioReport {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            toolkit_version: TOOLKIT_VERSION.into(),
            scenario,
            status: Status::Inconclusive,
            ok: false,
            verdicts: Vec::new(),
            constants: Vec::new(),
            checks: Vec::new(),
            profiles: Vec::new(),
            diagnostics: Vec::new(),
            error: None,
            timing_ms: 0.0,
        }
    }

    pub fn finish(&mut self, status: Status) {
        self.status = status;
        self.ok = matches!(
            (self.scenario.expect, status),
            (Expectation::Pass, Status::Pass) | (Expectation::Fail, Status::Fail)
        );
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value.0)
    }

    /// Counts against the suite: anything other than the expected outcome or an inconclusive result.
    pub fn is_failure(&self) -> bool {
        !self.ok && self.status != Status::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub ok: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub errored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub summary: SuiteSummary,
    pub reports: Vec<ScenarioReport>,
}

impl SuiteReport {
    pub fn from_reports(reports: Vec<ScenarioReport>) -> Self {
        let summary = SuiteSummary {
            total: reports.len(),
            ok: reports.iter().filter(|r| r.ok).count(),
            failed: reports.iter().filter(|r| r.is_failure()).count(),
            inconclusive: reports.iter().filter(|r| r.status == Status::Inconclusive).count(),
            errored: reports.iter().filter(|r| r.status == Status::Error).count(),
        };
        Self { schema_version: SCHEMA_VERSION, toolkit_version: TOOLKIT_VERSION.into(), summary, reports }
    }

    /// 0 when no expected outcome was missed; 3 when `strict` and something was inconclusive.
    pub fn exit_code(&self, strict: bool) -> i32 {
        if self.summary.failed > 0 {
            1
        } else if strict && self.summary.inconclusive > 0 {
            3
        } else {
            0
        }
    }
}

/// Long-format table: one row per constant and per check.
pub fn write_csv_summary<W: Write>(out: W, reports: &[ScenarioReport]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::Io { path: "csv output".into(), reason: e.to_string() };
    w.write_record(["scenario", "kind", "status", "ok", "quantity", "value", "at"]).map_err(io)?;
    for r in reports {
        let head = [r.scenario.label(), r.scenario.kind.label().to_string(), status_label(r.status), r.ok.to_string()];
        let mut wrote = false;
        for c in &r.constants {
            let at = c.at.map(|a| fmt_real(a.0)).unwrap_or_default();
            w.write_record(head.iter().cloned().chain([c.name.clone(), fmt_real(c.value.0), at])).map_err(io)?;
            wrote = true;
        }
        for c in &r.checks {
            let row = [format!("{}:margin", c.name), fmt_real(c.margin.0), String::new()];
            w.write_record(head.iter().cloned().chain(row)).map_err(io)?;
            wrote = true;
        }
        if !wrote {
            w.write_record(head.iter().cloned().chain([String::new(), String::new(), String::new()])).map_err(io)?;
        }
    }
    w.flush().map_err(|e| HarnessError::Io { path: "csv output".into(), reason: e.to_string() })
}

/// Write each profile as `<stem>.<scenario>.<profile>.csv` next to `out`.
pub fn write_profile_sidecars(out: &Path, reports: &[ScenarioReport]) -> Result<Vec<std::path::PathBuf>, HarnessError> {
    let dir = out.parent().unwrap_or_else(|| Path::new("."));
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let mut written = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        for p in &r.profiles {
            let path = dir.join(format!("{stem}.{i:03}-{}.{}.csv", sanitize(&r.scenario.label()), sanitize(&p.name)));
            let io = |e: csv::Error| HarnessError::Io { path: path.display().to_string(), reason: e.to_string() };
            let mut w = csv::Writer::from_path(&path).map_err(io)?;
            w.write_record([p.x_label.as_str(), p.y_label.as_str()]).map_err(io)?;
            for (x, y) in p.x.iter().zip(&p.y) {
                w.write_record([fmt_real(x.0), fmt_real(y.0)]).map_err(io)?;
            }
            w.flush().map_err(|e| HarnessError::Io { path: path.display().to_string(), reason: e.to_string() })?;
            written.push(path);
        }
    }
    Ok(written)
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn status_label(s: Status) -> String {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Inconclusive => "inconclusive",
        Status::Error => "error",
    }
    .into()
}

/// Full double precision; non-finite values use the `inf` sentinels.
pub fn fmt_real(v: f64) -> String {
    qbhardy::funcspace::expr::ext_real_label(v).map(str::to_string).unwrap_or_else(|| format!("{v:?}"))
}

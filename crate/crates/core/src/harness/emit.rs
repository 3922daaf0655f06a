use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::run::ComparisonReport;
use super::svg::report_chart;
use super::{HarnessError, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    /// Adds a generation-time comment to SVG output.
    pub svg_timestamp: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self { svg_timestamp: true }
    }
}

/// Writes `bytes` to a temporary file in the target directory, then renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// `method,metric,value,unit` rows.
pub fn report_csv(report: &ComparisonReport) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |method: &str, metric: &str, value: String, unit: &str| {
        w.write_record([method, metric, &value, unit])
            .map_err(|e| HarnessError::at(Stage::Report, e))
    };
    row("method", "metric", "value".into(), "unit")?;
    for r in &report.methods {
        let name = r.method.as_str();
        let Some(m) = &r.metrics else {
            row(name, "status", r.note.clone().unwrap_or_default(), "")?;
            continue;
        };
        row(name, "edge_count", m.edge_count.to_string(), "count")?;
        row(name, "tour_length", m.tour_length_m.to_string(), "m")?;
        row(name, "round_energy", m.round_energy_j.to_string(), "J")?;
        row(name, "trip_energy", m.trip_energy_j.to_string(), "J")?;
        row(name, "gamma", m.gamma.to_string(), "rounds")?;
        row(name, "residual_energy", m.residual_energy_j.to_string(), "J")?;
        row(name, "feasible", m.feasible.to_string(), "bool")?;
        row(name, "objective", m.objective.to_string(), "")?;
    }
    for s in &report.split_learning {
        let name = format!("split@{}", s.fraction);
        row(&name, "split_index", s.split_index.to_string(), "layers")?;
        row(&name, "final_accuracy", s.final_accuracy.to_string(), "fraction")?;
        row(&name, "client_time", s.client_time_s.to_string(), "s")?;
        row(&name, "client_energy", s.client_energy_j.to_string(), "J")?;
        row(&name, "client_co2", s.client_co2_g.to_string(), "g")?;
        row(&name, "server_time", s.server_time_s.to_string(), "s")?;
        row(&name, "server_energy", s.server_energy_j.to_string(), "J")?;
        row(&name, "server_co2", s.server_co2_g.to_string(), "g")?;
        row(&name, "comm_time", s.comm_time_s.to_string(), "s")?;
    }
    let p = &report.provenance;
    row("provenance", "seed", p.seed.to_string(), "")?;
    row("provenance", "config_hash", p.config_hash.clone(), "sha256")?;
    row("provenance", "tool_version", p.tool_version.clone(), "")?;
    w.into_inner().map_err(|e| HarnessError::at(Stage::Report, e.into_error()))
}

pub fn report_svg(report: &ComparisonReport, opts: EmitOptions) -> String {
    let stamp = opts.svg_timestamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    report_chart(report, stamp)
}

/// Writes `comparison.<ext>` into `out_dir` and returns its path.
pub fn emit_report(
    report: &ComparisonReport,
    format: Format,
    out_dir: &Path,
    opts: EmitOptions,
) -> Result<PathBuf, HarnessError> {
    let bytes = match format {
        Format::Csv => report_csv(report)?,
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(report).map_err(|e| HarnessError::at(Stage::Report, e))?;
            v.push(b'\n');
            v
        }
        Format::Svg => report_svg(report, opts).into_bytes(),
    };
    let path = out_dir.join(format!("comparison.{}", format.extension()));
    write_atomic(&path, &bytes)?;
    Ok(path)
}

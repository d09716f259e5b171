//! Result artifacts: a JSON document with a reproducibility block and one
//! CSV per scan series (header row, ',' separator, '.' decimal).

use std::fs;
use std::path::Path;

use fmlab_core::fit::ScanSeries;
use serde_json::{json, Map, Value};

use crate::config::Section;

pub struct CsvFile {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvFile {
    pub fn from_series(name: &str, series: &ScanSeries, param: &str, value: &str) -> Self {
        Self {
            name: name.to_string(),
            header: vec![param.to_string(), value.to_string()],
            rows: series.points().iter().map(|&(p, v)| vec![p, v]).collect(),
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub struct RunOutput {
    pub subcommand: String,
    pub results: Value,
    pub csv: Vec<CsvFile>,
    /// false when a built-in assertion or an expect_* check failed
    pub verdict_ok: bool,
}

fn section_json(section: &Section) -> Value {
    let mut m = Map::new();
    for (k, v) in section {
        m.insert(k.clone(), Value::String(v.clone()));
    }
    Value::Object(m)
}

pub fn write_artifacts(
    out_dir: &Path,
    run: &RunOutput,
    section: &Section,
    seed: u64,
    workers: usize,
) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let doc = json!({
        "subcommand": run.subcommand,
        "verdict_ok": run.verdict_ok,
        "results": run.results,
        "reproducibility": {
            "config": section_json(section),
            "seed": seed,
            "workers": workers,
            "versions": {
                "fmlab-core": env!("CARGO_PKG_VERSION"),
            },
            "timestamp": timestamp,
        },
    });
    fs::write(
        out_dir.join("result.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;
    for csv in &run.csv {
        fs::write(out_dir.join(format!("{}.csv", csv.name)), csv.render())?;
    }
    Ok(())
}

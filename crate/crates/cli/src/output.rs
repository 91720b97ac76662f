//! Tabular outputs. Column order is part of the interface.

use crate::failure::CliResult;
use clap::ValueEnum;
use serde::{Deserialize, Serialize, Serializer};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn fixed6<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.6}"))
}

fn fixed3<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.3}"))
}

fn fixed6_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => fixed6(v, s),
        None => s.serialize_str(""),
    }
}

fn de_f64<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let s = String::deserialize(d)?;
    s.trim().parse().map_err(serde::de::Error::custom)
}

/// One day of one solver. Also the row written by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub lead_day: i32,
    pub solver: String,
    #[serde(serialize_with = "fixed6", deserialize_with = "de_f64")]
    pub wmape_site: f64,
    #[serde(serialize_with = "fixed6", deserialize_with = "de_f64")]
    pub wmape_global: f64,
    #[serde(serialize_with = "fixed6", deserialize_with = "de_f64")]
    pub gap: f64,
    #[serde(serialize_with = "fixed6", deserialize_with = "de_f64")]
    pub real_fraction: f64,
    #[serde(serialize_with = "fixed3", deserialize_with = "de_f64")]
    pub elapsed_seconds: f64,
}

pub const METRICS_HEADER: &str =
    "lead_day,solver,wmape_site,wmape_global,gap,real_fraction,elapsed_seconds";

/// Each day against the final day of the same run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrospectiveRow {
    pub lead_day: i32,
    pub solver: String,
    #[serde(serialize_with = "fixed6", deserialize_with = "de_f64")]
    pub wmape_site: f64,
    #[serde(serialize_with = "fixed6", deserialize_with = "de_f64")]
    pub wmape_global: f64,
}

pub const RETROSPECTIVE_HEADER: &str = "lead_day,solver,wmape_site,wmape_global";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub orders: usize,
    pub repeat: usize,
    pub seed: u64,
    pub solver: String,
    pub lead_day: i32,
    #[serde(serialize_with = "fixed6")]
    pub wmape_site: f64,
    #[serde(serialize_with = "fixed6")]
    pub wmape_global: f64,
    #[serde(serialize_with = "fixed6")]
    pub gap: f64,
    /// Percent reduction of the site objective relative to greedy.
    #[serde(serialize_with = "fixed6_opt")]
    pub improvement_vs_greedy: Option<f64>,
    pub status: String,
    #[serde(serialize_with = "fixed3")]
    pub elapsed_seconds: f64,
    pub error: String,
}

pub const BENCHMARK_HEADER: &str = "orders,repeat,seed,solver,lead_day,wmape_site,wmape_global,gap,improvement_vs_greedy,status,elapsed_seconds,error";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSummaryRow {
    pub orders: usize,
    pub solver: String,
    pub runs: usize,
    pub failures: usize,
    #[serde(serialize_with = "fixed6")]
    pub mean_wmape_site: f64,
    #[serde(serialize_with = "fixed6")]
    pub mean_wmape_global: f64,
    #[serde(serialize_with = "fixed6")]
    pub mean_gap: f64,
    #[serde(serialize_with = "fixed6_opt")]
    pub mean_improvement_vs_greedy: Option<f64>,
    #[serde(serialize_with = "fixed3")]
    pub mean_elapsed_seconds: f64,
}

pub const BENCHMARK_SUMMARY_HEADER: &str = "orders,solver,runs,failures,mean_wmape_site,mean_wmape_global,mean_gap,mean_improvement_vs_greedy,mean_elapsed_seconds";

/// Writes `rows` to `<stem>.<ext>` atomically and returns the file name.
pub fn write_rows<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: Format,
    rows: &[T],
    header: &str,
) -> CliResult<String> {
    let name = format!("{stem}.{}", format.extension());
    let bytes = match format {
        Format::Csv => csv_bytes(rows, header)?,
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(rows)?;
            b.push(b'\n');
            b
        }
    };
    bap_core::io::write_atomic(&dir.join(&name), &bytes)?;
    Ok(name)
}

pub fn csv_bytes<T: Serialize>(rows: &[T], header: &str) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| crate::failure::Failure::io(e.to_string()))
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_round_trip() {
        let row = MetricsRow {
            lead_day: -11,
            solver: "exact".into(),
            wmape_site: 8.0 / 7.0,
            wmape_global: 0.5,
            gap: 8.0 / 7.0 - 0.5,
            real_fraction: 0.46,
            elapsed_seconds: 0.0123,
        };
        let bytes = csv_bytes(std::slice::from_ref(&row), METRICS_HEADER).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(
            text,
            "lead_day,solver,wmape_site,wmape_global,gap,real_fraction,elapsed_seconds\n\
             -11,exact,1.142857,0.500000,0.642857,0.460000,0.012\n"
        );
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let back: MetricsRow = r.deserialize().next().unwrap().unwrap();
        assert_eq!(back.lead_day, -11);
        assert!((back.wmape_site - row.wmape_site).abs() < 1e-6);
    }

    #[test]
    fn missing_improvement_is_empty() {
        let row = BenchmarkSummaryRow {
            orders: 10,
            solver: "greedy".into(),
            runs: 1,
            failures: 1,
            mean_wmape_site: 0.0,
            mean_wmape_global: 0.0,
            mean_gap: 0.0,
            mean_improvement_vs_greedy: None,
            mean_elapsed_seconds: 0.0,
        };
        let text = String::from_utf8(csv_bytes(&[row], BENCHMARK_SUMMARY_HEADER).unwrap()).unwrap();
        assert!(text.ends_with("10,greedy,1,1,0.000000,0.000000,0.000000,,0.000\n"));
    }
}

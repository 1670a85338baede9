//! On-disk formats: configuration and manifest JSON, trace and tuning-log
//! CSV, run summaries.

use std::fs;
use std::io::Write;
use std::path::Path;

use aos_core::engine::{DeParams, RunTrace};
use aos_core::tuner::{LogRow, ParameterSpace};
use aos_core::AosConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::perf::RunSummary;

/// A runnable method: AOS components plus DE parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub aos: AosConfig,
    #[serde(default)]
    pub de: DeParams,
}

impl ConfigFile {
    pub fn validate(&self) -> AppResult<()> {
        self.aos.validate().map_err(AppError::Config)?;
        self.de.validate(&self.aos.strategies).map_err(AppError::Config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub function: u32,
    #[serde(default = "one")]
    pub instance: u32,
    pub dim: usize,
}

fn one() -> u32 {
    1
}

/// Problems to run or train on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub problems: Vec<ProblemSpec>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| AppError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| AppError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn load_config(path: &Path) -> AppResult<ConfigFile> {
    let c: ConfigFile = read_json(path)?;
    c.validate()?;
    Ok(c)
}

pub fn load_space(path: &Path) -> AppResult<ParameterSpace> {
    let s: ParameterSpace = read_json(path)?;
    s.validate().map_err(AppError::Config)?;
    Ok(s)
}

pub fn load_summaries(path: &Path) -> AppResult<Vec<RunSummary>> {
    read_json(path)
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |source| AppError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// `generation,evals,best_f,app_op0..,p_op0..`, one row per generation.
pub fn write_trace<W: Write>(out: W, trace: &RunTrace, k: usize, path: &Path) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["generation".to_string(), "evals".into(), "best_f".into()];
    header.extend((0..k).map(|i| format!("app_op{i}")));
    header.extend((0..k).map(|i| format!("p_op{i}")));
    w.write_record(&header).map_err(csv_error(path))?;
    for row in &trace.rows {
        let mut rec = vec![
            row.generation.to_string(),
            row.evaluations.to_string(),
            row.best_fitness.to_string(),
        ];
        rec.extend(row.applications.iter().map(|a| a.to_string()));
        rec.extend(row.probabilities.iter().map(|p| p.to_string()));
        w.write_record(&rec).map_err(csv_error(path))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Parsed trace: header and numeric rows.
pub fn read_trace(path: &Path) -> AppResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header: Vec<String> = r.headers().map_err(csv_error(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error(path))?;
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| AppError::Usage(format!("{}: non-numeric value {v:?}", path.display())))
            })
            .collect::<AppResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// `iteration,candidate,instance,cost,alive`.
pub fn write_tuning_log(path: &Path, log: &[LogRow]) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(["iteration", "candidate", "instance", "cost", "alive"])
        .map_err(csv_error(path))?;
    for r in log {
        w.write_record([
            r.iteration.to_string(),
            r.candidate.to_string(),
            r.instance.to_string(),
            r.cost.to_string(),
            r.alive.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        for (_, aos, de) in aos_core::presets::all_presets() {
            let c = ConfigFile { aos, de };
            write_json(&path, &c).unwrap();
            assert_eq!(load_config(&path).unwrap(), c);
        }
    }

    #[test]
    fn space_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = ParameterSpace::default();
        write_json(&path, &s).unwrap();
        assert_eq!(load_space(&path).unwrap(), s);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"problems": [], "extra": 1}"#).unwrap();
        assert!(matches!(read_json::<Manifest>(&path), Err(AppError::Json { .. })));
    }
}

//! Line-delimited JSON episode and result files.
//!
//! Line 1 is a header; every following line is one record. Line numbers in
//! errors are 1-based.

use std::path::Path;

use drivebench_core::data::SampleRecord;
use drivebench_core::metrics::EpisodeResult;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::fsutil::{to_json_line, write_atomic};

pub const FORMAT_VERSION: u32 = 1;
pub const EPISODE_FORMAT: &str = "drivebench-episode";
pub const RESULTS_FORMAT: &str = "drivebench-results";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeHeader {
    pub format: String,
    pub version: u32,
    pub route_id: String,
    pub scenario: Option<String>,
    pub seed: u64,
    pub config_digest: String,
    pub controller: String,
    /// Weather tag; nothing is rendered.
    pub weather: String,
    pub records: usize,
}

impl EpisodeHeader {
    pub fn new(route_id: &str, scenario: Option<String>, seed: u64, config_digest: &str, controller: &str, records: usize) -> Self {
        Self {
            format: EPISODE_FORMAT.into(),
            version: FORMAT_VERSION,
            route_id: route_id.into(),
            scenario,
            seed,
            config_digest: config_digest.into(),
            controller: controller.into(),
            weather: "clear".into(),
            records,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsHeader {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    pub controller: String,
    pub suite: String,
    pub early_stop: Option<f64>,
}

pub fn encode_episode(header: &EpisodeHeader, records: &[SampleRecord]) -> String {
    let mut out = to_json_line(header);
    for r in records {
        out.push_str(&to_json_line(r));
    }
    out
}

pub fn write_episode(path: &Path, header: &EpisodeHeader, records: &[SampleRecord]) -> Result<()> {
    write_atomic(path, encode_episode(header, records).as_bytes())
}

pub fn read_episode(path: &Path) -> Result<(EpisodeHeader, Vec<SampleRecord>)> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let (header, records): (EpisodeHeader, Vec<SampleRecord>) = decode(path, &text)?;
    check_format(path, &header.format, EPISODE_FORMAT, header.version)?;
    if header.records != records.len() {
        return Err(HarnessError::Parse {
            path: path.into(),
            line: records.len() + 2,
            message: format!("header announces {} records, found {}", header.records, records.len()),
        });
    }
    Ok((header, records))
}

pub fn write_results(path: &Path, header: &ResultsHeader, results: &[EpisodeResult]) -> Result<()> {
    let mut out = to_json_line(header);
    for r in results {
        out.push_str(&to_json_line(r));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_results(path: &Path) -> Result<(ResultsHeader, Vec<EpisodeResult>)> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let (header, results): (ResultsHeader, Vec<EpisodeResult>) = decode(path, &text)?;
    check_format(path, &header.format, RESULTS_FORMAT, header.version)?;
    Ok((header, results))
}

fn check_format(path: &Path, format: &str, expected: &str, version: u32) -> Result<()> {
    if format != expected {
        return Err(HarnessError::Parse { path: path.into(), line: 1, message: format!("expected format '{expected}', found '{format}'") });
    }
    if version != FORMAT_VERSION {
        return Err(HarnessError::Version { path: path.into(), found: version, expected: FORMAT_VERSION });
    }
    Ok(())
}

fn decode<H: DeserializeOwned, R: DeserializeOwned>(path: &Path, text: &str) -> Result<(H, Vec<R>)> {
    let parse_err = |line: usize, message: String| HarnessError::Parse { path: path.into(), line, message };
    if !text.is_empty() && !text.ends_with('\n') {
        let line = text.lines().count();
        return Err(parse_err(line, "truncated line: missing newline".into()));
    }
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    // Check the version before the full header so old files report it.
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(first) {
        if let Some(found) = v.get("version").and_then(|x| x.as_u64()) {
            if found != u64::from(FORMAT_VERSION) {
                return Err(HarnessError::Version { path: path.into(), found: found as u32, expected: FORMAT_VERSION });
            }
        }
    }
    let header: H = serde_json::from_str(first).map_err(|e| parse_err(1, e.to_string()))?;
    let records = lines
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(i + 1, e.to_string())))
        .collect::<Result<Vec<R>>>()?;
    Ok((header, records))
}

//! Bucket index over a directory of recorded episodes, and epoch sampling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use drivebench_core::data::{classify_buckets, epoch_size_for, sample_epoch, BucketId, BucketThresholds};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode_io::{read_episode, FORMAT_VERSION};
use crate::error::{HarnessError, Result};
use crate::fsutil::{read_json, to_json_pretty, write_atomic};

pub const INDEX_FORMAT: &str = "drivebench-index";
pub const STATS_FORMAT: &str = "drivebench-stats";
pub const EPOCH_FORMAT: &str = "drivebench-epoch";

/// `index/buckets.json`. Sample ids are `<route_id>/<tick>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BucketIndex {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    /// Digest shared by the indexed episode files.
    pub dataset_digest: String,
    pub buckets: BTreeMap<BucketId, Vec<String>>,
}

/// `index/stats.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetStats {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    pub dataset_digest: String,
    pub episodes: usize,
    pub samples: usize,
    pub counts: BTreeMap<BucketId, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochList {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    pub dataset_digest: String,
    pub seed: u64,
    pub ids: Vec<String>,
}

pub fn sample_id(route_id: &str, tick: u64) -> String {
    format!("{route_id}/{tick}")
}

/// `*.jsonl` files directly under `dir`, sorted by name.
pub fn episode_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "jsonl") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Classifies every sample under `episodes_dir`. Files are scanned in
/// parallel and merged in name order.
pub fn build_index(episodes_dir: &Path, th: &BucketThresholds, config_digest: &str) -> Result<(BucketIndex, DatasetStats)> {
    let files = episode_files(episodes_dir)?;
    let per_file: Vec<(String, Vec<(BucketId, String)>)> = files
        .par_iter()
        .map(|path| {
            let (header, records) = read_episode(path)?;
            let entries = records
                .iter()
                .flat_map(|r| {
                    let id = sample_id(&r.route_id, r.tick);
                    classify_buckets(r, th).into_iter().map(move |b| (b, id.clone()))
                })
                .collect();
            Ok((header.config_digest, entries))
        })
        .collect::<Result<_>>()?;

    let mut dataset_digest: Option<String> = None;
    let mut buckets: BTreeMap<BucketId, Vec<String>> = BucketId::ALL.iter().map(|b| (*b, Vec::new())).collect();
    for (digest, entries) in per_file {
        match &dataset_digest {
            Some(d) if *d != digest => return Err(HarnessError::DigestMismatch(d.clone(), digest)),
            Some(_) => {}
            None => dataset_digest = Some(digest),
        }
        for (b, id) in entries {
            buckets.get_mut(&b).expect("all buckets present").push(id);
        }
    }
    let dataset_digest = dataset_digest.ok_or(drivebench_core::Error::EmptyDataset)?;
    let counts = buckets.iter().map(|(b, ids)| (*b, ids.len())).collect();
    let stats = DatasetStats {
        format: STATS_FORMAT.into(),
        version: FORMAT_VERSION,
        config_digest: config_digest.into(),
        dataset_digest: dataset_digest.clone(),
        episodes: files.len(),
        samples: buckets[&BucketId::All].len(),
        counts,
    };
    let index = BucketIndex { format: INDEX_FORMAT.into(), version: FORMAT_VERSION, config_digest: config_digest.into(), dataset_digest, buckets };
    Ok((index, stats))
}

pub fn write_index(dataset_dir: &Path, index: &BucketIndex, stats: &DatasetStats) -> Result<()> {
    let dir = dataset_dir.join("index");
    write_atomic(&dir.join("buckets.json"), to_json_pretty(index).as_bytes())?;
    write_atomic(&dir.join("stats.json"), to_json_pretty(stats).as_bytes())
}

pub fn read_index(dataset_dir: &Path) -> Result<BucketIndex> {
    let path = dataset_dir.join("index").join("buckets.json");
    let index: BucketIndex = read_json(&path)?;
    if index.format != INDEX_FORMAT {
        return Err(HarnessError::Parse { path, line: 1, message: format!("expected format '{INDEX_FORMAT}'") });
    }
    if index.version != FORMAT_VERSION {
        return Err(HarnessError::Version { path, found: index.version, expected: FORMAT_VERSION });
    }
    Ok(index)
}

/// Draws one epoch. Without an explicit size, the epoch is `fraction` of
/// the dataset.
pub fn draw_epoch(
    index: &BucketIndex,
    weights: &BTreeMap<BucketId, f64>,
    epoch_size: Option<usize>,
    fraction: f64,
    seed: u64,
    config_digest: &str,
) -> Result<EpochList> {
    let total = index.buckets.get(&BucketId::All).map_or(0, Vec::len);
    let size = epoch_size.unwrap_or_else(|| epoch_size_for(total, fraction));
    if size == 0 {
        return Err(HarnessError::Config("epoch size must be positive".into()));
    }
    let ids = sample_epoch(&index.buckets, weights, size, seed)?;
    Ok(EpochList {
        format: EPOCH_FORMAT.into(),
        version: FORMAT_VERSION,
        config_digest: config_digest.into(),
        dataset_digest: index.dataset_digest.clone(),
        seed,
        ids,
    })
}

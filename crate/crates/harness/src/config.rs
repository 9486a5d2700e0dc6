//! Harness configuration and its digest.

use std::collections::BTreeMap;
use std::path::Path;

use drivebench_core::data::{default_bucket_weights, AugmentLimits, BucketId, BucketThresholds, SegmentMargins};
use drivebench_core::episode::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "DRIVEBENCH_CONFIG";

/// Reference epoch reduction: 650k samples per epoch from 2.9M.
pub const REFERENCE_EPOCH_FRACTION: f64 = 650_000.0 / 2_900_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Built-in suite name or path to a route library file.
    pub routes: String,
    /// Scenario catalog file; defaults to the built-in suite named by `routes`.
    pub scenarios: Option<String>,
    pub run: RunConfig,
    pub buckets: BucketThresholds,
    pub bucket_weights: BTreeMap<BucketId, f64>,
    pub epoch_fraction: f64,
    pub augment: AugmentLimits,
    pub segments: SegmentMargins,
    /// Mixed into every episode seed.
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            routes: "demo".into(),
            scenarios: None,
            run: RunConfig::default(),
            buckets: BucketThresholds::default(),
            bucket_weights: default_bucket_weights(),
            epoch_fraction: REFERENCE_EPOCH_FRACTION,
            augment: AugmentLimits::default(),
            segments: SegmentMargins::default(),
            seed: 0,
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if !(self.epoch_fraction > 0.0 && self.epoch_fraction <= 1.0) {
            return Err(HarnessError::Config("epoch_fraction must lie in (0, 1]".into()));
        }
        if self.bucket_weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(HarnessError::Config("bucket weights must be finite and non-negative".into()));
        }
        if !(self.augment.max_shift >= 0.0 && self.augment.max_rotation >= 0.0) {
            return Err(HarnessError::Config("augmentation limits must be non-negative".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| HarnessError::Parse { path: path.into(), line: e.line(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical JSON form (object keys sorted).
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Seed used for one catalog episode.
    pub fn episode_seed(&self, catalog_seed: u64) -> u64 {
        catalog_seed.wrapping_add(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = HarnessConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: HarnessConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg: HarnessConfig = serde_json::from_str(r#"{"seed": 3, "run": {"controller": {"lookahead_max": 9.0}}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.run.controller.lookahead_max, 9.0);
        assert_eq!(cfg.run.controller.lookahead_min, 2.4);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<HarnessConfig>(r#"{"sed": 3}"#).is_err());
        assert!(serde_json::from_str::<HarnessConfig>(r#"{"run": {"expert": {"idm": {"v00": 1}}}}"#).is_err());
    }

    #[test]
    fn seed_zero_keeps_catalog_seed() {
        assert_eq!(HarnessConfig::default().episode_seed(42), 42);
    }
}

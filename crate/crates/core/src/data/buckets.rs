use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SampleRecord;
use crate::{Error, Result};

/// Rebalancing buckets. Steering buckets are named by the sign of the
/// steering angle, positive turning left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketId {
    AccelMild,
    AccelStrong,
    DecelMild,
    DecelStrong,
    StartingFromStop,
    SteerNegative,
    SteerPositive,
    VehicleLeft,
    VehicleRight,
    VehicleOncoming,
    StopSign,
    RedLight,
    Walker,
    Swerve,
    All,
}

impl BucketId {
    pub const ALL: [BucketId; 15] = [
        BucketId::AccelMild,
        BucketId::AccelStrong,
        BucketId::DecelMild,
        BucketId::DecelStrong,
        BucketId::StartingFromStop,
        BucketId::SteerNegative,
        BucketId::SteerPositive,
        BucketId::VehicleLeft,
        BucketId::VehicleRight,
        BucketId::VehicleOncoming,
        BucketId::StopSign,
        BucketId::RedLight,
        BucketId::Walker,
        BucketId::Swerve,
        BucketId::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BucketId::AccelMild => "accel_mild",
            BucketId::AccelStrong => "accel_strong",
            BucketId::DecelMild => "decel_mild",
            BucketId::DecelStrong => "decel_strong",
            BucketId::StartingFromStop => "starting_from_stop",
            BucketId::SteerNegative => "steer_negative",
            BucketId::SteerPositive => "steer_positive",
            BucketId::VehicleLeft => "vehicle_left",
            BucketId::VehicleRight => "vehicle_right",
            BucketId::VehicleOncoming => "vehicle_oncoming",
            BucketId::StopSign => "stop_sign",
            BucketId::RedLight => "red_light",
            BucketId::Walker => "walker",
            BucketId::Swerve => "swerve",
            BucketId::All => "all",
        }
    }

    pub fn is_accel(self) -> bool {
        matches!(self, BucketId::AccelMild | BucketId::AccelStrong | BucketId::DecelMild | BucketId::DecelStrong)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BucketThresholds {
    /// |a| at which the mild acceleration buckets start, m/s².
    pub accel_mild: f64,
    pub accel_strong: f64,
    /// |steer| above which a sample counts as steering, rad.
    pub steer: f64,
    pub start_speed: f64,
    pub start_accel: f64,
}

impl Default for BucketThresholds {
    fn default() -> Self {
        Self { accel_mild: 1.0, accel_strong: 2.0, steer: 0.087, start_speed: 0.1, start_accel: 0.5 }
    }
}

/// Every bucket a sample belongs to, ascending. Always contains `All`.
pub fn classify_buckets(s: &SampleRecord, th: &BucketThresholds) -> Vec<BucketId> {
    let mut out = Vec::new();
    let a = s.accel;
    if a >= th.accel_strong {
        out.push(BucketId::AccelStrong);
    } else if a >= th.accel_mild {
        out.push(BucketId::AccelMild);
    } else if a <= -th.accel_strong {
        out.push(BucketId::DecelStrong);
    } else if a <= -th.accel_mild {
        out.push(BucketId::DecelMild);
    }
    if s.starting_from_stop || (s.speed < th.start_speed && a > th.start_accel) {
        out.push(BucketId::StartingFromStop);
    }
    if s.steer < -th.steer {
        out.push(BucketId::SteerNegative);
    } else if s.steer > th.steer {
        out.push(BucketId::SteerPositive);
    }
    let f = &s.flags;
    for (on, b) in [
        (f.vehicle_left, BucketId::VehicleLeft),
        (f.vehicle_right, BucketId::VehicleRight),
        (f.vehicle_oncoming, BucketId::VehicleOncoming),
        (f.stop_sign, BucketId::StopSign),
        (f.red_light, BucketId::RedLight),
        (f.walker, BucketId::Walker),
        (s.labels.swerving, BucketId::Swerve),
    ] {
        if on {
            out.push(b);
        }
    }
    out.push(BucketId::All);
    out
}

/// Weight 1 for each event bucket and 14/9 for `All`, so that about a tenth
/// of every epoch is drawn uniformly.
pub fn default_bucket_weights() -> BTreeMap<BucketId, f64> {
    BucketId::ALL.iter().map(|&b| (b, if b == BucketId::All { 14.0 / 9.0 } else { 1.0 })).collect()
}

/// Epoch length as a fraction of the dataset, at least one sample.
pub fn epoch_size_for(dataset_len: usize, fraction: f64) -> usize {
    ((dataset_len as f64 * fraction).round() as usize).max(1)
}

/// Draws `epoch_size` items: a bucket by weight among the non-empty ones,
/// then an item uniformly within it.
pub fn sample_epoch<T: Clone>(
    index: &BTreeMap<BucketId, Vec<T>>,
    weights: &BTreeMap<BucketId, f64>,
    epoch_size: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidConfig("bucket weights must be finite and non-negative".into()));
    }
    let live: Vec<(&Vec<T>, f64)> = index
        .iter()
        .filter(|(_, items)| !items.is_empty())
        .filter_map(|(b, items)| weights.get(b).copied().filter(|w| *w > 0.0).map(|w| (items, w)))
        .collect();
    if live.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let chooser = WeightedIndex::new(live.iter().map(|(_, w)| *w)).map_err(|e| Error::InvalidConfig(alloc::format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..epoch_size)
        .map(|_| {
            let items = live[chooser.sample(&mut rng)].0;
            items[rng.random_range(0..items.len())].clone()
        })
        .collect())
}

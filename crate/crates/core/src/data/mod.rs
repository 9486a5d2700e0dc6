//! Dataset records, bucket indexing, route segmentation and augmentation.

mod augment;
mod buckets;
mod segment;

pub use augment::{augment_sample, invert_augmentation, reframe, AugmentLimits};
pub use buckets::{classify_buckets, default_bucket_weights, epoch_size_for, sample_epoch, BucketId, BucketThresholds};
pub use segment::{segment_routes, RouteSegment, SegmentMargins, SegmentMode};

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::expert::{ExpertLabels, HazardKind, SourceDirection};
use crate::geometry::Pose2D;

/// Booleans derived from the expert hazard at record time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardFlags {
    pub vehicle_front: bool,
    pub vehicle_left: bool,
    pub vehicle_right: bool,
    pub vehicle_oncoming: bool,
    pub walker: bool,
    pub red_light: bool,
    pub stop_sign: bool,
}

impl HazardFlags {
    pub fn from_labels(labels: &ExpertLabels) -> Self {
        let h = &labels.hazard;
        let vehicle = h.kind == HazardKind::LeadingVehicle;
        Self {
            vehicle_front: vehicle && h.source_direction == SourceDirection::Front,
            vehicle_left: vehicle && h.source_direction == SourceDirection::Left,
            vehicle_right: vehicle && h.source_direction == SourceDirection::Right,
            vehicle_oncoming: vehicle && h.source_direction == SourceDirection::Oncoming,
            walker: h.kind == HazardKind::Walker,
            red_light: h.kind == HazardKind::RedLight,
            stop_sign: h.kind == HazardKind::StopSign,
        }
    }
}

/// One recorded frame of expert driving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub route_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub tick: u64,
    pub sim_time: f64,
    pub pose: Pose2D,
    pub speed: f64,
    /// Longitudinal acceleration from centered differences of recorded speed.
    pub accel: f64,
    pub steer: f64,
    pub labels: ExpertLabels,
    pub flags: HazardFlags,
    pub starting_from_stop: bool,
    /// Accumulated label reframing, absent for unaugmented samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<Pose2D>,
}

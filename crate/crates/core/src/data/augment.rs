use serde::{Deserialize, Serialize};

use super::SampleRecord;
use crate::geometry::Pose2D;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentLimits {
    /// Largest lateral shift, m.
    pub max_shift: f64,
    /// Largest yaw perturbation, rad.
    pub max_rotation: f64,
}

impl Default for AugmentLimits {
    fn default() -> Self {
        Self { max_shift: 1.5, max_rotation: 20.0f64.to_radians() }
    }
}

/// Re-expresses every ego-frame label in the frame `delta`, itself given in
/// the current label frame. World-frame fields stay untouched.
pub fn reframe(sample: &SampleRecord, delta: Pose2D) -> SampleRecord {
    let mut out = sample.clone();
    let map = |pts: &mut alloc::vec::Vec<crate::geometry::Vec2>| {
        for p in pts.iter_mut() {
            *p = delta.inverse_transform_point(*p);
        }
    };
    map(&mut out.labels.path);
    map(&mut out.labels.waypoints);
    map(&mut out.labels.target_points);
    let total = sample.augmentation.unwrap_or(Pose2D::IDENTITY).compose(&delta);
    let identity = total.x.abs() < 1e-12 && total.y.abs() < 1e-12 && total.yaw.abs() < 1e-12;
    out.augmentation = (!identity).then_some(total);
    out
}

/// Shifts the label frame `shift` m to the left and rotates it by `rotation`.
pub fn augment_sample(sample: &SampleRecord, shift: f64, rotation: f64, limits: &AugmentLimits) -> Result<SampleRecord> {
    if !(shift.is_finite() && rotation.is_finite()) || shift.abs() > limits.max_shift || rotation.abs() > limits.max_rotation {
        return Err(Error::InvalidAugmentation(alloc::format!("shift {shift} m, rotation {rotation} rad")));
    }
    Ok(reframe(sample, Pose2D::new(0.0, shift, rotation)))
}

/// Undoes all recorded augmentation.
pub fn invert_augmentation(sample: &SampleRecord) -> SampleRecord {
    match sample.augmentation {
        Some(total) => reframe(sample, total.inverse()),
        None => sample.clone(),
    }
}

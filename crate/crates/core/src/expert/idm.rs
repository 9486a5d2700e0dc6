#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{Hazard, HazardKind};
use crate::{Error, Result};

/// Intelligent Driver Model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    /// Desired speed, m/s.
    pub v0: f64,
    /// Time headway, s.
    pub time_headway: f64,
    /// Minimum standstill gap, m.
    pub s0: f64,
    pub a_max: f64,
    /// Comfortable deceleration, m/s².
    pub b: f64,
    pub delta: f64,
    /// Hard braking floor, m/s².
    pub b_emergency: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { v0: 8.3, time_headway: 1.0, s0: 4.0, a_max: 2.0, b: 4.0, delta: 4.0, b_emergency: 8.0 }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.v0 > 0.0
            && self.time_headway > 0.0
            && self.s0 > 0.0
            && self.a_max > 0.0
            && self.b > 0.0
            && self.delta >= 1.0
            && self.b_emergency > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("IDM parameters must be positive with delta >= 1".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmOutput {
    pub accel: f64,
    /// Set when the hazard gap had already closed.
    pub emergency: bool,
}

/// Desired dynamic gap s*.
pub fn desired_gap(v: f64, closing_speed: f64, p: &IdmParams) -> f64 {
    p.s0 + (v * p.time_headway + v * closing_speed / (2.0 * (p.a_max * p.b).sqrt())).max(0.0)
}

pub fn idm_evaluate(v: f64, hazard: &Hazard, p: &IdmParams) -> IdmOutput {
    let free = 1.0 - (v / p.v0).powf(p.delta);
    let accel = if hazard.kind == HazardKind::None {
        p.a_max * free
    } else {
        if !(hazard.gap > 0.0) {
            return IdmOutput { accel: -p.b_emergency, emergency: true };
        }
        let ratio = desired_gap(v, hazard.closing_speed, p) / hazard.gap;
        p.a_max * (free - ratio * ratio)
    };
    IdmOutput { accel: accel.clamp(-p.b_emergency, p.a_max), emergency: false }
}

/// a = a_max·[1 − (v/v0)^δ − (s*/s)²], clamped to [−b_emergency, a_max].
pub fn idm_acceleration(v: f64, hazard: &Hazard, p: &IdmParams) -> f64 {
    idm_evaluate(v, hazard, p).accel
}
